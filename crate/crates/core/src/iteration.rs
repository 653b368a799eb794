//! Fixed-point iteration driver (BTB).
//!
//! Wraps any [`DenoiserEngine`] in one of four update rules:
//!
//! - successive: `x_{t+1} = f(x_t)`
//! - simple:     `x_{t+1} = (1 - mu_t) x_t + mu_t f(x_t)`
//! - anchored:   `x_{t+1} = (1 - mu_t) y + mu_t f(x_t)`
//! - langevin:   simple plus `beta * e_t`, `e_t ~ N(0, I)` per pixel
//!
//! starting from `x_0 = y`. The loop runs while `t < T` and exits early
//! once `||x_{t+1} - x_t||_2` drops below `delta`. Every iterate is
//! recorded in the trace.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::engines::DenoiserEngine;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IterationMode {
    Successive,
    #[default]
    Simple,
    Anchored,
    Langevin,
}

impl std::str::FromStr for IterationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "successive" => Ok(IterationMode::Successive),
            "simple" => Ok(IterationMode::Simple),
            "anchored" => Ok(IterationMode::Anchored),
            "langevin" => Ok(IterationMode::Langevin),
            other => Err(Error::parse(format!("unknown iteration mode {other:?}"))),
        }
    }
}

/// Step-size schedule. A per-iteration list shorter than the run extends
/// with its last value.
#[derive(Debug, Clone, PartialEq)]
pub enum MuSchedule {
    Constant(f64),
    PerIteration(Vec<f64>),
}

impl MuSchedule {
    fn at(&self, t: usize) -> f64 {
        match self {
            MuSchedule::Constant(mu) => *mu,
            MuSchedule::PerIteration(list) => {
                *list.get(t).or_else(|| list.last()).expect("non-empty schedule")
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let values: &[f64] = match self {
            MuSchedule::Constant(mu) => std::slice::from_ref(mu),
            MuSchedule::PerIteration(list) => {
                if list.is_empty() {
                    return Err(Error::config("per-iteration mu schedule is empty"));
                }
                list
            }
        };
        for &mu in values {
            if !(mu > 0.0 && mu <= 1.0) {
                return Err(Error::config(format!("step size {mu} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Configuration of one iteration run.
#[derive(Debug, Clone)]
pub struct IterationConfig {
    pub mode: IterationMode,
    /// Step sizes in `(0, 1]`. Successive mode runs with an effective step
    /// of one regardless of this schedule.
    pub mu: MuSchedule,
    /// Langevin perturbation scale; zero keeps the run bit-identical to
    /// simple mode.
    pub beta: f64,
    /// Early-stop threshold on `||x_{t+1} - x_t||_2`.
    pub delta: f64,
    pub max_iters: usize,
    /// Radius used by [`check_epsilon_fixed`] callers; recorded here so a
    /// run carries its own acceptance radius.
    pub epsilon: f64,
    /// Langevin noise seed.
    pub seed: u64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            mode: IterationMode::Simple,
            mu: MuSchedule::Constant(0.8),
            beta: 0.0,
            delta: 0.0,
            max_iters: 40,
            epsilon: 0.0,
            seed: 0,
        }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be at least 1"));
        }
        if self.beta < 0.0 {
            return Err(Error::config("beta must be nonnegative"));
        }
        if self.delta < 0.0 {
            return Err(Error::config("delta must be nonnegative"));
        }
        if self.epsilon < 0.0 {
            return Err(Error::config("epsilon must be nonnegative"));
        }
        self.mu.validate()
    }

    /// Scale-aware default stopping threshold:
    /// `1e-3 * sqrt(pixel count) * peak / 255`.
    pub fn auto_delta<T: Real>(img: &Image<T>) -> f64 {
        1e-3 * (img.pixel_count() as f64).sqrt() * img.peak().to_f64c() / 255.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Delta,
    MaxIters,
}

/// Record of a full iteration run.
#[derive(Debug, Clone)]
pub struct IterationTrace<T: Real> {
    /// `x_0 ... x_final`.
    pub iterates: Vec<Image<T>>,
    /// `||x_{t+1} - x_t||_2` per update; length equals `iters_run`.
    pub step_norms: Vec<f64>,
    pub stopped_by: StopReason,
    pub iters_run: usize,
}

impl<T: Real> IterationTrace<T> {
    pub fn final_image(&self) -> &Image<T> {
        self.iterates.last().expect("trace holds x_0")
    }
}

/// Run the fixed-point iteration of `f` starting from `y`.
pub fn btb_run<T: Real>(
    y: &Image<T>,
    f: &dyn DenoiserEngine<T>,
    cfg: &IterationConfig,
) -> Result<IterationTrace<T>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut iterates = vec![y.clone()];
    let mut step_norms = Vec::new();
    let mut stopped_by = StopReason::MaxIters;

    for t in 0..cfg.max_iters {
        let x = iterates.last().expect("non-empty");
        let denoised = f.denoise(x);
        let mu = T::of(cfg.mu.at(t));
        let mut next = match cfg.mode {
            IterationMode::Successive => denoised,
            IterationMode::Simple => x.lerp_toward(&denoised, mu),
            IterationMode::Anchored => y.lerp_toward(&denoised, mu),
            IterationMode::Langevin => x.lerp_toward(&denoised, mu),
        };
        if cfg.mode == IterationMode::Langevin && cfg.beta > 0.0 {
            let beta = cfg.beta;
            next = next.map(|v| {
                let e: f64 = rng.sample(StandardNormal);
                v + T::of(beta * e)
            });
        }
        let step = next.l2_distance(x);
        iterates.push(next);
        step_norms.push(step);
        if step < cfg.delta {
            stopped_by = StopReason::Delta;
            break;
        }
    }

    let iters_run = step_norms.len();
    Ok(IterationTrace {
        iterates,
        step_norms,
        stopped_by,
        iters_run,
    })
}

/// True when `||x - f(x)||_2 <= epsilon`.
pub fn check_epsilon_fixed<T: Real>(
    x: &Image<T>,
    f: &dyn DenoiserEngine<T>,
    epsilon: f64,
) -> Result<bool> {
    if epsilon < 0.0 {
        return Err(Error::config("epsilon must be nonnegative"));
    }
    Ok(x.l2_distance(&f.denoise(x)) <= epsilon)
}
