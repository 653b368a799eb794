//! Speckle-suppression loops built on the RFN operator.
//!
//! Two drivers share the trace format of the fixed-point module:
//!
//! - [`vortice_run`]: `x_{t+1} = x_t - alpha * g(x_t)`,
//! - [`speckle_focused_run`]: accumulates the extracted patterns and
//!   re-anchors on the original observation:
//!   `z_{t+1} = g(x_t) + z_t`, `v_{t+1} = y - beta * z_{t+1}`,
//!   `x_{t+1} = (1 - alpha) x_t + alpha v_{t+1}`.
//!
//! Inputs are expected in the `[0, 1]` normalized convention the
//! tomogram synthesizer produces. Iterates are never clamped; subtracting
//! the extracted pattern can overshoot slightly below zero, so the loops
//! evaluate `g` in its signum form, which coincides with the basic
//! operator on nonnegative samples and stays well-defined on dips.

use crate::error::Result;
use crate::image::Image;
use crate::iteration::{IterationTrace, StopReason};
use crate::rfn::{operator_total, RfnConfig};
use crate::scalar::Real;

/// Configuration of the despeckling loops.
#[derive(Debug, Clone)]
pub struct VorticeConfig<T: Real> {
    pub rfn: RfnConfig<T>,
    /// Step size in `(0, 1]`.
    pub alpha: f64,
    /// Accumulator scale of the speckle-focused loop, in `[0, 1]`. Zero
    /// reduces that loop to the identity trajectory.
    pub beta: f64,
    /// Early-stop threshold on `||x_{t+1} - x_t||_2`.
    pub delta: f64,
    pub max_iters: usize,
}

impl<T: Real> VorticeConfig<T> {
    pub fn new(rfn: RfnConfig<T>) -> Self {
        Self {
            rfn,
            alpha: 0.4,
            beta: 0.4,
            delta: 0.0,
            max_iters: 5,
        }
    }

    fn validate(&self) -> Result<()> {
        use crate::error::Error;
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::config(format!("beta {} outside [0, 1]", self.beta)));
        }
        if self.delta < 0.0 {
            return Err(Error::config("delta must be nonnegative"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("max_iters must be at least 1"));
        }
        Ok(())
    }
}

/// Iteratively subtract the extracted speckle pattern:
/// `x_{t+1} = x_t - alpha * g(x_t)`.
pub fn vortice_run<T: Real>(y: &Image<T>, cfg: &VorticeConfig<T>) -> Result<IterationTrace<T>> {
    cfg.validate()?;
    let alpha = T::of(cfg.alpha);
    let mut iterates = vec![y.clone()];
    let mut step_norms = Vec::new();
    let mut stopped_by = StopReason::MaxIters;
    for _ in 0..cfg.max_iters {
        let x = iterates.last().expect("non-empty");
        let g = operator_total(x, &cfg.rfn);
        let next = x.sub_scaled(&g, alpha);
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

/// Accumulator variant that reiterates over the original observation,
/// imitating the averaging of several speckle realizations.
pub fn speckle_focused_run<T: Real>(
    y: &Image<T>,
    cfg: &VorticeConfig<T>,
) -> Result<IterationTrace<T>> {
    cfg.validate()?;
    let alpha = T::of(cfg.alpha);
    let beta = T::of(cfg.beta);
    let mut iterates = vec![y.clone()];
    let mut accumulator = Image::zeros(y.height(), y.width(), y.peak());
    let mut step_norms = Vec::new();
    let mut stopped_by = StopReason::MaxIters;
    for _ in 0..cfg.max_iters {
        let x = iterates.last().expect("non-empty");
        accumulator = operator_total(x, &cfg.rfn).add(&accumulator);
        let anchored = if cfg.beta == 0.0 {
            y.clone()
        } else {
            y.sub_scaled(&accumulator, beta)
        };
        let next = x.lerp_toward(&anchored, alpha);
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

/// Degree-of-speckle estimator: `||g(x)||_1 / n`. Evaluated in the signum
/// form so unclamped iterates remain measurable.
pub fn speckle_level<T: Real>(x: &Image<T>, rfn: &RfnConfig<T>) -> f64 {
    operator_total(x, rfn).l1_norm() / x.pixel_count() as f64
}
