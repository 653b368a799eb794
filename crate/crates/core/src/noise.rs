//! Noise synthesis: AWGN, Poisson shot noise and exponential speckle.
//!
//! # Reproducibility contract
//!
//! Every generator draws from a ChaCha8 stream (`rand_chacha` 0.9, a
//! counter-based stream cipher RNG) seeded with `seed_from_u64(seed)`.
//! Samples are drawn in row-major pixel order in `f64` and then converted
//! to the image's scalar type, so the same seed reproduces the same
//! output bit-for-bit, and `f32` images see the same stream rounded.
//! Gaussian variates use the `rand_distr` ziggurat (`StandardNormal`);
//! Poisson variates use `rand_distr::Poisson`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Awgn,
    Poisson,
    Speckle,
}

/// A noise recipe as selected on the command line (`awgn:25`, `poisson`,
/// `speckle`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// AWGN standard deviation in pixel units; ignored by the other kinds.
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn parse(s: &str, seed: u64) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        match name {
            "awgn" => {
                let sigma: f64 = arg
                    .ok_or_else(|| Error::parse("awgn noise needs a sigma, e.g. awgn:25"))?
                    .parse()
                    .map_err(|_| Error::parse(format!("invalid awgn sigma in {s:?}")))?;
                if sigma < 0.0 {
                    return Err(Error::parse("awgn sigma must be nonnegative"));
                }
                Ok(NoiseSpec {
                    kind: NoiseKind::Awgn,
                    sigma,
                    seed,
                })
            }
            "poisson" => Ok(NoiseSpec {
                kind: NoiseKind::Poisson,
                sigma: 0.0,
                seed,
            }),
            "speckle" => Ok(NoiseSpec {
                kind: NoiseKind::Speckle,
                sigma: 0.0,
                seed,
            }),
            other => Err(Error::parse(format!(
                "unknown noise kind {other:?} (expected awgn, poisson or speckle)"
            ))),
        }
    }

    pub fn apply<T: Real>(&self, img: &Image<T>) -> Result<Image<T>> {
        match self.kind {
            NoiseKind::Awgn => Ok(add_awgn(img, self.sigma, self.seed)),
            NoiseKind::Poisson => add_poisson(img, self.seed),
            NoiseKind::Speckle => add_speckle(img, self.seed),
        }
    }
}

impl std::fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            NoiseKind::Awgn => write!(f, "awgn:{}", self.sigma),
            NoiseKind::Poisson => write!(f, "poisson"),
            NoiseKind::Speckle => write!(f, "speckle"),
        }
    }
}

/// Add i.i.d. zero-mean Gaussian noise of standard deviation `sigma`.
pub fn add_awgn<T: Real>(img: &Image<T>, sigma: f64, seed: u64) -> Image<T> {
    assert!(sigma >= 0.0, "sigma must be nonnegative");
    if sigma == 0.0 {
        return img.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = img
        .data()
        .iter()
        .map(|&v| {
            let z: f64 = rng.sample(StandardNormal);
            v + T::of(sigma * z)
        })
        .collect();
    Image::from_raw(img.height(), img.width(), data, img.peak())
}

/// Replace each pixel `x >= 0` with a `Poisson(x)` draw. Zero pixels stay
/// zero; a negative pixel is a domain error.
pub fn add_poisson<T: Real>(img: &Image<T>, seed: u64) -> Result<Image<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(img.pixel_count());
    for (i, &v) in img.data().iter().enumerate() {
        let lambda = v.to_f64c();
        if lambda < 0.0 {
            return Err(Error::domain(format!(
                "Poisson noise needs nonnegative pixels, found {lambda} at index {i}"
            )));
        }
        if lambda == 0.0 {
            data.push(T::zero());
            continue;
        }
        let poisson = Poisson::new(lambda)
            .map_err(|e| Error::domain(format!("Poisson({lambda}) at index {i}: {e}")))?;
        let draw: f64 = poisson.sample(&mut rng);
        data.push(T::of(draw));
    }
    Ok(Image::from_raw(img.height(), img.width(), data, img.peak()))
}

/// Multiply each nonnegative pixel by a unit-mean exponential variate,
/// i.e. each output is distributed with density `(1/x) exp(-y/x)` around
/// the clean value `x`. Implemented as the squared modulus of a circular
/// complex Gaussian with `E|z|^2 = x`.
pub fn add_speckle<T: Real>(img: &Image<T>, seed: u64) -> Result<Image<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(img.pixel_count());
    for (i, &v) in img.data().iter().enumerate() {
        let x = v.to_f64c();
        if x < 0.0 {
            return Err(Error::domain(format!(
                "speckle needs nonnegative intensities, found {x} at index {i}"
            )));
        }
        data.push(T::of(x * unit_speckle(&mut rng)));
    }
    Ok(Image::from_raw(img.height(), img.width(), data, img.peak()))
}

/// One Exp(1) variate as |a + ib|^2 with a, b ~ N(0, 1/2).
#[inline]
fn unit_speckle(rng: &mut ChaCha8Rng) -> f64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    0.5 * (a * a + b * b)
}

/// Draw `n` speckle intensities with mean `mean_x`: i.i.d. samples with
/// density `(1/x) exp(-y/x)`.
pub fn sample_speckle_intensity<T: Real>(mean_x: f64, n: usize, seed: u64) -> Result<Vec<T>> {
    if !(mean_x > 0.0) {
        return Err(Error::domain("speckle mean intensity must be positive"));
    }
    if n == 0 {
        return Err(Error::domain("sample count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| T::of(mean_x * unit_speckle(&mut rng))).collect())
}
