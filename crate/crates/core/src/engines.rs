//! Pluggable single-step denoisers.
//!
//! Every engine is deterministic for fixed parameters, preserves image
//! dimensions, and maps constant images to themselves (so the fixed-point
//! set of each engine is nonempty). Engines are immutable after
//! construction and safe to call concurrently.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{convolve_cols, convolve_rows, gaussian_taps, resolve_index, Image, PaddingMode};
use crate::scalar::Real;

/// A single-step image-to-image noise reduction map.
pub trait DenoiserEngine<T: Real>: Send + Sync {
    /// Stable engine name including its parameters, e.g. `gaussian:std=1.5`.
    fn name(&self) -> String;

    /// Denoise one image. Output dimensions equal input dimensions.
    fn denoise(&self, img: &Image<T>) -> Image<T>;
}

/// Parse an engine selection string:
/// `gaussian:std=1.5`, `median:r=1`, `nlm:patch=1,search=5,h=10[,sigma=0]`.
pub fn parse_engine<T: Real>(spec: &str) -> Result<Box<dyn DenoiserEngine<T>>> {
    let (name, args) = match spec.split_once(':') {
        Some((n, a)) => (n, a),
        None => (spec, ""),
    };
    let mut kv = std::collections::BTreeMap::new();
    if !args.is_empty() {
        for part in args.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::parse(format!("expected key=value in engine spec {spec:?}")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::parse(format!("invalid number {v:?} in engine spec {spec:?}")))?;
            kv.insert(k.to_string(), v);
        }
    }
    let take = |kv: &mut std::collections::BTreeMap<String, f64>, key: &str| -> Result<f64> {
        kv.remove(key)
            .ok_or_else(|| Error::parse(format!("engine spec {spec:?} is missing {key:?}")))
    };
    let engine: Box<dyn DenoiserEngine<T>> = match name {
        "identity" => Box::new(IdentityEngine),
        "gaussian" => Box::new(GaussianEngine::new(take(&mut kv, "std")?)?),
        "median" => Box::new(MedianEngine::new(take(&mut kv, "r")? as usize)?),
        "nlm" => {
            let params = NlmParams {
                patch_radius: take(&mut kv, "patch")? as usize,
                search_radius: take(&mut kv, "search")? as usize,
                h: take(&mut kv, "h")?,
                sigma_est: kv.remove("sigma").unwrap_or(0.0),
            };
            Box::new(NlmEngine::new(params)?)
        }
        other => {
            return Err(Error::parse(format!(
                "unknown engine {other:?} (expected identity, gaussian, median or nlm)"
            )))
        }
    };
    if let Some(unused) = kv.keys().next() {
        return Err(Error::parse(format!(
            "unknown parameter {unused:?} in engine spec {spec:?}"
        )));
    }
    Ok(engine)
}

/// The identity map; useful as a trivial fixed-point engine.
#[derive(Debug, Clone, Copy)]
pub struct IdentityEngine;

impl<T: Real> DenoiserEngine<T> for IdentityEngine {
    fn name(&self) -> String {
        "identity".to_string()
    }

    fn denoise(&self, img: &Image<T>) -> Image<T> {
        img.clone()
    }
}

/// Synthetic engine with closed-form contraction: pulls every pixel
/// toward a target image at a fixed rate, `f(x) = x* + rate * (x - x*)`.
/// Used to calibrate convergence diagnostics against known behavior.
#[derive(Debug, Clone)]
pub struct AffineEngine<T: Real> {
    target: Image<T>,
    rate: T,
}

impl<T: Real> AffineEngine<T> {
    pub fn new(target: Image<T>, rate: f64) -> Self {
        Self {
            target,
            rate: T::of(rate),
        }
    }
}

impl<T: Real> DenoiserEngine<T> for AffineEngine<T> {
    fn name(&self) -> String {
        format!("affine:q={}", self.rate)
    }

    fn denoise(&self, img: &Image<T>) -> Image<T> {
        assert!(
            img.same_shape(&self.target),
            "affine engine target shape mismatch"
        );
        let rate = self.rate;
        self.target.zip_map(img, |t, x| t + rate * (x - t))
    }
}

/// Separable Gaussian blur, kernel truncated at `ceil(3 * std)` and
/// renormalized to sum one; symmetric padding.
#[derive(Debug, Clone)]
pub struct GaussianEngine {
    std: f64,
}

impl GaussianEngine {
    pub fn new(std: f64) -> Result<Self> {
        if !(std > 0.0) {
            return Err(Error::config("gaussian engine std must be positive"));
        }
        Ok(Self { std })
    }

    pub fn taps<T: Real>(&self) -> Vec<T> {
        gaussian_taps(self.std, self.std.mul_add(3.0, 0.0).ceil() as usize)
    }
}

impl<T: Real> DenoiserEngine<T> for GaussianEngine {
    fn name(&self) -> String {
        format!("gaussian:std={}", self.std)
    }

    fn denoise(&self, img: &Image<T>) -> Image<T> {
        let taps: Vec<T> = self.taps();
        let pad = PaddingMode::SymmetricReflect;
        convolve_cols(&convolve_rows(img, &taps, pad), &taps, pad)
    }
}

/// Median over the `(2r+1)^2` symmetric-padded neighborhood.
#[derive(Debug, Clone)]
pub struct MedianEngine {
    radius: usize,
}

impl MedianEngine {
    pub fn new(radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::config("median engine radius must be at least 1"));
        }
        Ok(Self { radius })
    }
}

impl<T: Real> DenoiserEngine<T> for MedianEngine {
    fn name(&self) -> String {
        format!("median:r={}", self.radius)
    }

    fn denoise(&self, img: &Image<T>) -> Image<T> {
        let (h, w) = (img.height(), img.width());
        let r = self.radius as isize;
        let side = (2 * self.radius + 1) as isize;
        let mut data = vec![T::zero(); h * w];
        data.par_chunks_mut(w).enumerate().for_each(|(row, out_row)| {
            let mut window = Vec::with_capacity((side * side) as usize);
            for (col, out) in out_row.iter_mut().enumerate() {
                window.clear();
                for dr in -r..=r {
                    let sr = resolve_index(row as isize + dr, h, PaddingMode::SymmetricReflect)
                        .expect("symmetric padding is total");
                    for dc in -r..=r {
                        let sc = resolve_index(col as isize + dc, w, PaddingMode::SymmetricReflect)
                            .expect("symmetric padding is total");
                        window.push(img.get(sr, sc));
                    }
                }
                let mid = window.len() / 2;
                window.select_nth_unstable_by(mid, |a, b| {
                    a.partial_cmp(b).expect("finite samples order totally")
                });
                *out = window[mid];
            }
        });
        Image::from_raw(h, w, data, img.peak())
    }
}

/// Non-local means parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlmParams {
    pub patch_radius: usize,
    pub search_radius: usize,
    /// Similarity bandwidth applied to the mean squared patch difference.
    pub h: f64,
    /// Noise compensation subtracted from patch distances:
    /// `w = exp(-max(d^2 - 2 sigma_est^2, 0) / h^2)`. Zero keeps the pure
    /// data-driven variant.
    pub sigma_est: f64,
}

impl Default for NlmParams {
    fn default() -> Self {
        Self {
            patch_radius: 1,
            search_radius: 5,
            h: 10.0,
            sigma_est: 0.0,
        }
    }
}

/// Non-local means: each pixel becomes the weighted mean of search-window
/// centers, weighted by patch similarity. The center's own weight is the
/// maximum of its neighbors' weights. All out-of-bounds reads use
/// symmetric padding; rows are processed in parallel.
#[derive(Debug, Clone)]
pub struct NlmEngine {
    params: NlmParams,
}

impl NlmEngine {
    pub fn new(params: NlmParams) -> Result<Self> {
        if params.patch_radius > params.search_radius {
            return Err(Error::config(
                "nlm patch radius must not exceed the search radius",
            ));
        }
        if !(params.h > 0.0) {
            return Err(Error::config("nlm bandwidth h must be positive"));
        }
        if params.sigma_est < 0.0 {
            return Err(Error::config("nlm sigma_est must be nonnegative"));
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> NlmParams {
        self.params
    }
}

impl<T: Real> DenoiserEngine<T> for NlmEngine {
    fn name(&self) -> String {
        let p = self.params;
        if p.sigma_est > 0.0 {
            format!(
                "nlm:patch={},search={},h={},sigma={}",
                p.patch_radius, p.search_radius, p.h, p.sigma_est
            )
        } else {
            format!("nlm:patch={},search={},h={}", p.patch_radius, p.search_radius, p.h)
        }
    }

    fn denoise(&self, img: &Image<T>) -> Image<T> {
        let (h, w) = (img.height(), img.width());
        let p = self.params;
        let pr = p.patch_radius as isize;
        let sr = p.search_radius as isize;
        let patch_count = ((2 * pr + 1) * (2 * pr + 1)) as f64;
        let h2 = p.h * p.h;
        let offset = 2.0 * p.sigma_est * p.sigma_est;

        // Pad once so the hot loops index directly.
        let margin = (sr + pr) as usize;
        let (ph, pw) = (h + 2 * margin, w + 2 * margin);
        let mut padded = vec![0.0f64; ph * pw];
        for r in 0..ph {
            let sr_idx = resolve_index(r as isize - margin as isize, h, PaddingMode::SymmetricReflect)
                .expect("symmetric padding is total");
            let src = img.row(sr_idx);
            for c in 0..pw {
                let sc_idx =
                    resolve_index(c as isize - margin as isize, w, PaddingMode::SymmetricReflect)
                        .expect("symmetric padding is total");
                padded[r * pw + c] = src[sc_idx].to_f64c();
            }
        }
        let at = |r: isize, c: isize| -> f64 {
            padded[(r + margin as isize) as usize * pw + (c + margin as isize) as usize]
        };

        let mut data = vec![T::zero(); h * w];
        data.par_chunks_mut(w).enumerate().for_each(|(row, out_row)| {
            for (col, out) in out_row.iter_mut().enumerate() {
                let (r0, c0) = (row as isize, col as isize);
                let mut weight_sum = 0.0;
                let mut value_sum = 0.0;
                let mut max_weight = 0.0f64;
                for dr in -sr..=sr {
                    for dc in -sr..=sr {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let (r1, c1) = (r0 + dr, c0 + dc);
                        let mut dist2 = 0.0;
                        for pr_off in -pr..=pr {
                            let a = (r0 + pr_off + margin as isize) as usize * pw;
                            let b = (r1 + pr_off + margin as isize) as usize * pw;
                            for pc_off in -pr..=pr {
                                let ca = (c0 + pc_off + margin as isize) as usize;
                                let cb = (c1 + pc_off + margin as isize) as usize;
                                let d = padded[a + ca] - padded[b + cb];
                                dist2 += d * d;
                            }
                        }
                        dist2 /= patch_count;
                        let weight = (-(dist2 - offset).max(0.0) / h2).exp();
                        max_weight = max_weight.max(weight);
                        weight_sum += weight;
                        value_sum += weight * at(r1, c1);
                    }
                }
                // Center pixel participates at the best neighbor weight.
                weight_sum += max_weight;
                value_sum += max_weight * at(r0, c0);
                *out = if weight_sum > 1e-300 {
                    T::of(value_sum / weight_sum)
                } else {
                    img.get(row, col)
                };
            }
        });
        Image::from_raw(h, w, data, img.peak())
    }
}
