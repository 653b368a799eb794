//! Quality metrics and convergence diagnostics.

use crate::error::{Error, Result};
use crate::image::{gaussian_taps, Image};
use crate::iteration::IterationTrace;
use crate::scalar::Real;

/// Peak signal-to-noise ratio in dB: `10 log10(peak^2 / MSE)`.
///
/// Identical images return `f64::INFINITY` as the distinguished value.
/// Both images must share dimensions and peak. The MSE is computed on the
/// unquantized floating-point samples; see [`quantize_to_8bit`] for the
/// 8-bit convention.
pub fn psnr<T: Real>(a: &Image<T>, b: &Image<T>) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.pixel_count() as f64;
    let mse = a
        .data()
        .iter()
        .zip(b.data().iter())
        .map(|(&x, &y)| {
            let d = x.to_f64c() - y.to_f64c();
            d * d
        })
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = a.peak().to_f64c();
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Snap samples onto the 8-bit grid (clamp to `[0, peak]`, 255 levels)
/// before measuring; mirrors what an 8-bit export would score.
pub fn quantize_to_8bit<T: Real>(img: &Image<T>) -> Image<T> {
    let peak = img.peak();
    let scale = peak.to_f64c() / 255.0;
    img.map(|v| {
        let q = (v.max(T::zero()).min(peak).to_f64c() / scale).round() * scale;
        T::of(q)
    })
}

/// Parameters of the mean-SSIM score.
#[derive(Debug, Clone)]
pub struct SsimParams {
    pub window_side: usize,
    pub window_std: f64,
    pub k1: f64,
    pub k2: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window_side: 11,
            window_std: 1.5,
            k1: 0.01,
            k2: 0.03,
        }
    }
}

/// Mean SSIM over all window positions fully inside the image (no
/// padding). The dynamic range is taken from the images' shared peak.
pub fn ssim<T: Real>(a: &Image<T>, b: &Image<T>, params: &SsimParams) -> Result<f64> {
    check_pair(a, b)?;
    if params.k1 <= 0.0 || params.k2 <= 0.0 {
        return Err(Error::config("SSIM k1 and k2 must be positive"));
    }
    let side = params.window_side;
    if side == 0 || side % 2 == 0 {
        return Err(Error::config("SSIM window side must be odd"));
    }
    let (h, w) = (a.height(), a.width());
    if h < side || w < side {
        return Err(Error::shape(format!(
            "image {h}x{w} smaller than the {side}x{side} SSIM window"
        )));
    }
    let radius = side / 2;
    let taps: Vec<f64> = gaussian_taps(params.window_std, radius);
    // 2D window as the separable product, normalized to sum 1.
    let mut window = vec![0.0f64; side * side];
    let mut wsum = 0.0;
    for u in 0..side {
        for v in 0..side {
            let t = taps[u] * taps[v];
            window[u * side + v] = t;
            wsum += t;
        }
    }
    for t in &mut window {
        *t /= wsum;
    }

    let range = a.peak().to_f64c();
    let c1 = (params.k1 * range) * (params.k1 * range);
    let c2 = (params.k2 * range) * (params.k2 * range);

    let mut total = 0.0;
    let mut count = 0usize;
    for r in radius..h - radius {
        for c in radius..w - radius {
            let mut mu_a = 0.0;
            let mut mu_b = 0.0;
            for u in 0..side {
                for v in 0..side {
                    let wgt = window[u * side + v];
                    mu_a += wgt * a.get(r + u - radius, c + v - radius).to_f64c();
                    mu_b += wgt * b.get(r + u - radius, c + v - radius).to_f64c();
                }
            }
            let mut var_a = 0.0;
            let mut var_b = 0.0;
            let mut cov = 0.0;
            for u in 0..side {
                for v in 0..side {
                    let wgt = window[u * side + v];
                    let da = a.get(r + u - radius, c + v - radius).to_f64c() - mu_a;
                    let db = b.get(r + u - radius, c + v - radius).to_f64c() - mu_b;
                    var_a += wgt * da * da;
                    var_b += wgt * db * db;
                    cov += wgt * da * db;
                }
            }
            let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Sum of absolute horizontal and vertical first differences.
pub fn total_variation<T: Real>(img: &Image<T>) -> f64 {
    let (h, w) = (img.height(), img.width());
    let mut tv = 0.0;
    for r in 0..h {
        for c in 0..w {
            let v = img.get(r, c).to_f64c();
            if c + 1 < w {
                tv += (img.get(r, c + 1).to_f64c() - v).abs();
            }
            if r + 1 < h {
                tv += (img.get(r + 1, c).to_f64c() - v).abs();
            }
        }
    }
    tv
}

/// Per-iteration distance-to-reference diagnostics of an iteration trace.
#[derive(Debug, Clone)]
pub struct ContractionReport {
    /// `||x_t - x*||` for every recorded iterate, starting at `x_0`.
    pub noise_norms: Vec<f64>,
    /// `||x_{t+1} - x*|| / ||x_t - x*||`, defined while the denominator is
    /// positive.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// True when every ratio is strictly below one.
    pub monotone: bool,
}

/// Measure the empirical contraction factor of a trace against a
/// reference image `x_star`.
pub fn contraction_report<T: Real>(
    trace: &IterationTrace<T>,
    x_star: &Image<T>,
) -> Result<ContractionReport> {
    let iterates = &trace.iterates;
    if iterates.is_empty() {
        return Err(Error::config("trace holds no iterates"));
    }
    if !iterates[0].same_shape(x_star) {
        return Err(Error::shape("reference does not match trace dimensions"));
    }
    let noise_norms: Vec<f64> = iterates.iter().map(|x| x.l2_distance(x_star)).collect();
    let mut ratios = Vec::new();
    for t in 0..noise_norms.len() - 1 {
        if noise_norms[t] > 0.0 {
            ratios.push(noise_norms[t + 1] / noise_norms[t]);
        }
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let monotone = !ratios.is_empty() && ratios.iter().all(|&q| q < 1.0);
    Ok(ContractionReport {
        noise_norms,
        ratios,
        max_ratio,
        monotone,
    })
}

fn check_pair<T: Real>(a: &Image<T>, b: &Image<T>) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::shape(format!(
            "{}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        )));
    }
    if a.peak() != b.peak() {
        return Err(Error::shape(format!(
            "peak mismatch: {} vs {}",
            a.peak(),
            b.peak()
        )));
    }
    Ok(())
}
