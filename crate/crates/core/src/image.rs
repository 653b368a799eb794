//! Image data model and boundary-aware convolution.
//!
//! An [`Image`] is a row-major grid of real intensities plus a `peak`
//! carrying the nominal maximum of the value range (255 for 8-bit natural
//! images, 1.0 for normalized tomograms). Images are immutable after
//! construction; every operation returns a new image, so they are safe to
//! share across threads.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// How out-of-bounds samples are resolved during convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PaddingMode {
    /// Mirror about the edge, edge sample included: `[a b c] -> b a | a b c | c b`.
    #[default]
    SymmetricReflect,
    /// Out-of-bounds samples read as zero.
    Zero,
    /// Clamp to the nearest edge sample.
    Replicate,
}

/// Resolve coordinate `i` into `0..n` under the given padding mode.
/// Returns `None` when the sample reads as zero.
#[inline]
pub fn resolve_index(i: isize, n: usize, pad: PaddingMode) -> Option<usize> {
    let n = n as isize;
    if i >= 0 && i < n {
        return Some(i as usize);
    }
    match pad {
        PaddingMode::Zero => None,
        PaddingMode::Replicate => Some(i.clamp(0, n - 1) as usize),
        PaddingMode::SymmetricReflect => {
            // Fold into the period [0, 2n) of the half-sample mirror.
            let period = 2 * n;
            let mut j = i % period;
            if j < 0 {
                j += period;
            }
            if j >= n {
                j = period - 1 - j;
            }
            Some(j as usize)
        }
    }
}

/// 2D grid of real-valued intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T: Real> {
    height: usize,
    width: usize,
    data: Vec<T>,
    peak: T,
}

impl<T: Real> Image<T> {
    /// Build an image from row-major data, checking the shape and that all
    /// samples are finite.
    pub fn new(height: usize, width: usize, data: Vec<T>, peak: T) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::shape("image dimensions must be positive"));
        }
        if data.len() != height * width {
            return Err(Error::shape(format!(
                "data length {} does not match {height}x{width}",
                data.len()
            )));
        }
        if !peak.is_finite() || peak <= T::zero() {
            return Err(Error::config("peak must be a positive finite value"));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite sample at index {pos}")));
        }
        Ok(Self::from_raw(height, width, data, peak))
    }

    /// Internal constructor for values produced by the crate's own
    /// arithmetic. Shape must already be consistent.
    pub(crate) fn from_raw(height: usize, width: usize, data: Vec<T>, peak: T) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Self {
            height,
            width,
            data,
            peak,
        }
    }

    pub fn zeros(height: usize, width: usize, peak: T) -> Self {
        Self::from_raw(height, width, vec![T::zero(); height * width], peak)
    }

    pub fn constant(height: usize, width: usize, value: T, peak: T) -> Self {
        Self::from_raw(height, width, vec![value; height * width], peak)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixel_count(&self) -> usize {
        self.data.len()
    }

    pub fn peak(&self) -> T {
        self.peak
    }

    /// Same data, different nominal peak.
    pub fn with_peak(mut self, peak: T) -> Self {
        self.peak = peak;
        self
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.width..(r + 1) * self.width]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.width + c]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Elementwise map; the peak is carried over unchanged.
    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        let data = self.data.iter().map(|&v| f(v)).collect();
        Self::from_raw(self.height, self.width, data, self.peak)
    }

    /// Elementwise combination of two same-shaped images.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert!(self.same_shape(other), "zip_map on mismatched shapes");
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_raw(self.height, self.width, data, self.peak)
    }

    /// `self + step * (target - self)`, the relaxation form used by the
    /// iteration drivers. A zero elementwise difference reproduces `self`
    /// bit-for-bit.
    pub fn lerp_toward(&self, target: &Self, step: T) -> Self {
        self.zip_map(target, |x, t| x + step * (t - x))
    }

    /// `self - scale * other`.
    pub fn sub_scaled(&self, other: &Self, scale: T) -> Self {
        self.zip_map(other, |a, b| a - scale * b)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    /// Euclidean norm of the elementwise difference, accumulated in `f64`.
    pub fn l2_distance(&self, other: &Self) -> f64 {
        assert!(self.same_shape(other), "l2_distance on mismatched shapes");
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(&a, &b)| {
                let d = a.to_f64c() - b.to_f64c();
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Sum of absolute values, accumulated in `f64`.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|&v| v.to_f64c().abs()).sum()
    }

    pub fn min_value(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v.to_f64c()).sum::<f64>() / self.data.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.data
            .iter()
            .map(|&v| {
                let d = v.to_f64c() - m;
                d * d
            })
            .sum::<f64>()
            / self.data.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Clamp samples into `[0, peak]`. Export-time only; the iteration
    /// drivers never clamp intermediates.
    pub fn clamped(&self) -> Self {
        let peak = self.peak;
        self.map(|v| v.max(T::zero()).min(peak))
    }

    pub fn flip_horizontal(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for r in 0..self.height {
            data.extend(self.row(r).iter().rev());
        }
        Self::from_raw(self.height, self.width, data, self.peak)
    }

    pub fn flip_vertical(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for r in (0..self.height).rev() {
            data.extend_from_slice(self.row(r));
        }
        Self::from_raw(self.height, self.width, data, self.peak)
    }
}

/// Square convolution kernel with odd side length.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D<T: Real> {
    side: usize,
    weights: Vec<T>,
}

impl<T: Real> Kernel2D<T> {
    pub fn new(side: usize, weights: Vec<T>) -> Result<Self> {
        if side == 0 || side % 2 == 0 {
            return Err(Error::config(format!("kernel side {side} must be odd")));
        }
        if weights.len() != side * side {
            return Err(Error::shape(format!(
                "kernel weights length {} does not match {side}x{side}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::domain("kernel weights must be finite"));
        }
        Ok(Self { side, weights })
    }

    /// The 1x1 identity kernel.
    pub fn identity() -> Self {
        Self {
            side: 1,
            weights: vec![T::one()],
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn radius(&self) -> usize {
        self.side / 2
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, u: usize, v: usize) -> T {
        self.weights[u * self.side + v]
    }
}

/// 2D convolution with the kernel flipped (true convolution):
/// `out[r,c] = sum_{u,v} k[u,v] * img[r - (u - radius), c - (v - radius)]`.
///
/// The output has the same dimensions as the input and is linear in the
/// image for a fixed kernel. Rows are computed in parallel; each output
/// pixel accumulates in a fixed order, so results are deterministic.
pub fn convolve2d<T: Real>(img: &Image<T>, kernel: &Kernel2D<T>, pad: PaddingMode) -> Image<T> {
    let (h, w) = (img.height(), img.width());
    let radius = kernel.radius() as isize;
    let side = kernel.side();

    let mut data = vec![T::zero(); h * w];
    data.par_chunks_mut(w).enumerate().for_each(|(r, out_row)| {
        for (c, out) in out_row.iter_mut().enumerate() {
            let mut acc = T::zero();
            for u in 0..side {
                let rr = r as isize - (u as isize - radius);
                let Some(sr) = resolve_index(rr, h, pad) else {
                    continue;
                };
                let row = img.row(sr);
                for v in 0..side {
                    let cc = c as isize - (v as isize - radius);
                    if let Some(sc) = resolve_index(cc, w, pad) {
                        acc = acc + kernel.weight(u, v) * row[sc];
                    }
                }
            }
            *out = acc;
        }
    });
    Image::from_raw(h, w, data, img.peak())
}

/// Convolve every row with a 1D kernel (flipped), then every column.
/// Used by the separable Gaussian paths; same padding semantics as
/// [`convolve2d`].
pub fn convolve_separable<T: Real>(
    img: &Image<T>,
    row_kernel: &[T],
    col_kernel: &[T],
    pad: PaddingMode,
) -> Image<T> {
    let horizontal = convolve_rows(img, row_kernel, pad);
    convolve_cols(&horizontal, col_kernel, pad)
}

pub(crate) fn convolve_rows<T: Real>(img: &Image<T>, kernel: &[T], pad: PaddingMode) -> Image<T> {
    assert!(kernel.len() % 2 == 1, "1D kernel length must be odd");
    let (h, w) = (img.height(), img.width());
    let radius = (kernel.len() / 2) as isize;
    let mut data = vec![T::zero(); h * w];
    data.par_chunks_mut(w).enumerate().for_each(|(r, out_row)| {
        let row = img.row(r);
        for (c, out) in out_row.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (v, &kv) in kernel.iter().enumerate() {
                let cc = c as isize - (v as isize - radius);
                if let Some(sc) = resolve_index(cc, w, pad) {
                    acc = acc + kv * row[sc];
                }
            }
            *out = acc;
        }
    });
    Image::from_raw(h, w, data, img.peak())
}

pub(crate) fn convolve_cols<T: Real>(img: &Image<T>, kernel: &[T], pad: PaddingMode) -> Image<T> {
    assert!(kernel.len() % 2 == 1, "1D kernel length must be odd");
    let (h, w) = (img.height(), img.width());
    let radius = (kernel.len() / 2) as isize;
    let mut data = vec![T::zero(); h * w];
    data.par_chunks_mut(w).enumerate().for_each(|(r, out_row)| {
        for (c, out) in out_row.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (u, &ku) in kernel.iter().enumerate() {
                let rr = r as isize - (u as isize - radius);
                if let Some(sr) = resolve_index(rr, h, pad) {
                    acc = acc + ku * img.get(sr, c);
                }
            }
            *out = acc;
        }
    });
    Image::from_raw(h, w, data, img.peak())
}

/// Sampled 1D Gaussian, truncated at `radius` and normalized to sum 1.
pub fn gaussian_taps<T: Real>(std: f64, radius: usize) -> Vec<T> {
    let mut taps: Vec<f64> = (-(radius as isize)..=radius as isize)
        .map(|i| (-((i * i) as f64) / (2.0 * std * std)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps.into_iter().map(T::of).collect()
}
