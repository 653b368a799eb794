//! Fixed-point iterative denoising and speckle suppression.
//!
//! The crate is organized around a small set of building blocks:
//!
//! - [`image`]: the 2D intensity grid ([`Image`]), boundary-aware
//!   convolution and BT.601 color-plane conversion.
//! - [`io`]: PGM (P5), 8-bit grayscale PNG and the `BTBF` raw-float
//!   container.
//! - [`noise`] / [`tomogram`]: AWGN, Poisson and exponential speckle
//!   synthesis, plus a layered-scatterer tomogram simulator that produces
//!   matched speckled / speckle-free pairs.
//! - [`engines`]: pluggable single-step denoisers (Gaussian, median,
//!   non-local means) behind the [`DenoiserEngine`] trait.
//! - [`iteration`]: the BTB fixed-point driver with successive, simple,
//!   anchored and Langevin-perturbed update rules.
//! - [`rfn`] / [`vortice`]: receptive-field normalization and the
//!   despeckling loops built on it.
//! - [`metrics`]: PSNR, SSIM and contraction diagnostics.
//!
//! All numerical kernels are generic over the scalar type through the
//! [`Real`] trait (`f32` or `f64`). The crate-root aliases fix the default
//! precision used by the CLI and the file formats: 64-bit floats
//! throughout, with quantization only at 8-bit export.

pub mod color;
pub mod engines;
pub mod error;
pub mod image;
pub mod io;
pub mod iteration;
pub mod metrics;
pub mod noise;
pub mod rfn;
pub mod scalar;
pub mod testimages;
pub mod tomogram;
pub mod vortice;

pub use error::{Error, Result};
pub use scalar::Real;

/// Default-precision image (64-bit samples).
pub type Image = image::Image<f64>;
/// Single-precision image.
pub type ImageF32 = image::Image<f32>;
/// Default-precision convolution kernel.
pub type Kernel2D = image::Kernel2D<f64>;
/// Default-precision RFN kernel.
pub type RfnKernel = rfn::RfnKernel<f64>;

pub use engines::DenoiserEngine;
pub use image::PaddingMode;
