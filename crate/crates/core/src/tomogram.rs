//! Synthetic tomogram pairs: a speckled acquisition and its speckle-free
//! incoherent mean.
//!
//! A layered field of point scatterers is drawn on the pixel grid (each
//! occupied site holds a circular complex Gaussian amplitude of unit
//! variance), then blurred by a separable Gaussian point-spread function
//! sampled from the scene's pitches:
//!
//! - speckled intensity: `Iy = |f * psf|^2` (coherent sum),
//! - reference intensity: `Ix = |f|^2 * |psf|^2` (incoherent sum).
//!
//! Both share the same expected intensity, so they are compared on a
//! common dB window: `10 log10((I + eps) / ref)` with `ref` the 99.9th
//! percentile of the speckled intensity, mapped linearly from
//! `[db_floor, db_ceil]` to `[0, 1]` and clamped. Rows are axial (depth),
//! columns are lateral (A-line index).
//!
//! Randomness follows the crate-wide contract (ChaCha8, row-major order;
//! see [`crate::noise`]): one uniform occupancy draw per pixel, then two
//! normal draws per occupied site.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::image::{convolve_cols, convolve_rows, Image, PaddingMode};
use crate::scalar::Real;

/// Intensity floor added before the logarithm, guarding the zeros of the
/// speckle pattern.
pub const DB_EPSILON: f64 = 1e-12;

/// One horizontal band of scatterers: rows `[start, end)` at the given
/// occupancy probability per pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub row_start: usize,
    pub row_end: usize,
    pub density: f64,
}

/// Scatterer-field and point-spread-function parameters of the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub height: usize,
    pub width: usize,
    /// Microns per pixel, axial (rows).
    pub axial_pitch: f64,
    /// Microns per pixel, lateral (columns).
    pub lateral_pitch: f64,
    /// Source central wavelength, nanometers.
    pub lambda_c: f64,
    /// Source spectral bandwidth, nanometers.
    pub delta_lambda: f64,
    pub layers: Vec<LayerSpec>,
    /// Axial PSF width in microns; `None` derives the standard
    /// source-limited value `(2 ln2 / pi) * lambda_c^2 / delta_lambda`.
    pub psf_axial_fwhm: Option<f64>,
    /// Lateral PSF width in microns.
    pub psf_lateral_fwhm: f64,
    /// dB window mapped onto `[0, 1]`.
    pub db_floor: f64,
    pub db_ceil: f64,
}

impl Default for SceneConfig {
    /// Layered tissue-like phantom: 512x512, 1300 nm source with 130 nm
    /// bandwidth, 5 um A-line spacing, and scatterer densities spanning
    /// `[0.0005, 0.5]`. The axial pitch of 2.5 um oversamples the
    /// source-limited axial resolution (about 5.7 um) roughly twofold, as
    /// acquisition systems do; the bulk layers are dense enough for fully
    /// developed speckle.
    fn default() -> Self {
        Self {
            height: 512,
            width: 512,
            axial_pitch: 2.5,
            lateral_pitch: 5.0,
            lambda_c: 1300.0,
            delta_lambda: 130.0,
            layers: vec![
                LayerSpec { row_start: 24, row_end: 48, density: 0.0005 },
                LayerSpec { row_start: 48, row_end: 176, density: 0.5 },
                LayerSpec { row_start: 176, row_end: 320, density: 0.35 },
                LayerSpec { row_start: 320, row_end: 448, density: 0.5 },
                LayerSpec { row_start: 448, row_end: 488, density: 0.2 },
            ],
            psf_axial_fwhm: None,
            psf_lateral_fwhm: 15.0,
            db_floor: -40.0,
            db_ceil: 0.0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::config("scene dimensions must be positive"));
        }
        if !(self.axial_pitch > 0.0) || !(self.lateral_pitch > 0.0) {
            return Err(Error::config("pixel pitches must be positive"));
        }
        if !(self.lambda_c > 0.0) || !(self.delta_lambda > 0.0) {
            return Err(Error::config("source wavelengths must be positive"));
        }
        if let Some(fwhm) = self.psf_axial_fwhm {
            if !(fwhm > 0.0) {
                return Err(Error::config("axial PSF width must be positive"));
            }
        }
        if !(self.psf_lateral_fwhm > 0.0) {
            return Err(Error::config("lateral PSF width must be positive"));
        }
        if !(self.db_floor < self.db_ceil) {
            return Err(Error::config("db_floor must lie below db_ceil"));
        }
        for layer in &self.layers {
            if layer.row_start >= layer.row_end || layer.row_end > self.height {
                return Err(Error::config(format!(
                    "layer rows {}..{} outside image height {}",
                    layer.row_start, layer.row_end, self.height
                )));
            }
            if !(layer.density > 0.0 && layer.density <= 1.0) {
                return Err(Error::config(format!(
                    "layer density {} outside (0, 1]",
                    layer.density
                )));
            }
        }
        Ok(())
    }

    /// Axially resolved width in microns (explicit or source-limited).
    pub fn axial_fwhm_um(&self) -> f64 {
        self.psf_axial_fwhm.unwrap_or_else(|| {
            let lambda_um = self.lambda_c * 1e-3;
            let delta_um = self.delta_lambda * 1e-3;
            2.0 * std::f64::consts::LN_2 / std::f64::consts::PI * lambda_um * lambda_um / delta_um
        })
    }

    /// Parse the flat key-value scene format. Keys mirror the struct
    /// fields (`height`, `width`, `axial_pitch`, `lateral_pitch`,
    /// `lambda_c`, `delta_lambda`, `psf_axial_fwhm`, `psf_lateral_fwhm`,
    /// `db_floor`, `db_ceil`), plus one `layer = start:end:density` line
    /// per layer (end exclusive). `#` starts a comment. Unset keys keep
    /// the defaults; `layer` lines replace the default layers.
    pub fn parse(text: &str) -> Result<Self> {
        let mut scene = SceneConfig::default();
        let mut layers = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(format!("scene line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| -> Result<f64> {
                v.parse().map_err(|_| {
                    Error::parse(format!("scene line {}: invalid number {v:?}", lineno + 1))
                })
            };
            match key {
                "height" => scene.height = num(value)? as usize,
                "width" => scene.width = num(value)? as usize,
                "axial_pitch" => scene.axial_pitch = num(value)?,
                "lateral_pitch" => scene.lateral_pitch = num(value)?,
                "lambda_c" => scene.lambda_c = num(value)?,
                "delta_lambda" => scene.delta_lambda = num(value)?,
                "psf_axial_fwhm" => scene.psf_axial_fwhm = Some(num(value)?),
                "psf_lateral_fwhm" => scene.psf_lateral_fwhm = num(value)?,
                "db_floor" => scene.db_floor = num(value)?,
                "db_ceil" => scene.db_ceil = num(value)?,
                "layer" => {
                    let parts: Vec<&str> = value.split(':').collect();
                    if parts.len() != 3 {
                        return Err(Error::parse(format!(
                            "scene line {}: layer wants start:end:density",
                            lineno + 1
                        )));
                    }
                    layers.push(LayerSpec {
                        row_start: num(parts[0])? as usize,
                        row_end: num(parts[1])? as usize,
                        density: num(parts[2])?,
                    });
                }
                other => {
                    return Err(Error::parse(format!(
                        "scene line {}: unknown key {other:?}",
                        lineno + 1
                    )))
                }
            }
        }
        if !layers.is_empty() {
            scene.layers = layers;
        }
        scene.validate()?;
        Ok(scene)
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Complex scatterer field as separate real and imaginary planes.
#[derive(Debug, Clone)]
pub struct ComplexField<T: Real> {
    pub re: Image<T>,
    pub im: Image<T>,
}

impl<T: Real> ComplexField<T> {
    /// A field holding one unit scatterer, for calibration.
    pub fn single_scatterer(height: usize, width: usize, row: usize, col: usize) -> Self {
        let mut re = vec![T::zero(); height * width];
        re[row * width + col] = T::one();
        Self {
            re: Image::from_raw(height, width, re, T::one()),
            im: Image::zeros(height, width, T::one()),
        }
    }
}

/// Draw the layered scatterer field: per-pixel Bernoulli occupancy, unit
/// variance circular complex Gaussian amplitudes on occupied sites.
pub fn scatterer_field<T: Real>(scene: &SceneConfig, seed: u64) -> Result<ComplexField<T>> {
    scene.validate()?;
    if scene.layers.is_empty() {
        return Err(Error::domain("empty scene: no scatterer layers"));
    }
    let mut density_by_row = vec![0.0f64; scene.height];
    for layer in &scene.layers {
        for row in layer.row_start..layer.row_end {
            density_by_row[row] = layer.density;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let n = scene.height * scene.width;
    let mut re = vec![T::zero(); n];
    let mut im = vec![T::zero(); n];
    for row in 0..scene.height {
        let density = density_by_row[row];
        for col in 0..scene.width {
            let occupied: f64 = rng.random();
            if occupied < density {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                re[row * scene.width + col] = T::of(a * inv_sqrt2);
                im[row * scene.width + col] = T::of(b * inv_sqrt2);
            }
        }
    }
    Ok(ComplexField {
        re: Image::from_raw(scene.height, scene.width, re, T::one()),
        im: Image::from_raw(scene.height, scene.width, im, T::one()),
    })
}

/// Sampled PSF amplitude taps along one axis: unit-peak Gaussian at the
/// given pixel pitch, truncated at three standard deviations.
pub fn psf_taps<T: Real>(fwhm_um: f64, pitch_um: f64) -> Vec<T> {
    let sigma_px = fwhm_um / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt()) / pitch_um;
    let radius = ((3.0 * sigma_px).ceil() as usize).max(1);
    (-(radius as isize)..=radius as isize)
        .map(|i| T::of((-((i * i) as f64) / (2.0 * sigma_px * sigma_px)).exp()))
        .collect()
}

/// Pre-log intensity pair `(Iy, Ix)` of a field under the scene's PSF.
pub fn render_intensities<T: Real>(
    scene: &SceneConfig,
    field: &ComplexField<T>,
) -> (Image<T>, Image<T>) {
    let axial: Vec<T> = psf_taps(scene.axial_fwhm_um(), scene.axial_pitch);
    let lateral: Vec<T> = psf_taps(scene.psf_lateral_fwhm, scene.lateral_pitch);
    let pad = PaddingMode::Zero;

    // Coherent: blur the complex field, then take the squared modulus.
    let re_blur = convolve_cols(&convolve_rows(&field.re, &lateral, pad), &axial, pad);
    let im_blur = convolve_cols(&convolve_rows(&field.im, &lateral, pad), &axial, pad);
    let coherent = re_blur.zip_map(&im_blur, |a, b| a * a + b * b);

    // Incoherent: blur the squared modulus with the squared PSF.
    let power = field.re.zip_map(&field.im, |a, b| a * a + b * b);
    let axial_sq: Vec<T> = axial.iter().map(|&t| t * t).collect();
    let lateral_sq: Vec<T> = lateral.iter().map(|&t| t * t).collect();
    let incoherent = convolve_cols(&convolve_rows(&power, &lateral_sq, pad), &axial_sq, pad);

    (coherent, incoherent)
}

/// Upper `quantile` of the samples (0 < q <= 1), by sorting a copy.
fn quantile<T: Real>(img: &Image<T>, q: f64) -> f64 {
    let mut values: Vec<f64> = img.data().iter().map(|v| v.to_f64c()).collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let idx = ((q * values.len() as f64).ceil() as usize).clamp(1, values.len()) - 1;
    values[idx]
}

/// Map a pre-log intensity onto the scene's dB window relative to `reference`.
fn to_db_window<T: Real>(intensity: &Image<T>, reference: f64, scene: &SceneConfig) -> Image<T> {
    let span = scene.db_ceil - scene.db_floor;
    let floor = scene.db_floor;
    let mapped = intensity.map(|v| {
        let db = 10.0 * ((v.to_f64c() + DB_EPSILON) / reference).log10();
        T::of(((db - floor) / span).clamp(0.0, 1.0))
    });
    mapped.with_peak(T::one())
}

/// Render a `(speckled, speckle-free)` pair from an existing field.
pub fn tomogram_from_field<T: Real>(
    scene: &SceneConfig,
    field: &ComplexField<T>,
) -> (Image<T>, Image<T>) {
    let (coherent, incoherent) = render_intensities(scene, field);
    let mut reference = quantile(&coherent, 0.999);
    if reference <= 0.0 {
        reference = coherent.max_value().to_f64c();
    }
    let reference = reference.max(DB_EPSILON);
    (
        to_db_window(&coherent, reference, scene),
        to_db_window(&incoherent, reference, scene),
    )
}

/// Synthesize a matched `(speckled, speckle-free)` tomogram pair on the
/// `[0, 1]` scale. Deterministic in `(scene, seed)`.
pub fn synth_tomogram<T: Real>(scene: &SceneConfig, seed: u64) -> Result<(Image<T>, Image<T>)> {
    let field = scatterer_field(scene, seed)?;
    Ok(tomogram_from_field(scene, &field))
}
