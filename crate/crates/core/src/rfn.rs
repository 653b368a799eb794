//! Receptive-field normalization.
//!
//! A nonnegative, symmetric, center-peaked window `h` defines a local
//! weighted energy `sigma_v = sqrt(h * v^2)` (convolution, symmetric
//! padding). Each sample is divided by a clipped version of that energy,
//! and the operator `g(v) = (v~ - 1) .* v` extracts the zero-crossing
//! speckle patterns the despeckling loops subtract.
//!
//! The energy accumulates differences against the center sample and
//! carries the kernel's weight sum as a separate factor. For kernels
//! built by [`RfnKernel::gaussian`] / [`RfnKernel::rectangular`] the
//! recorded sum is exactly one, so a constant input `c` yields
//! `sigma_v == |c|` bit-for-bit and `g(c * 1) == 0` exactly, matching the
//! algebra rather than accumulating rounding.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{resolve_index, Image, PaddingMode};
use crate::scalar::Real;

/// Dimensionality of an RFN window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfnDims {
    One,
    Two,
}

/// Receptive-field normalization window.
///
/// Axioms: nonnegative weights, symmetry under index negation, global
/// maximum at the center, finite total weight. [`RfnKernel::validate`]
/// reports violations; the energy and normalization operations assume a
/// valid kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct RfnKernel<T: Real> {
    dims: RfnDims,
    side: usize,
    weights: Vec<T>,
    weight_sum: T,
}

/// A violated kernel axiom, with the offending flat index where one
/// exists.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelViolation {
    /// Negative weight at `index`.
    Positivity { index: usize },
    /// `weights[index] != weights[mirror]` under index negation.
    Symmetry { index: usize, mirror: usize },
    /// Center weight smaller than the weight at `index`.
    CenterMaximum { index: usize },
    /// Total weight is not finite.
    FiniteSum,
}

impl std::fmt::Display for KernelViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelViolation::Positivity { index } => {
                write!(f, "negative weight at index {index}")
            }
            KernelViolation::Symmetry { index, mirror } => {
                write!(f, "weights at {index} and {mirror} differ")
            }
            KernelViolation::CenterMaximum { index } => {
                write!(f, "center is not a global maximum (exceeded at {index})")
            }
            KernelViolation::FiniteSum => write!(f, "total weight is not finite"),
        }
    }
}

impl<T: Real> RfnKernel<T> {
    /// Truncated Gaussian window of odd side `side`, std `side/4`,
    /// normalized to unit total weight.
    pub fn gaussian(side: usize, dims: RfnDims) -> Result<Self> {
        if side == 0 || side % 2 == 0 {
            return Err(Error::config(format!(
                "RFN window side {side} must be odd"
            )));
        }
        if side == 1 {
            return Ok(Self {
                dims,
                side,
                weights: vec![T::one()],
                weight_sum: T::one(),
            });
        }
        let std = side as f64 / 4.0;
        let radius = (side / 2) as isize;
        let mut raw: Vec<f64> = Vec::new();
        match dims {
            RfnDims::One => {
                for i in -radius..=radius {
                    raw.push((-((i * i) as f64) / (2.0 * std * std)).exp());
                }
            }
            RfnDims::Two => {
                for i in -radius..=radius {
                    for j in -radius..=radius {
                        raw.push((-((i * i + j * j) as f64) / (2.0 * std * std)).exp());
                    }
                }
            }
        }
        let sum: f64 = raw.iter().sum();
        let weights = raw.into_iter().map(|w| T::of(w / sum)).collect();
        Ok(Self {
            dims,
            side,
            weights,
            weight_sum: T::one(),
        })
    }

    /// Rectangular window normalized to unit total weight.
    pub fn rectangular(side: usize, dims: RfnDims) -> Result<Self> {
        if side == 0 || side % 2 == 0 {
            return Err(Error::config(format!(
                "RFN window side {side} must be odd"
            )));
        }
        let len = match dims {
            RfnDims::One => side,
            RfnDims::Two => side * side,
        };
        Ok(Self {
            dims,
            side,
            weights: vec![T::of(1.0 / len as f64); len],
            weight_sum: T::one(),
        })
    }

    /// Wrap arbitrary weights (for diagnostics or custom windows). The
    /// weight sum is taken as the floating-point sum of the weights; no
    /// axiom is enforced here, use [`RfnKernel::validate`].
    pub fn from_weights(dims: RfnDims, side: usize, weights: Vec<T>) -> Result<Self> {
        if side == 0 || side % 2 == 0 {
            return Err(Error::config(format!(
                "RFN window side {side} must be odd"
            )));
        }
        let expect = match dims {
            RfnDims::One => side,
            RfnDims::Two => side * side,
        };
        if weights.len() != expect {
            return Err(Error::shape(format!(
                "RFN weights length {} does not match side {side}",
                weights.len()
            )));
        }
        let weight_sum = weights.iter().copied().fold(T::zero(), |a, b| a + b);
        Ok(Self {
            dims,
            side,
            weights,
            weight_sum,
        })
    }

    pub fn dims(&self) -> RfnDims {
        self.dims
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

    pub fn weight_sum(&self) -> T {
        self.weight_sum
    }

    /// Check the four window axioms; an empty list means the kernel is a
    /// valid RFN window. Each violation names the axiom and the offending
    /// index.
    pub fn validate(&self) -> Vec<KernelViolation> {
        let mut violations = Vec::new();
        for (i, &w) in self.weights.iter().enumerate() {
            if w < T::zero() {
                violations.push(KernelViolation::Positivity { index: i });
            }
        }
        let n = self.weights.len();
        for i in 0..n {
            let mirror = n - 1 - i;
            if i < mirror && self.weights[i] != self.weights[mirror] {
                violations.push(KernelViolation::Symmetry { index: i, mirror });
            }
        }
        let center = n / 2;
        for (i, &w) in self.weights.iter().enumerate() {
            if i != center && w > self.weights[center] {
                violations.push(KernelViolation::CenterMaximum { index: i });
                break;
            }
        }
        if !self.weight_sum.is_finite()
            || self.weights.iter().any(|w| !w.is_finite())
        {
            violations.push(KernelViolation::FiniteSum);
        }
        violations
    }
}

/// Normalization configuration: window, clip threshold and operator
/// variant.
#[derive(Debug, Clone)]
pub struct RfnConfig<T: Real> {
    pub kernel: RfnKernel<T>,
    /// Clip threshold: energies below `tau` divide by one instead.
    pub tau: f64,
    /// Use the signum form `g(v) = (v~ - sign(v)) .* v`, which is total on
    /// signed input. The basic form assumes `v >= 0`.
    pub signed_variant: bool,
}

impl<T: Real> RfnConfig<T> {
    pub fn new(kernel: RfnKernel<T>, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::config("tau must be positive"));
        }
        Ok(Self {
            kernel,
            tau,
            signed_variant: false,
        })
    }

    pub fn signed(mut self, signed: bool) -> Self {
        self.signed_variant = signed;
        self
    }
}

/// Parse a window selection string: `gaussian:15` or `rect:15`.
pub fn parse_window<T: Real>(spec: &str, dims: RfnDims) -> Result<RfnKernel<T>> {
    let (name, side) = spec
        .split_once(':')
        .ok_or_else(|| Error::parse(format!("window spec {spec:?} needs a size, e.g. gaussian:15")))?;
    let side: usize = side
        .parse()
        .map_err(|_| Error::parse(format!("invalid window size in {spec:?}")))?;
    match name {
        "gaussian" => RfnKernel::gaussian(side, dims),
        "rect" => RfnKernel::rectangular(side, dims),
        other => Err(Error::parse(format!(
            "unknown window {other:?} (expected gaussian or rect)"
        ))),
    }
}

/// Local weighted energy map `sigma_v = sqrt(h * v^2)` with symmetric
/// padding. A 1D kernel applies along each row independently.
pub fn local_energy<T: Real>(img: &Image<T>, kernel: &RfnKernel<T>) -> Image<T> {
    let (h, w) = (img.height(), img.width());
    let radius = kernel.radius() as isize;
    let s = kernel.weight_sum();
    let mut data = vec![T::zero(); h * w];
    match kernel.dims() {
        RfnDims::One => {
            data.par_chunks_mut(w).enumerate().for_each(|(r, out_row)| {
                let row = img.row(r);
                for (c, out) in out_row.iter_mut().enumerate() {
                    let center = row[c] * row[c];
                    let mut acc = T::zero();
                    for (t, &wt) in kernel.weights().iter().enumerate() {
                        let cc = c as isize - (t as isize - radius);
                        let sc = resolve_index(cc, w, PaddingMode::SymmetricReflect)
                            .expect("symmetric padding is total");
                        let sq = row[sc] * row[sc];
                        acc = acc + wt * (sq - center);
                    }
                    *out = (center * s + acc).max(T::zero()).sqrt();
                }
            });
        }
        RfnDims::Two => {
            let side = kernel.side();
            data.par_chunks_mut(w).enumerate().for_each(|(r, out_row)| {
                for (c, out) in out_row.iter_mut().enumerate() {
                    let center = img.get(r, c) * img.get(r, c);
                    let mut acc = T::zero();
                    for u in 0..side {
                        let rr = r as isize - (u as isize - radius);
                        let sr = resolve_index(rr, h, PaddingMode::SymmetricReflect)
                            .expect("symmetric padding is total");
                        let row = img.row(sr);
                        for v in 0..side {
                            let cc = c as isize - (v as isize - radius);
                            let sc = resolve_index(cc, w, PaddingMode::SymmetricReflect)
                                .expect("symmetric padding is total");
                            let sq = row[sc] * row[sc];
                            acc = acc + kernel.weights()[u * side + v] * (sq - center);
                        }
                    }
                    *out = (center * s + acc).max(T::zero()).sqrt();
                }
            });
        }
    }
    Image::from_raw(h, w, data, img.peak())
}

/// 1D local weighted energy of a signal (kernel must be 1D).
pub fn local_energy_1d<T: Real>(signal: &[T], kernel: &RfnKernel<T>) -> Vec<T> {
    assert!(
        kernel.dims() == RfnDims::One,
        "1D energy needs a 1D kernel"
    );
    let n = signal.len();
    let radius = kernel.radius() as isize;
    let s = kernel.weight_sum();
    (0..n)
        .map(|k| {
            let center = signal[k] * signal[k];
            let mut acc = T::zero();
            for (t, &wt) in kernel.weights().iter().enumerate() {
                let idx = k as isize - (t as isize - radius);
                let si = resolve_index(idx, n, PaddingMode::SymmetricReflect)
                    .expect("symmetric padding is total");
                let sq = signal[si] * signal[si];
                acc = acc + wt * (sq - center);
            }
            (center * s + acc).max(T::zero()).sqrt()
        })
        .collect()
}

#[inline]
fn clip<T: Real>(sigma: T, tau: T) -> T {
    if sigma >= tau {
        sigma
    } else {
        T::one()
    }
}

/// Normalized signal `v~ = v / sigma~`, where `sigma~` clips energies
/// below `tau` to one.
pub fn normalize<T: Real>(img: &Image<T>, cfg: &RfnConfig<T>) -> Image<T> {
    let tau = T::of(cfg.tau);
    let energy = local_energy(img, &cfg.kernel);
    img.zip_map(&energy, |v, sigma| v / clip(sigma, tau))
}

/// 1D counterpart of [`normalize`].
pub fn normalize_1d<T: Real>(signal: &[T], cfg: &RfnConfig<T>) -> Vec<T> {
    let tau = T::of(cfg.tau);
    let energy = local_energy_1d(signal, &cfg.kernel);
    signal
        .iter()
        .zip(energy)
        .map(|(&v, sigma)| v / clip(sigma, tau))
        .collect()
}

#[inline]
fn signum_of<T: Real>(v: T) -> T {
    if v > T::zero() {
        T::one()
    } else if v < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

/// The RFN operator `g`.
///
/// Basic form `(v~ - 1) .* v` (requires `v >= 0`); signum form
/// `(v~ - sign(v)) .* v` when `cfg.signed_variant` is set.
pub fn operator<T: Real>(img: &Image<T>, cfg: &RfnConfig<T>) -> Result<Image<T>> {
    if !cfg.signed_variant {
        if let Some(pos) = img.data().iter().position(|&v| v < T::zero()) {
            return Err(Error::domain(format!(
                "basic RFN operator needs nonnegative input, found negative sample at index {pos}"
            )));
        }
    }
    Ok(operator_total(img, cfg))
}

/// Signum-form evaluation of `g`, total on signed input. On nonnegative
/// input this coincides with the basic form; the despeckling loops use it
/// so that unclamped negative overshoots stay well-defined.
pub fn operator_total<T: Real>(img: &Image<T>, cfg: &RfnConfig<T>) -> Image<T> {
    let tau = T::of(cfg.tau);
    let energy = local_energy(img, &cfg.kernel);
    // Basic form subtracts the constant one; at v = 0 the Hadamard factor
    // zeroes the sample either way.
    let anchor: fn(T) -> T = if cfg.signed_variant { signum_of } else { |_| T::one() };
    img.zip_map(&energy, |v, sigma| (v / clip(sigma, tau) - anchor(v)) * v)
}

/// 1D counterpart of [`operator`].
pub fn operator_1d<T: Real>(signal: &[T], cfg: &RfnConfig<T>) -> Result<Vec<T>> {
    if !cfg.signed_variant {
        if let Some(pos) = signal.iter().position(|&v| v < T::zero()) {
            return Err(Error::domain(format!(
                "basic RFN operator needs nonnegative input, found negative sample at index {pos}"
            )));
        }
    }
    let tau = T::of(cfg.tau);
    let energy = local_energy_1d(signal, &cfg.kernel);
    let signed = cfg.signed_variant;
    Ok(signal
        .iter()
        .zip(energy)
        .map(|(&v, sigma)| {
            let anchor = if signed { signum_of(v) } else { T::one() };
            (v / clip(sigma, tau) - anchor) * v
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rect3() -> RfnKernel<f64> {
        RfnKernel::rectangular(3, RfnDims::One).unwrap()
    }

    fn wgn_image(h: usize, w: usize, mean: f64, std: f64, seed: u64) -> Image<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..h * w)
            .map(|_| {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                mean + std * z
            })
            .collect();
        Image::from_raw(h, w, data, 255.0)
    }

    #[test]
    fn degenerate_window_is_identity_weight() {
        let k = RfnKernel::<f64>::gaussian(1, RfnDims::One).unwrap();
        assert_eq!(k.weights(), &[1.0]);
        assert!(k.validate().is_empty());
    }

    #[test]
    fn constructed_kernels_satisfy_axioms() {
        for dims in [RfnDims::One, RfnDims::Two] {
            for side in [1, 3, 15] {
                assert!(RfnKernel::<f64>::gaussian(side, dims).unwrap().validate().is_empty());
                assert!(RfnKernel::<f64>::rectangular(side, dims)
                    .unwrap()
                    .validate()
                    .is_empty());
            }
        }
        assert!(RfnKernel::<f64>::gaussian(4, RfnDims::One).is_err());
    }

    #[test]
    fn validator_flags_negative_weight() {
        let k = RfnKernel::from_weights(RfnDims::One, 3, vec![0.2, -0.1, 0.2]).unwrap();
        let violations = k.validate();
        assert!(violations
            .iter()
            .any(|v| matches!(v, KernelViolation::Positivity { index: 1 })));
    }

    #[test]
    fn validator_flags_offcenter_maximum() {
        let k = RfnKernel::from_weights(RfnDims::One, 3, vec![0.5, 0.2, 0.5]).unwrap();
        let violations = k.validate();
        assert!(violations
            .iter()
            .any(|v| matches!(v, KernelViolation::CenterMaximum { .. })));
    }

    #[test]
    fn validator_flags_asymmetry() {
        let k = RfnKernel::from_weights(RfnDims::One, 3, vec![0.1, 0.5, 0.3]).unwrap();
        let violations = k.validate();
        assert!(violations
            .iter()
            .any(|v| matches!(v, KernelViolation::Symmetry { index: 0, mirror: 2 })));
    }

    #[test]
    fn constant_energy_is_exactly_the_constant() {
        for c in [0.26f64, 1.0, 10.0, 42.5] {
            let img = Image::constant(5, 7, c, 255.0);
            for kernel in [
                RfnKernel::gaussian(5, RfnDims::Two).unwrap(),
                RfnKernel::rectangular(3, RfnDims::Two).unwrap(),
                RfnKernel::rectangular(5, RfnDims::One).unwrap(),
            ] {
                let sigma = local_energy(&img, &kernel);
                for &s in sigma.data() {
                    assert_eq!(s.to_bits(), c.to_bits(), "sigma {s} != {c}");
                }
            }
        }
    }

    #[test]
    fn hand_computed_energy_spike() {
        let signal = [0.0, 0.0, 3.0, 0.0, 0.0];
        let sigma = local_energy_1d(&signal, &rect3());
        let sqrt3 = 3f64.sqrt();
        let expect = [0.0, sqrt3, sqrt3, sqrt3, 0.0];
        for (s, e) in sigma.iter().zip(expect) {
            assert!((s - e).abs() < 1e-12, "{s} vs {e}");
        }
    }

    #[test]
    fn wgn_energy_estimates_second_moment() {
        // E sigma^2 = s^2 + m^2 for WGN(m, s^2).
        let kernel = RfnKernel::gaussian(9, RfnDims::Two).unwrap();
        for (m, s) in [(0.0, 1.0), (2.0, 1.5)] {
            let img = wgn_image(350, 350, m, s, 77);
            let sigma = local_energy(&img, &kernel);
            let mean_sq =
                sigma.data().iter().map(|&v| v * v).sum::<f64>() / sigma.pixel_count() as f64;
            let expect = s * s + m * m;
            assert!(
                (mean_sq - expect).abs() < 0.05 * expect,
                "mean sigma^2 {mean_sq} vs {expect}"
            );
        }
    }

    #[test]
    fn normalization_of_bright_constant_is_ones() {
        let kernel = RfnKernel::rectangular(3, RfnDims::Two).unwrap();
        let cfg = RfnConfig::new(kernel, 0.25).unwrap();
        let img = Image::constant(4, 4, 0.9, 1.0);
        let out = normalize(&img, &cfg);
        for &v in out.data() {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn normalization_below_tau_divides_by_one() {
        let kernel = RfnKernel::rectangular(3, RfnDims::Two).unwrap();
        let cfg = RfnConfig::new(kernel, 0.25).unwrap();
        let c = 0.125; // tau / 2
        let img = Image::constant(4, 4, c, 1.0);
        let out = normalize(&img, &cfg);
        for &v in out.data() {
            assert_eq!(v, c);
        }
    }

    #[test]
    fn clip_ties_take_the_energy_branch() {
        // sigma == tau divides by sigma, not by one.
        let kernel = RfnKernel::rectangular(3, RfnDims::Two).unwrap();
        let cfg = RfnConfig::new(kernel, 0.25).unwrap();
        let img = Image::constant(4, 4, 0.25, 1.0);
        let out = normalize(&img, &cfg);
        for &v in out.data() {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn normalized_wgn_has_unit_variance() {
        let kernel = RfnKernel::gaussian(15, RfnDims::Two).unwrap();
        let cfg = RfnConfig::new(kernel, 0.25).unwrap();
        let img = wgn_image(350, 350, 0.0, 1.0, 5);
        let out = normalize(&img, &cfg);
        let var = out.variance();
        assert!((0.9..=1.1).contains(&var), "normalized variance {var}");
    }

    #[test]
    fn operator_zeroes_bright_constants_exactly() {
        for c in [0.25 + 1e-6, 1.0, 10.0] {
            for kernel in [
                RfnKernel::rectangular(5, RfnDims::Two).unwrap(),
                RfnKernel::gaussian(7, RfnDims::Two).unwrap(),
            ] {
                let cfg = RfnConfig::new(kernel, 0.25).unwrap();
                let img = Image::constant(6, 6, c, 1.0);
                let g = operator(&img, &cfg).unwrap();
                for &v in g.data() {
                    assert_eq!(v, 0.0, "g({c}) produced {v}");
                }
            }
        }
    }

    #[test]
    fn operator_hand_computed_spike() {
        let cfg = RfnConfig::new(rect3(), 0.5).unwrap();
        let signal = [0.0, 0.0, 3.0, 0.0, 0.0];
        let vtilde = normalize_1d(&signal, &cfg);
        let sqrt3 = 3f64.sqrt();
        let expect_vtilde = [0.0, 0.0, sqrt3, 0.0, 0.0];
        for (v, e) in vtilde.iter().zip(expect_vtilde) {
            assert!((v - e).abs() < 1e-12);
        }
        let g = operator_1d(&signal, &cfg).unwrap();
        let expect_g = [0.0, 0.0, 3.0 * (sqrt3 - 1.0), 0.0, 0.0];
        for (v, e) in g.iter().zip(expect_g) {
            assert!((v - e).abs() < 1e-12, "{v} vs {e}");
        }
    }

    #[test]
    fn operator_matches_elementwise_formula_in_clipped_regions() {
        // Where sigma < tau the divisor is one, so g(v) = (v - 1) .* v.
        let kernel = RfnKernel::rectangular(3, RfnDims::Two).unwrap();
        let cfg = RfnConfig::new(kernel.clone(), 0.25).unwrap();
        let img = Image::new(4, 4, vec![0.05; 16], 1.0).unwrap();
        let g = operator(&img, &cfg).unwrap();
        let sigma = local_energy(&img, &kernel);
        assert!(sigma.data().iter().all(|&s| s < 0.25));
        for (&gv, &v) in g.data().iter().zip(img.data()) {
            let expect: f64 = (v - 1.0) * v;
            assert!((gv - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn basic_operator_rejects_negative_input() {
        let cfg = RfnConfig::new(rect3(), 0.25).unwrap();
        let err = operator_1d(&[0.5, -0.5, 0.5], &cfg);
        assert!(matches!(err, Err(Error::Domain(_))));
        let ok = operator_1d(&[0.5, -0.5, 0.5], &cfg.signed(true));
        assert!(ok.is_ok());
    }

    #[test]
    fn signed_variant_restores_negative_dips() {
        // For a small negative sample in a clipped region, the signum form
        // pushes toward zero rather than away.
        let kernel = RfnKernel::rectangular(3, RfnDims::Two).unwrap();
        let cfg = RfnConfig::new(kernel, 0.25).unwrap().signed(true);
        let mut data = vec![0.0; 16];
        data[5] = -0.05;
        let img = Image::new(4, 4, data, 1.0).unwrap();
        let g = operator_total(&img, &cfg);
        // x - g moves the dip toward zero: g must share the dip's sign
        // direction (negative step = increase).
        assert!(g.data()[5] < 0.0);
    }

    #[test]
    fn operator_is_zero_wherever_input_is_zero() {
        let kernel = RfnKernel::gaussian(5, RfnDims::Two).unwrap();
        let cfg = RfnConfig::new(kernel, 0.25).unwrap();
        let img = wgn_image(12, 12, 0.6, 0.3, 9).map(|v| v.max(0.0));
        let g = operator(&img, &cfg).unwrap();
        for (&v, &gv) in img.data().iter().zip(g.data()) {
            if v == 0.0 {
                assert_eq!(gv, 0.0);
            }
        }
    }

    #[test]
    fn two_dim_rect_on_constant_rows_matches_one_dim() {
        // Constant-rows image: every row identical.
        let row: Vec<f64> = (0..32).map(|i| 0.4 + 0.3 * ((i as f64) * 0.7).sin()).collect();
        let mut data = Vec::new();
        for _ in 0..8 {
            data.extend_from_slice(&row);
        }
        let img = Image::new(8, 32, data, 1.0).unwrap();
        let k2 = RfnKernel::rectangular(5, RfnDims::Two).unwrap();
        let k1 = RfnKernel::rectangular(5, RfnDims::One).unwrap();
        let cfg2 = RfnConfig::new(k2, 0.25).unwrap();
        let cfg1 = RfnConfig::new(k1, 0.25).unwrap();
        let g2 = operator(&img, &cfg2).unwrap();
        let g1_row = operator_1d(&row, &cfg1).unwrap();
        for r in 0..8 {
            for c in 0..32 {
                assert!(
                    (g2.get(r, c) - g1_row[c]).abs() < 1e-12,
                    "row {r} col {c}: {} vs {}",
                    g2.get(r, c),
                    g1_row[c]
                );
            }
        }
    }

    proptest! {
        #[test]
        fn clip_free_normalization_is_scale_invariant(seed in 0u64..200, a in 0.5f64..3.0) {
            // Values bounded away from zero keep sigma >= tau before and
            // after scaling.
            let img = wgn_image(10, 10, 5.0, 0.5, seed);
            let kernel = RfnKernel::gaussian(5, RfnDims::Two).unwrap();
            let cfg = RfnConfig::new(kernel, 0.25).unwrap();
            let base = normalize(&img, &cfg);
            let scaled = normalize(&img.map(|v| v * a), &cfg);
            for (x, y) in base.data().iter().zip(scaled.data()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn sqrt_of_square_is_identity(bits in 1u64..(1u64 << 52), exp in -20i32..20) {
            // The constant-exactness chain relies on sqrt(fl(c*c)) == c.
            let c = f64::from_bits((1023u64 << 52) | bits) * 2f64.powi(exp);
            let roundtrip = (c * c).sqrt();
            prop_assert_eq!(roundtrip.to_bits(), c.to_bits());
        }
    }
}
