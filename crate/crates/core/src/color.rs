//! BT.601 full-range color-plane conversion.
//!
//! Works on three same-shaped planes in the `[0, peak]` convention; the
//! chroma offset scales with the peak so 8-bit data keeps the usual 128
//! midpoint. The forward and inverse matrices are derived from the same
//! luma coefficients, so a round trip reproduces the input to well below
//! 1e-9 in the continuous domain.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

const KR: f64 = 0.299;
const KB: f64 = 0.114;
const KG: f64 = 1.0 - KR - KB;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorDirection {
    RgbToYcbcr,
    YcbcrToRgb,
}

/// Convert three planes between RGB and YCbCr.
pub fn color_transform<T: Real>(
    planes: &[Image<T>; 3],
    direction: ColorDirection,
) -> Result<[Image<T>; 3]> {
    let [a, b, c] = planes;
    if !a.same_shape(b) || !a.same_shape(c) {
        return Err(Error::shape("color planes must share dimensions"));
    }
    let peak = a.peak().to_f64c();
    let offset = peak * 128.0 / 255.0;
    let n = a.pixel_count();
    let mut out0 = Vec::with_capacity(n);
    let mut out1 = Vec::with_capacity(n);
    let mut out2 = Vec::with_capacity(n);
    match direction {
        ColorDirection::RgbToYcbcr => {
            for i in 0..n {
                let (r, g, bl) = (
                    a.data()[i].to_f64c(),
                    b.data()[i].to_f64c(),
                    c.data()[i].to_f64c(),
                );
                let y = KR * r + KG * g + KB * bl;
                let cb = 0.5 * (bl - y) / (1.0 - KB) + offset;
                let cr = 0.5 * (r - y) / (1.0 - KR) + offset;
                out0.push(T::of(y));
                out1.push(T::of(cb));
                out2.push(T::of(cr));
            }
        }
        ColorDirection::YcbcrToRgb => {
            for i in 0..n {
                let (y, cb, cr) = (
                    a.data()[i].to_f64c(),
                    b.data()[i].to_f64c(),
                    c.data()[i].to_f64c(),
                );
                let r = y + 2.0 * (1.0 - KR) * (cr - offset);
                let bl = y + 2.0 * (1.0 - KB) * (cb - offset);
                let g = (y - KR * r - KB * bl) / KG;
                out0.push(T::of(r));
                out1.push(T::of(g));
                out2.push(T::of(bl));
            }
        }
    }
    let (h, w, peak) = (a.height(), a.width(), a.peak());
    Ok([
        Image::from_raw(h, w, out0, peak),
        Image::from_raw(h, w, out1, peak),
        Image::from_raw(h, w, out2, peak),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(v: f64) -> Image<f64> {
        Image::constant(1, 1, v, 255.0)
    }

    #[test]
    fn white_point() {
        let out = color_transform(
            &[plane(255.0), plane(255.0), plane(255.0)],
            ColorDirection::RgbToYcbcr,
        )
        .unwrap();
        assert!((out[0].data()[0] - 255.0).abs() < 1e-9);
        assert!((out[1].data()[0] - 128.0).abs() < 1e-9);
        assert!((out[2].data()[0] - 128.0).abs() < 1e-9);
    }

    #[test]
    fn black_point() {
        let out = color_transform(
            &[plane(0.0), plane(0.0), plane(0.0)],
            ColorDirection::RgbToYcbcr,
        )
        .unwrap();
        assert!((out[0].data()[0]).abs() < 1e-9);
        assert!((out[1].data()[0] - 128.0).abs() < 1e-9);
        assert!((out[2].data()[0] - 128.0).abs() < 1e-9);
    }

    #[test]
    fn roundtrip_random_triples() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 255.0
        };
        let n = 1000;
        let (mut r, mut g, mut b) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..n {
            r.push(next());
            g.push(next());
            b.push(next());
        }
        let planes = [
            Image::new(1, n, r, 255.0).unwrap(),
            Image::new(1, n, g, 255.0).unwrap(),
            Image::new(1, n, b, 255.0).unwrap(),
        ];
        let ycc = color_transform(&planes, ColorDirection::RgbToYcbcr).unwrap();
        let back = color_transform(&ycc, ColorDirection::YcbcrToRgb).unwrap();
        let mut max_err = 0.0f64;
        for p in 0..3 {
            for (x, y) in planes[p].data().iter().zip(back[p].data()) {
                max_err = max_err.max((x - y).abs());
            }
        }
        assert!(max_err < 1e-9, "round-trip error {max_err}");
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = Image::<f64>::zeros(2, 2, 255.0);
        let b = Image::<f64>::zeros(2, 3, 255.0);
        let c = Image::<f64>::zeros(2, 2, 255.0);
        assert!(color_transform(&[a, b, c], ColorDirection::RgbToYcbcr).is_err());
    }
}
