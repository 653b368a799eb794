//! Deterministic synthetic grayscale scenes.
//!
//! These stand in for a natural-image corpus in tests and in the bundled
//! benchmark directory: piecewise-smooth content with edges, gradients
//! and texture, generated without any RNG so they are identical across
//! platforms. Values live in `[0, 255]` with peak 255.

use crate::image::Image;
use crate::scalar::Real;

/// Sum of smooth radial bumps over a sloped background.
pub fn smooth_blobs<T: Real>(height: usize, width: usize, variant: u64) -> Image<T> {
    let centers = [
        (0.28, 0.31, 0.16, 140.0),
        (0.71, 0.22, 0.11, -90.0),
        (0.52, 0.68, 0.22, 110.0),
        (0.18, 0.79, 0.09, -60.0),
    ];
    let phase = variant as f64 * 0.37;
    grid(height, width, |y, x| {
        let mut v = 90.0 + 60.0 * (x + 0.4 * y);
        for &(cy, cx, r, amp) in &centers {
            let cy = (cy + 0.07 * (phase + 1.0).sin()).fract();
            let cx = (cx + 0.07 * (phase * 1.3).cos()).fract();
            let d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
            v += amp * (-d2 / (2.0 * r * r)).exp();
        }
        v
    })
}

/// Concentric rings with a hard disk edge; tests edge preservation.
pub fn rings<T: Real>(height: usize, width: usize) -> Image<T> {
    grid(height, width, |y, x| {
        let (dy, dx) = (y - 0.5, x - 0.5);
        let r = (dy * dy + dx * dx).sqrt();
        let wave = 100.0 + 80.0 * (r * 28.0).cos();
        if r < 0.18 {
            220.0
        } else if r < 0.21 {
            30.0
        } else {
            wave
        }
    })
}

/// Diagonal bands with a step quadrant; mixes texture and flat regions.
pub fn bands<T: Real>(height: usize, width: usize) -> Image<T> {
    grid(height, width, |y, x| {
        if y < 0.5 && x < 0.5 {
            200.0
        } else if y >= 0.5 && x >= 0.5 {
            55.0
        } else {
            128.0 + 85.0 * ((x * 9.0 + y * 5.0) * std::f64::consts::PI).sin()
        }
    })
}

/// The bundled corpus: name and constructor for each scene.
pub fn corpus<T: Real>(height: usize, width: usize) -> Vec<(&'static str, Image<T>)> {
    vec![
        ("blobs", smooth_blobs(height, width, 0)),
        ("rings", rings(height, width)),
        ("bands", bands(height, width)),
    ]
}

fn grid<T: Real>(height: usize, width: usize, f: impl Fn(f64, f64) -> f64) -> Image<T> {
    let mut data = Vec::with_capacity(height * width);
    for r in 0..height {
        let y = (r as f64 + 0.5) / height as f64;
        for c in 0..width {
            let x = (c as f64 + 0.5) / width as f64;
            data.push(T::of(f(y, x).clamp(0.0, 255.0)));
        }
    }
    Image::from_raw(height, width, data, T::of(255.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_deterministic_and_in_range() {
        for (name, img) in corpus::<f64>(64, 48) {
            assert_eq!(img.height(), 64, "{name}");
            assert_eq!(img.width(), 48, "{name}");
            assert!(img.min_value() >= 0.0 && img.max_value() <= 255.0, "{name}");
            let again: Image<f64> = match name {
                "blobs" => smooth_blobs(64, 48, 0),
                "rings" => rings(64, 48),
                _ => bands(64, 48),
            };
            assert_eq!(img.data(), again.data(), "{name}");
        }
    }
}
