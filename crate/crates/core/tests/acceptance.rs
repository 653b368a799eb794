//! Acceptance suite: end-to-end checks of the statistical calibrations,
//! convergence laws, despeckling behavior and oracle equivalences, each
//! at its stated tolerance. Every test prints one PASS line with the
//! measured values (visible with `--nocapture`).
//!
//! Run with: `cargo test -p btb-core --test acceptance -- --nocapture`

use btb_core::engines::{AffineEngine, DenoiserEngine, MedianEngine, NlmEngine, NlmParams};
use btb_core::image::{convolve2d, resolve_index, Image, Kernel2D, PaddingMode};
use btb_core::iteration::{btb_run, IterationConfig, IterationMode, MuSchedule};
use btb_core::metrics::psnr;
use btb_core::noise::{add_awgn, sample_speckle_intensity};
use btb_core::rfn::{self, RfnConfig, RfnDims, RfnKernel};
use btb_core::testimages;
use btb_core::tomogram::{render_intensities, scatterer_field, synth_tomogram, LayerSpec, SceneConfig};
use btb_core::vortice::{speckle_focused_run, speckle_level, vortice_run, VorticeConfig};

// --- pinned tolerances and thresholds -----------------------------------

/// Input-PSNR window around the analytic 20 log10(255 / sigma).
const NOISE_PSNR_TOL_DB: f64 = 0.15;
/// Contraction-ratio accuracy for the synthetic affine engine.
const RATE_TOL: f64 = 1e-9;
/// Relative slack on theorem-derived geometric bounds.
const BOUND_SLACK: f64 = 1e-12;
/// Relative tolerance on the local-energy second-moment calibration.
const ENERGY_REL_TOL: f64 = 0.05;
/// Variance window for the normalized white-noise signal.
const NORMALIZED_VAR_RANGE: (f64, f64) = (0.9, 1.1);
/// Speckle sample-moment tolerances (relative) and KS bound.
const SPECKLE_MEAN_TOL: f64 = 0.005;
const SPECKLE_STD_TOL: f64 = 0.01;
const SPECKLE_KS_BOUND: f64 = 0.002;
/// Fully developed contrast window on std/mean.
const CONTRAST_TOL: f64 = 0.03;
/// Required despeckling PSNR gain at iteration 3 (dB).
const DESPECKLE_GAIN_DB: f64 = 1.0;
/// Required denoising PSNR gain on the corpus (dB) and iteration budget.
const DENOISE_GAIN_DB: f64 = 3.0;
const DENOISE_MAX_ITERS: usize = 50;
/// Oracle agreement tolerances.
const CONV_ORACLE_REL: f64 = 1e-12;
const NLM_ORACLE_ABS: f64 = 1e-10;
const ENERGY_ORACLE_REL: f64 = 1e-12;
/// Soft wall-clock target for one despeckle iteration at 1024x1024.
const VORTICE_ITER_SOFT_MS: f64 = 1000.0;

fn lcg_image(h: usize, w: usize, seed: u64, peak: f64) -> Image<f64> {
    let mut state = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
    let data = (0..h * w)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * peak
        })
        .collect();
    Image::new(h, w, data, peak).unwrap()
}

fn wgn_image(h: usize, w: usize, mean: f64, std: f64, seed: u64) -> Image<f64> {
    add_awgn(&Image::constant(h, w, mean, 255.0), std, seed)
}

// --- noise-level sanity --------------------------------------------------

#[test]
fn awgn_input_psnr_matches_noise_level() {
    let clean = testimages::smooth_blobs::<f64>(256, 256, 0);
    for (sigma, expected) in [(10.0, 28.13), (15.0, 24.62), (25.0, 20.17)] {
        let noisy = add_awgn(&clean, sigma, 42);
        let measured = psnr(&noisy, &clean).unwrap();
        assert!(
            (measured - expected).abs() <= NOISE_PSNR_TOL_DB,
            "sigma {sigma}: psnr {measured:.3} outside {expected} +- {NOISE_PSNR_TOL_DB}"
        );
        println!(
            "PASS awgn sigma={sigma}: input psnr {measured:.3} dB within {expected} +- {NOISE_PSNR_TOL_DB}"
        );
    }
}

// --- successive iteration: contraction + Cauchy bound --------------------

#[test]
fn successive_iteration_contracts_at_engine_rate() {
    let x_star = lcg_image(24, 24, 5, 255.0);
    let y = lcg_image(24, 24, 6, 255.0);
    let w0 = y.l2_distance(&x_star);
    for q in [0.3, 0.5, 0.9] {
        let engine = AffineEngine::new(x_star.clone(), q);
        // Ten steps keep ||w_t|| far above the cancellation floor of the
        // x - x* subtraction while showing the geometric law.
        let cfg = IterationConfig {
            mode: IterationMode::Successive,
            mu: MuSchedule::Constant(1.0),
            delta: 0.0,
            max_iters: 10,
            ..IterationConfig::default()
        };
        let trace = btb_run(&y, &engine, &cfg).unwrap();
        let norms: Vec<f64> = trace.iterates.iter().map(|x| x.l2_distance(&x_star)).collect();
        let mut worst = 0.0f64;
        for t in 0..norms.len() - 1 {
            if norms[t] > 1e-12 * w0 {
                worst = worst.max((norms[t + 1] / norms[t] - q).abs());
            }
        }
        assert!(worst <= RATE_TOL, "q={q}: ratio error {worst:e}");
        // Cauchy bound over every recorded pair k > m.
        let n = trace.iterates.len();
        for m in 0..n {
            let bound = q.powi(m as i32) * (1.0 + q) / (1.0 - q) * w0;
            for k in m + 1..n {
                let d = trace.iterates[k].l2_distance(&trace.iterates[m]);
                assert!(
                    d <= bound * (1.0 + BOUND_SLACK),
                    "q={q} pair ({k},{m}): {d} > {bound}"
                );
            }
        }
        println!(
            "PASS successive q={q}: max ratio deviation {worst:.2e} <= {RATE_TOL:e}, Cauchy bound holds for all pairs"
        );
    }
}

// --- simple iteration: blended rate --------------------------------------

#[test]
fn simple_iteration_blends_the_contraction_rate() {
    let x_star = lcg_image(24, 24, 7, 255.0);
    let y = lcg_image(24, 24, 8, 255.0);
    let q = 0.5;
    let engine = AffineEngine::new(x_star.clone(), q);
    for mu in [0.25, 0.5, 0.8] {
        let cfg = IterationConfig {
            mode: IterationMode::Simple,
            mu: MuSchedule::Constant(mu),
            delta: 0.0,
            max_iters: 15,
            ..IterationConfig::default()
        };
        let trace = btb_run(&y, &engine, &cfg).unwrap();
        let blended = 1.0 - mu + mu * q;
        let norms: Vec<f64> = trace.iterates.iter().map(|x| x.l2_distance(&x_star)).collect();
        let mut worst = 0.0f64;
        for t in 0..norms.len() - 1 {
            if norms[t] > 0.0 {
                worst = worst.max((norms[t + 1] / norms[t] - blended).abs());
            }
        }
        assert!(worst <= RATE_TOL, "mu={mu}: rate error {worst:e}");
        println!(
            "PASS simple mu={mu}: measured rate matches 1-mu+mu*q={blended} within {worst:.2e}"
        );
    }
}

// --- RFN: exact zero at constants + white-noise calibration --------------

#[test]
fn rfn_constants_vanish_and_wgn_energy_is_calibrated() {
    let tau = 0.25;
    for c in [tau + 1e-6, 1.0, 10.0] {
        for kernel in [
            RfnKernel::rectangular(5, RfnDims::Two).unwrap(),
            RfnKernel::gaussian(7, RfnDims::Two).unwrap(),
        ] {
            let cfg = RfnConfig::new(kernel, tau).unwrap();
            let img = Image::constant(16, 16, c, 255.0);
            let g = rfn::operator(&img, &cfg).unwrap();
            assert!(
                g.data().iter().all(|&v| v == 0.0),
                "g({c} * ones) not exactly zero"
            );
        }
    }
    println!("PASS rfn: g(c*ones) == 0 exactly for c in {{tau+eps, 1, 10}}");

    // WGN(0,1): second moment of the local energy and variance of the
    // normalized signal. 350x350 > 1e5 samples.
    let kernel = RfnKernel::gaussian(15, RfnDims::Two).unwrap();
    let img = wgn_image(350, 350, 0.0, 1.0, 9001);
    let sigma = rfn::local_energy(&img, &kernel);
    let mean_sq = sigma.data().iter().map(|&v| v * v).sum::<f64>() / sigma.pixel_count() as f64;
    assert!(
        (mean_sq - 1.0).abs() <= ENERGY_REL_TOL,
        "mean sigma^2 {mean_sq} not within 5% of 1"
    );
    let cfg = RfnConfig::new(kernel.clone(), 0.25).unwrap();
    let normalized = rfn::normalize(&img, &cfg);
    let var = normalized.variance();
    assert!(
        var >= NORMALIZED_VAR_RANGE.0 && var <= NORMALIZED_VAR_RANGE.1,
        "normalized variance {var} outside [0.9, 1.1]"
    );
    println!(
        "PASS rfn wgn(0,1): mean sigma^2 {mean_sq:.4} (within 5% of 1), normalized variance {var:.4} in [0.9, 1.1]"
    );

    // WGN(m, s^2): second moment estimates s^2 + m^2.
    let (m, s) = (2.0, 1.5);
    let img = wgn_image(350, 350, m, s, 9002);
    let sigma = rfn::local_energy(&img, &kernel);
    let mean_sq = sigma.data().iter().map(|&v| v * v).sum::<f64>() / sigma.pixel_count() as f64;
    let expected = s * s + m * m;
    assert!(
        (mean_sq - expected).abs() <= ENERGY_REL_TOL * expected,
        "mean sigma^2 {mean_sq} not within 5% of {expected}"
    );
    println!("PASS rfn wgn({m},{s}^2): mean sigma^2 {mean_sq:.4} within 5% of {expected}");
}

// --- speckle statistics ---------------------------------------------------

#[test]
fn speckle_samples_follow_the_exponential_law() {
    let mean_x = 2.5;
    let n = 1_000_000;
    let samples: Vec<f64> = sample_speckle_intensity(mean_x, n, 77).unwrap();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    assert!(
        (mean - mean_x).abs() <= SPECKLE_MEAN_TOL * mean_x,
        "mean {mean} vs {mean_x}"
    );
    assert!(
        (std - mean_x).abs() <= SPECKLE_STD_TOL * mean_x,
        "std {std} vs {mean_x}"
    );

    // Kolmogorov-Smirnov distance to Exp(mean_x).
    let mut sorted = samples;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut ks = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = 1.0 - (-x / mean_x).exp();
        let lo = i as f64 / n as f64;
        let hi = (i + 1) as f64 / n as f64;
        ks = ks.max((cdf - lo).abs()).max((cdf - hi).abs());
    }
    assert!(ks <= SPECKLE_KS_BOUND, "KS statistic {ks}");
    println!(
        "PASS speckle law: mean {mean:.4} (target {mean_x} +- 0.5%), std {std:.4} (+- 1%), KS {ks:.5} < {SPECKLE_KS_BOUND}"
    );

    // Fully developed contrast in a dense tomogram layer, pre-log domain.
    let scene = SceneConfig {
        height: 256,
        width: 256,
        axial_pitch: 0.8,
        lateral_pitch: 1.5,
        layers: vec![LayerSpec { row_start: 0, row_end: 256, density: 0.5 }],
        ..SceneConfig::default()
    };
    let field = scatterer_field::<f64>(&scene, 33).unwrap();
    let (coherent, _) = render_intensities(&scene, &field);
    let margin = 14;
    let mut values = Vec::new();
    for r in margin..256 - margin {
        for c in margin..256 - margin {
            values.push(coherent.get(r, c));
        }
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let contrast = var.sqrt() / mean;
    assert!(
        (contrast - 1.0).abs() <= CONTRAST_TOL,
        "std/mean {contrast} outside 1 +- 3%"
    );
    println!("PASS fully developed speckle: std/mean {contrast:.4} within 1 +- {CONTRAST_TOL}");
}

// --- despeckling behavior on the simulator --------------------------------

#[test]
fn despeckling_reduces_speckle_and_improves_psnr() {
    let scene = SceneConfig::default();
    let kernel = RfnKernel::<f64>::gaussian(15, RfnDims::Two).unwrap();
    let rfn = RfnConfig::new(kernel, 0.25).unwrap();
    let cfg = VorticeConfig {
        rfn: rfn.clone(),
        alpha: 0.4,
        beta: 0.4,
        delta: 0.0,
        max_iters: 5,
    };
    let mut min_gain = f64::INFINITY;
    for seed in 0..10u64 {
        let (y, x_ref) = synth_tomogram::<f64>(&scene, seed).unwrap();
        let base = psnr(&y, &x_ref).unwrap();
        for (alg, trace) in [
            ("vortice", vortice_run(&y, &cfg).unwrap()),
            ("focused", speckle_focused_run(&y, &cfg).unwrap()),
        ] {
            let levels: Vec<f64> = trace
                .iterates
                .iter()
                .map(|im| speckle_level(im, &rfn))
                .collect();
            for t in 1..=5 {
                assert!(
                    levels[t] < levels[t - 1],
                    "seed {seed} {alg}: speckle level not strictly decreasing at t={t}: {levels:?}"
                );
            }
            let gain = psnr(&trace.iterates[3], &x_ref).unwrap() - base;
            assert!(
                gain >= DESPECKLE_GAIN_DB,
                "seed {seed} {alg}: psnr gain {gain:.2} dB below {DESPECKLE_GAIN_DB}"
            );
            min_gain = min_gain.min(gain);
        }
    }
    println!(
        "PASS despeckling: speckle level strictly decreasing (t=1..5, both loops, 10 seeds); min psnr gain at t=3 is {min_gain:.2} dB >= {DESPECKLE_GAIN_DB}"
    );
}

// --- BTB denoising gain on the bundled corpus -----------------------------

#[test]
fn btb_nlm_gains_on_awgn25_corpus() {
    let engine = NlmEngine::new(NlmParams {
        patch_radius: 1,
        search_radius: 5,
        h: 12.0,
        sigma_est: 0.0,
    })
    .unwrap();
    let mut min_gain = f64::INFINITY;
    for (name, clean) in testimages::corpus::<f64>(256, 256) {
        let noisy = add_awgn(&clean, 25.0, 7);
        let cfg = IterationConfig {
            mode: IterationMode::Simple,
            mu: MuSchedule::Constant(0.8),
            delta: IterationConfig::auto_delta(&noisy),
            max_iters: DENOISE_MAX_ITERS,
            ..IterationConfig::default()
        };
        let trace = btb_run(&noisy, &engine, &cfg).unwrap();
        assert!(trace.iters_run <= DENOISE_MAX_ITERS);
        let base = psnr(&noisy, &clean).unwrap();
        let out = psnr(trace.final_image(), &clean).unwrap();
        let gain = out - base;
        assert!(
            gain >= DENOISE_GAIN_DB,
            "{name}: gain {gain:.2} dB below {DENOISE_GAIN_DB} (in {base:.2}, out {out:.2})"
        );
        min_gain = min_gain.min(gain);
        println!(
            "  btb+nlm on {name}: {base:.2} -> {out:.2} dB in {} iterations",
            trace.iters_run
        );
    }
    println!(
        "PASS btb denoising: min gain {min_gain:.2} dB >= {DENOISE_GAIN_DB} within {DENOISE_MAX_ITERS} iterations"
    );
}

// --- oracle equivalence ----------------------------------------------------

#[test]
fn implementations_match_brute_force_oracles() {
    // Convolution against a sequential nested-loop oracle.
    for seed in 0..20u64 {
        let img = lcg_image(9, 11, seed, 255.0);
        let k = {
            let raw = lcg_image(3, 3, seed + 500, 1.0);
            Kernel2D::new(3, raw.data().to_vec()).unwrap()
        };
        let got = convolve2d(&img, &k, PaddingMode::SymmetricReflect);
        for r in 0..img.height() {
            for c in 0..img.width() {
                let mut acc = 0.0;
                for u in 0..3usize {
                    for v in 0..3usize {
                        let rr = r as isize - (u as isize - 1);
                        let cc = c as isize - (v as isize - 1);
                        let sr = resolve_index(rr, img.height(), PaddingMode::SymmetricReflect)
                            .unwrap();
                        let sc = resolve_index(cc, img.width(), PaddingMode::SymmetricReflect)
                            .unwrap();
                        acc += k.weight(u, v) * img.get(sr, sc);
                    }
                }
                let rel = (got.get(r, c) - acc).abs() / acc.abs().max(1.0);
                assert!(rel <= CONV_ORACLE_REL, "convolution mismatch at ({r},{c})");
            }
        }
    }
    println!("PASS oracle: convolve2d matches the nested-loop oracle on 20 instances");

    // Median filter against full-sort selection.
    for seed in 0..20u64 {
        let img = lcg_image(8, 8, seed + 40, 255.0);
        let out = MedianEngine::new(1).unwrap().denoise(&img);
        for r in 0..8usize {
            for c in 0..8usize {
                let mut window = Vec::new();
                for dr in -1isize..=1 {
                    for dc in -1isize..=1 {
                        let sr = resolve_index(r as isize + dr, 8, PaddingMode::SymmetricReflect)
                            .unwrap();
                        let sc = resolve_index(c as isize + dc, 8, PaddingMode::SymmetricReflect)
                            .unwrap();
                        window.push(img.get(sr, sc));
                    }
                }
                window.sort_by(|a, b| a.partial_cmp(b).unwrap());
                assert_eq!(out.get(r, c), window[4], "median mismatch at ({r},{c})");
            }
        }
    }
    println!("PASS oracle: median filter matches full-sort selection on 20 instances");

    // Non-local means against the quadratic-loop formula.
    let params = NlmParams {
        patch_radius: 1,
        search_radius: 3,
        h: 30.0,
        sigma_est: 0.0,
    };
    let engine = NlmEngine::new(params).unwrap();
    for seed in 0..20u64 {
        let img = lcg_image(12, 12, seed + 90, 255.0);
        let got = engine.denoise(&img);
        let read = |r: isize, c: isize| -> f64 {
            let sr = resolve_index(r, 12, PaddingMode::SymmetricReflect).unwrap();
            let sc = resolve_index(c, 12, PaddingMode::SymmetricReflect).unwrap();
            img.get(sr, sc)
        };
        for r in 0..12isize {
            for c in 0..12isize {
                let mut weights = Vec::new();
                let mut values = Vec::new();
                for dr in -3isize..=3 {
                    for dc in -3isize..=3 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let mut d2 = 0.0;
                        for a in -1isize..=1 {
                            for b in -1isize..=1 {
                                let d = read(r + a, c + b) - read(r + dr + a, c + dc + b);
                                d2 += d * d;
                            }
                        }
                        d2 /= 9.0;
                        weights.push((-d2 / (params.h * params.h)).exp());
                        values.push(read(r + dr, c + dc));
                    }
                }
                let wmax = weights.iter().copied().fold(0.0f64, f64::max);
                weights.push(wmax);
                values.push(read(r, c));
                let wsum: f64 = weights.iter().sum();
                let expect =
                    weights.iter().zip(&values).map(|(x, y)| x * y).sum::<f64>() / wsum;
                assert!(
                    (got.get(r as usize, c as usize) - expect).abs() <= NLM_ORACLE_ABS,
                    "nlm mismatch at ({r},{c})"
                );
            }
        }
    }
    println!("PASS oracle: non-local means matches the quadratic-loop oracle on 20 instances");

    // Local weighted energy against the direct definition sqrt(h * v^2).
    for seed in 0..20u64 {
        let img = lcg_image(10, 10, seed + 130, 1.0);
        let kernel = RfnKernel::gaussian(5, RfnDims::Two).unwrap();
        let got = rfn::local_energy(&img, &kernel);
        let radius = 2isize;
        for r in 0..10isize {
            for c in 0..10isize {
                let mut acc = 0.0;
                for u in 0..5usize {
                    for v in 0..5usize {
                        let rr = r - (u as isize - radius);
                        let cc = c - (v as isize - radius);
                        let sr = resolve_index(rr, 10, PaddingMode::SymmetricReflect).unwrap();
                        let sc = resolve_index(cc, 10, PaddingMode::SymmetricReflect).unwrap();
                        let x = img.get(sr, sc);
                        acc += kernel.weights()[u * 5 + v] * x * x;
                    }
                }
                let expect = acc.sqrt();
                let rel = (got.get(r as usize, c as usize) - expect).abs() / expect.max(1e-12);
                assert!(rel <= ENERGY_ORACLE_REL, "energy mismatch at ({r},{c})");
            }
        }
    }
    println!("PASS oracle: rfn local energy matches the direct definition on 20 instances");
}

// --- soft runtime target ----------------------------------------------------

#[test]
fn vortice_iteration_runtime_report() {
    let base = testimages::smooth_blobs::<f64>(1024, 1024, 2)
        .map(|v| v / 255.0)
        .with_peak(1.0);
    let kernel = RfnKernel::<f64>::gaussian(15, RfnDims::Two).unwrap();
    let rfn = RfnConfig::new(kernel, 0.25).unwrap();
    let cfg = VorticeConfig {
        rfn,
        alpha: 0.4,
        beta: 0.4,
        delta: 0.0,
        max_iters: 1,
    };
    let start = std::time::Instant::now();
    let trace = vortice_run(&base, &cfg).unwrap();
    let ms = start.elapsed().as_secs_f64() * 1e3;
    assert!(trace.final_image().is_finite());
    let verdict = if ms < VORTICE_ITER_SOFT_MS { "within" } else { "above" };
    // Soft target: reported, never failed.
    println!(
        "PASS (soft) runtime: one 1024x1024 despeckle iteration took {ms:.0} ms ({verdict} the {VORTICE_ITER_SOFT_MS:.0} ms soft target)"
    );
}
