//! Directory benchmark: corrupt every image with a noise spec, run a
//! method, and report per-image quality plus an averages row.
//!
//! CSV schema (stable):
//! `image,method,psnr_in,ssim_in,psnr_out,ssim_out,iters,ms`
//! followed by one `average` row holding the arithmetic mean of each
//! numeric column. Images are processed in parallel workers (capped by
//! `BTB_THREADS`); per-image results are deterministic and rows are
//! sorted by image id.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;

use btb_core::engines::parse_engine;
use btb_core::error::Error;
use btb_core::io::load_image;
use btb_core::iteration::{btb_run, IterationConfig, IterationMode, MuSchedule};
use btb_core::metrics::{psnr, ssim, SsimParams};
use btb_core::noise::NoiseSpec;
use btb_core::rfn::{parse_window, RfnConfig, RfnDims};
use btb_core::vortice::{speckle_focused_run, vortice_run, VorticeConfig};
use btb_core::{Image, Result};

use crate::csv_error;

#[derive(Args)]
pub struct BenchArgs {
    /// Directory of clean images (pgm, png or btbf).
    #[arg(long)]
    dir: PathBuf,
    /// Noise spec applied to each image: awgn:25 | poisson | speckle.
    #[arg(long)]
    noise: String,
    /// Method spec, e.g. `gaussian:std=1.5`,
    /// `btb:engine=nlm:patch=1,search=5,h=12;mode=simple;mu=0.8;iters=40`,
    /// `vortice:window=gaussian:15;tau=0.25;alpha=0.4;iters=5`.
    #[arg(long)]
    method: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// One executable benchmark method.
enum Method {
    /// Single engine application.
    Engine(String),
    Btb {
        engine: String,
        mode: IterationMode,
        mu: f64,
        beta: f64,
        iters: usize,
        delta: DeltaSpec,
    },
    Despeckle {
        focused: bool,
        window: String,
        tau: f64,
        alpha: f64,
        beta: f64,
        iters: usize,
        delta: f64,
    },
}

enum DeltaSpec {
    Auto,
    Fixed(f64),
}

/// Split `key=value` pairs on `;`; values may contain `:` and `,` (engine
/// and window specs embed them).
fn split_params(params: &str) -> Result<Vec<(&str, &str)>> {
    params
        .split(';')
        .filter(|part| !part.is_empty())
        .map(|part| {
            part.split_once('=')
                .ok_or_else(|| Error::parse(format!("expected key=value in method part {part:?}")))
        })
        .collect()
}

fn parse_method(spec: &str) -> Result<Method> {
    let (name, params) = match spec.split_once(':') {
        Some((n, p)) => (n, p),
        None => (spec, ""),
    };
    match name {
        "btb" => {
            let mut engine = None;
            let mut mode = IterationMode::Simple;
            let mut mu = 0.8;
            let mut beta = 0.0;
            let mut iters = 40;
            let mut delta = DeltaSpec::Auto;
            for (key, value) in split_params(params)? {
                match key {
                    "engine" => engine = Some(value.to_string()),
                    "mode" => mode = value.parse()?,
                    "mu" => mu = parse_num(key, value)?,
                    "beta" => beta = parse_num(key, value)?,
                    "iters" => iters = parse_num(key, value)? as usize,
                    "delta" => {
                        delta = if value == "auto" {
                            DeltaSpec::Auto
                        } else {
                            DeltaSpec::Fixed(parse_num(key, value)?)
                        }
                    }
                    other => {
                        return Err(Error::parse(format!("unknown btb method key {other:?}")))
                    }
                }
            }
            let engine =
                engine.ok_or_else(|| Error::parse("btb method needs engine=<spec>"))?;
            parse_engine::<f64>(&engine)?;
            Ok(Method::Btb { engine, mode, mu, beta, iters, delta })
        }
        "vortice" | "focused" => {
            let mut window = "gaussian:15".to_string();
            let mut tau = 0.25;
            let mut alpha = 0.4;
            let mut beta = 0.4;
            let mut iters = 5;
            let mut delta = 0.0;
            for (key, value) in split_params(params)? {
                match key {
                    "window" => window = value.to_string(),
                    "tau" => tau = parse_num(key, value)?,
                    "alpha" => alpha = parse_num(key, value)?,
                    "beta" => beta = parse_num(key, value)?,
                    "iters" => iters = parse_num(key, value)? as usize,
                    "delta" => delta = parse_num(key, value)?,
                    other => {
                        return Err(Error::parse(format!(
                            "unknown despeckle method key {other:?}"
                        )))
                    }
                }
            }
            parse_window::<f64>(&window, RfnDims::Two)?;
            Ok(Method::Despeckle {
                focused: name == "focused",
                window,
                tau,
                alpha,
                beta,
                iters,
                delta,
            })
        }
        _ => {
            // Bare engine spec: validate it parses.
            parse_engine::<f64>(spec)?;
            Ok(Method::Engine(spec.to_string()))
        }
    }
}

impl Method {
    /// Apply to one image; returns the output and the iteration count.
    fn apply(&self, noisy: &Image) -> Result<(Image, usize)> {
        match self {
            Method::Engine(spec) => {
                let engine = parse_engine::<f64>(spec)?;
                Ok((engine.denoise(noisy), 1))
            }
            Method::Btb { engine, mode, mu, beta, iters, delta } => {
                let engine = parse_engine::<f64>(engine)?;
                let cfg = IterationConfig {
                    mode: *mode,
                    mu: MuSchedule::Constant(*mu),
                    beta: *beta,
                    delta: match delta {
                        DeltaSpec::Auto => IterationConfig::auto_delta(noisy),
                        DeltaSpec::Fixed(d) => *d,
                    },
                    max_iters: *iters,
                    epsilon: 0.0,
                    seed: 0,
                };
                let trace = btb_run(noisy, engine.as_ref(), &cfg)?;
                Ok((trace.final_image().clone(), trace.iters_run))
            }
            Method::Despeckle { focused, window, tau, alpha, beta, iters, delta } => {
                let kernel = parse_window::<f64>(window, RfnDims::Two)?;
                let rfn = RfnConfig::new(kernel, *tau)?;
                let cfg = VorticeConfig {
                    rfn,
                    alpha: *alpha,
                    beta: *beta,
                    delta: *delta,
                    max_iters: *iters,
                };
                let trace = if *focused {
                    speckle_focused_run(noisy, &cfg)?
                } else {
                    vortice_run(noisy, &cfg)?
                };
                Ok((trace.final_image().clone(), trace.iters_run))
            }
        }
    }
}

#[derive(Debug, Clone)]
struct BenchmarkRow {
    image: String,
    psnr_in: f64,
    ssim_in: f64,
    psnr_out: f64,
    ssim_out: f64,
    iters: usize,
    ms: f64,
}

fn image_paths(dir: &PathBuf) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if !path.is_file() {
            continue;
        }
        if matches!(
            path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
            Some("pgm") | Some("png") | Some("btbf")
        ) {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::domain(format!(
            "no pgm/png/btbf images in {}",
            dir.display()
        )));
    }
    Ok(paths)
}

pub fn run_bench(args: BenchArgs) -> Result<()> {
    // Validate specs up front so usage errors surface before any work.
    parse_method(&args.method)?;
    NoiseSpec::parse(&args.noise, args.seed)?;
    let paths = image_paths(&args.dir)?;

    let rows: Result<Vec<BenchmarkRow>> = paths
        .par_iter()
        .enumerate()
        .map(|(index, path)| -> Result<BenchmarkRow> {
            let method = parse_method(&args.method)?;
            let noise = NoiseSpec::parse(&args.noise, args.seed.wrapping_add(index as u64))?;
            let clean: Image = load_image(path)?;
            let noisy = noise.apply(&clean)?;
            let ssim_params = SsimParams::default();
            let psnr_in = psnr(&noisy, &clean)?;
            let ssim_in = ssim(&noisy, &clean, &ssim_params)?;
            let start = Instant::now();
            let (output, iters) = method.apply(&noisy)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            let psnr_out = psnr(&output, &clean)?;
            let ssim_out = ssim(&output, &clean, &ssim_params)?;
            let image = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("image")
                .to_string();
            Ok(BenchmarkRow {
                image,
                psnr_in,
                ssim_in,
                psnr_out,
                ssim_out,
                iters,
                ms,
            })
        })
        .collect();
    let mut rows = rows?;
    rows.sort_by(|a, b| a.image.cmp(&b.image));

    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout().lock()),
    };
    write_csv(&mut out, &rows, &args.method)?;
    Ok(())
}

fn write_csv(out: &mut dyn Write, rows: &[BenchmarkRow], method: &str) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record([
            "image", "method", "psnr_in", "ssim_in", "psnr_out", "ssim_out", "iters", "ms",
        ])
        .map_err(csv_error)?;
    for row in rows {
        writer
            .write_record([
                row.image.clone(),
                method.to_string(),
                format!("{:.12}", row.psnr_in),
                format!("{:.12}", row.ssim_in),
                format!("{:.12}", row.psnr_out),
                format!("{:.12}", row.ssim_out),
                row.iters.to_string(),
                format!("{:.12}", row.ms),
            ])
            .map_err(csv_error)?;
    }
    let n = rows.len() as f64;
    let mean = |f: fn(&BenchmarkRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    writer
        .write_record([
            "average".to_string(),
            method.to_string(),
            format!("{:.12}", mean(|r| r.psnr_in)),
            format!("{:.12}", mean(|r| r.ssim_in)),
            format!("{:.12}", mean(|r| r.psnr_out)),
            format!("{:.12}", mean(|r| r.ssim_out)),
            format!("{:.12}", mean(|r| r.iters as f64)),
            format!("{:.12}", mean(|r| r.ms)),
        ])
        .map_err(csv_error)?;
    writer.flush()?;
    Ok(())
}

fn parse_num(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::parse(format!("invalid number {value:?} for method key {key:?}")))
}
