//! Command-line interface: noise synthesis, fixed-point denoising,
//! despeckling, quality evaluation and directory benchmarks.

mod bench;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use btb_core::color::{color_transform, ColorDirection};
use btb_core::engines::parse_engine;
use btb_core::error::Error;
use btb_core::io::{load_image, load_png_rgb, save_image, save_png_rgb, ImageFormat};
use btb_core::iteration::{btb_run, IterationConfig, IterationMode, IterationTrace, MuSchedule};
use btb_core::metrics::{psnr, quantize_to_8bit, ssim, SsimParams};
use btb_core::rfn::{self, parse_window, RfnConfig, RfnDims};
use btb_core::tomogram::{synth_tomogram, SceneConfig};
use btb_core::vortice::{speckle_focused_run, vortice_run, VorticeConfig};
use btb_core::{Image, Result};

#[derive(Parser)]
#[command(
    name = "btb",
    about = "Fixed-point iterative denoising, RFN despeckling and noise synthesis",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corrupt an image with synthetic noise, or synthesize a tomogram pair.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Run the fixed-point denoising iteration around an engine.
    Btb(BtbArgs),
    /// Despeckle with the RFN-based loops.
    Despeckle(DespeckleArgs),
    /// Visualize the receptive-field normalization of an image.
    Rfn(RfnArgs),
    /// Compare two images with quality metrics.
    Eval(EvalArgs),
    /// Benchmark a method over a directory of images.
    Bench(bench::BenchArgs),
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Additive white Gaussian noise.
    Awgn {
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        input: PathBuf,
        output: PathBuf,
    },
    /// Poisson shot noise (each pixel drawn with its clean value as mean).
    Poisson {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        input: PathBuf,
        output: PathBuf,
    },
    /// Multiplicative exponential speckle.
    Speckle {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        input: PathBuf,
        output: PathBuf,
    },
    /// Layered-scatterer tomogram pair (speckled + speckle-free).
    Tomogram {
        /// Scene description file; defaults to the built-in phantom.
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path of the speckled tomogram.
        #[arg(long)]
        speckled: PathBuf,
        /// Output path of the speckle-free reference.
        #[arg(long)]
        clean: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChannelMode {
    /// Process only the luma plane of color input.
    Y,
    /// Process all three YCbCr planes of a color PNG.
    All,
}

#[derive(Args)]
struct BtbArgs {
    /// Engine spec: gaussian:std=1.5 | median:r=1 | nlm:patch=1,search=5,h=10.
    #[arg(long)]
    engine: String,
    /// Update rule: successive | simple | anchored | langevin.
    #[arg(long, default_value = "simple")]
    mode: String,
    /// Step size in (0, 1].
    #[arg(long, default_value_t = 0.8)]
    mu: f64,
    /// Langevin perturbation scale.
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 40)]
    max_iters: usize,
    /// Stopping threshold on the step norm; `auto` scales with the image.
    #[arg(long, default_value = "auto")]
    delta: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write a per-iteration CSV: iter,step_norm[,psnr].
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Clean reference; adds a psnr column to the trace.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Treat the input as a color PNG and convert through YCbCr.
    #[arg(long, default_value_t = false)]
    color: bool,
    /// Which planes to denoise in color mode.
    #[arg(long, value_enum, default_value = "y")]
    channels: ChannelMode,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DespeckleAlgo {
    Vortice,
    Focused,
}

#[derive(Args)]
struct DespeckleArgs {
    #[arg(long, value_enum, default_value = "vortice")]
    algo: DespeckleAlgo,
    #[arg(long, default_value_t = 0.4)]
    alpha: f64,
    #[arg(long, default_value_t = 0.4)]
    beta: f64,
    /// RFN window: gaussian:15 | rect:15.
    #[arg(long, default_value = "gaussian:15")]
    window: String,
    #[arg(long, default_value_t = 0.25)]
    tau: f64,
    #[arg(long, default_value_t = 5)]
    iters: usize,
    /// Stopping threshold on the step norm.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    /// Write a per-iteration CSV: iter,step_norm[,psnr].
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Speckle-free reference; adds a psnr column to the trace.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Args)]
struct RfnArgs {
    /// RFN window: gaussian:15 | rect:15.
    #[arg(long, default_value = "gaussian:15")]
    window: String,
    #[arg(long, default_value_t = 0.25)]
    tau: f64,
    /// Use the signum form of the operator.
    #[arg(long, default_value_t = false)]
    signed: bool,
    input: PathBuf,
    /// Output image of |v~ - 1|, scaled to its own maximum.
    output: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Comma-separated list from {psnr, ssim}.
    #[arg(long, default_value = "psnr,ssim")]
    metrics: String,
    /// Emit a CSV header and row instead of labeled lines.
    #[arg(long, default_value_t = false)]
    csv: bool,
    /// Snap both images onto the 8-bit export grid before measuring.
    #[arg(long, default_value_t = false)]
    quantize_metrics: bool,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("BTB_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(cmd) => run_synth(cmd),
        Command::Btb(args) => run_btb(args),
        Command::Despeckle(args) => run_despeckle(args),
        Command::Rfn(args) => run_rfn(args),
        Command::Eval(args) => run_eval(args),
        Command::Bench(args) => bench::run_bench(args),
    }
}

fn output_format(path: &PathBuf) -> Result<ImageFormat> {
    ImageFormat::from_path(path)
}

fn run_synth(cmd: SynthCommand) -> Result<()> {
    match cmd {
        SynthCommand::Awgn { sigma, seed, input, output } => {
            if sigma < 0.0 {
                return Err(Error::config("sigma must be nonnegative"));
            }
            let img: Image = load_image(&input)?;
            let noisy = btb_core::noise::add_awgn(&img, sigma, seed);
            save_image(&noisy, &output, output_format(&output)?)
        }
        SynthCommand::Poisson { seed, input, output } => {
            let img: Image = load_image(&input)?;
            let noisy = btb_core::noise::add_poisson(&img, seed)?;
            save_image(&noisy, &output, output_format(&output)?)
        }
        SynthCommand::Speckle { seed, input, output } => {
            let img: Image = load_image(&input)?;
            let noisy = btb_core::noise::add_speckle(&img, seed)?;
            save_image(&noisy, &output, output_format(&output)?)
        }
        SynthCommand::Tomogram { scene, seed, speckled, clean } => {
            let scene = match scene {
                Some(path) => SceneConfig::from_file(path)?,
                None => SceneConfig::default(),
            };
            let (y, x) = synth_tomogram::<f64>(&scene, seed)?;
            save_image(&y, &speckled, output_format(&speckled)?)?;
            save_image(&x, &clean, output_format(&clean)?)
        }
    }
}

fn parse_delta(spec: &str, img: &Image) -> Result<f64> {
    if spec == "auto" {
        Ok(IterationConfig::auto_delta(img))
    } else {
        spec.parse()
            .map_err(|_| Error::parse(format!("invalid delta {spec:?} (number or 'auto')")))
    }
}

fn write_trace(
    path: &PathBuf,
    trace: &IterationTrace<f64>,
    reference: Option<&Image>,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    if reference.is_some() {
        writer
            .write_record(["iter", "step_norm", "psnr"])
            .map_err(csv_error)?;
    } else {
        writer.write_record(["iter", "step_norm"]).map_err(csv_error)?;
    }
    for (t, step) in trace.step_norms.iter().enumerate() {
        let iter = (t + 1).to_string();
        let step = format!("{step:.9e}");
        match reference {
            Some(clean) => {
                let p = psnr(&trace.iterates[t + 1], clean)?;
                writer
                    .write_record([iter, step, format!("{p:.6}")])
                    .map_err(csv_error)?;
            }
            None => {
                writer.write_record([iter, step]).map_err(csv_error)?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}

pub(crate) fn csv_error(err: csv::Error) -> Error {
    Error::format(0, format!("csv: {err}"))
}

fn run_btb(args: BtbArgs) -> Result<()> {
    let engine = parse_engine::<f64>(&args.engine)?;
    let mode: IterationMode = args.mode.parse()?;
    let reference = args.reference.as_ref().map(load_image::<f64>).transpose()?;

    let run_plane = |plane: &Image| -> Result<IterationTrace<f64>> {
        let cfg = IterationConfig {
            mode,
            mu: MuSchedule::Constant(args.mu),
            beta: args.beta,
            delta: parse_delta(&args.delta, plane)?,
            max_iters: args.max_iters,
            epsilon: 0.0,
            seed: args.seed,
        };
        btb_run(plane, engine.as_ref(), &cfg)
    };

    if args.color {
        let planes = load_png_rgb::<f64>(&args.input)?;
        let [y, cb, cr] = color_transform(&planes, ColorDirection::RgbToYcbcr)?;
        let trace_y = run_plane(&y)?;
        let (out_cb, out_cr) = match args.channels {
            ChannelMode::Y => (cb, cr),
            ChannelMode::All => {
                let t_cb = run_plane(&cb)?;
                let t_cr = run_plane(&cr)?;
                (t_cb.final_image().clone(), t_cr.final_image().clone())
            }
        };
        if let Some(path) = &args.trace {
            write_trace(path, &trace_y, reference.as_ref())?;
        }
        let rgb = color_transform(
            &[trace_y.final_image().clone(), out_cb, out_cr],
            ColorDirection::YcbcrToRgb,
        )?;
        save_png_rgb(&rgb, &args.output)
    } else {
        let img: Image = load_image(&args.input)?;
        let trace = run_plane(&img)?;
        if let Some(path) = &args.trace {
            write_trace(path, &trace, reference.as_ref())?;
        }
        save_image(trace.final_image(), &args.output, output_format(&args.output)?)
    }
}

fn run_despeckle(args: DespeckleArgs) -> Result<()> {
    let img: Image = load_image(&args.input)?;
    let kernel = parse_window::<f64>(&args.window, RfnDims::Two)?;
    let rfn = RfnConfig::new(kernel, args.tau)?;
    let cfg = VorticeConfig {
        rfn,
        alpha: args.alpha,
        beta: args.beta,
        delta: args.delta,
        max_iters: args.iters,
    };
    let trace = match args.algo {
        DespeckleAlgo::Vortice => vortice_run(&img, &cfg)?,
        DespeckleAlgo::Focused => speckle_focused_run(&img, &cfg)?,
    };
    if let Some(path) = &args.trace {
        let reference = args.reference.as_ref().map(load_image::<f64>).transpose()?;
        write_trace(path, &trace, reference.as_ref())?;
    }
    save_image(trace.final_image(), &args.output, output_format(&args.output)?)
}

fn run_rfn(args: RfnArgs) -> Result<()> {
    let img: Image = load_image(&args.input)?;
    let kernel = parse_window::<f64>(&args.window, RfnDims::Two)?;
    let cfg = RfnConfig::new(kernel, args.tau)?.signed(args.signed);
    // Normalized deviation map |v~ - 1| (|v~ - sign(v)| for the signum
    // form), rendered on its own dynamic range.
    let normalized = rfn::normalize(&img, &cfg);
    let deviation = if args.signed {
        normalized.zip_map(&img, |v, orig| {
            let s = if orig > 0.0 {
                1.0
            } else if orig < 0.0 {
                -1.0
            } else {
                0.0
            };
            (v - s).abs()
        })
    } else {
        normalized.map(|v| (v - 1.0).abs())
    };
    let max = deviation.max_value().max(f64::MIN_POSITIVE);
    let vis = deviation.map(|v| v / max).with_peak(1.0);
    save_image(&vis, &args.output, output_format(&args.output)?)
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let mut reference: Image = load_image(&args.reference)?;
    let mut test: Image = load_image(&args.test)?;
    if args.quantize_metrics {
        reference = quantize_to_8bit(&reference);
        test = quantize_to_8bit(&test);
    }
    let mut names = Vec::new();
    let mut values = Vec::new();
    for metric in args.metrics.split(',') {
        match metric.trim() {
            "psnr" => {
                names.push("psnr");
                values.push(psnr(&reference, &test)?);
            }
            "ssim" => {
                names.push("ssim");
                values.push(ssim(&reference, &test, &SsimParams::default())?);
            }
            other => {
                return Err(Error::parse(format!(
                    "unknown metric {other:?} (expected psnr or ssim)"
                )))
            }
        }
    }
    if args.csv {
        println!("ref,test,{}", names.join(","));
        let rendered: Vec<String> = values.iter().map(|v| format!("{v:.6}")).collect();
        println!(
            "{},{},{}",
            args.reference.display(),
            args.test.display(),
            rendered.join(",")
        );
    } else {
        for (name, value) in names.iter().zip(&values) {
            if *name == "psnr" {
                println!("{name}: {value:.4} dB");
            } else {
                println!("{name}: {value:.6}");
            }
        }
    }
    Ok(())
}
