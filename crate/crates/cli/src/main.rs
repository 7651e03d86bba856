use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand, ValueEnum};

use arinpaint_cli::{
    degrade, evaluate_files, inpaint_file, load_corpus, run_sweep, CellReport, MethodSpec, SweepSpec,
};
use arinpaint_core::io::WavEncoding;
use arinpaint_core::{
    EstimationScope, Estimator, GapPlacement, InpaintConfig, JanssenConfig, WindowShape, WorkUnit,
};

#[derive(Parser)]
#[command(name = "arinpaint", version, about = "Autoregressive audio inpainting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cut pseudorandom gaps into a WAV file and write the mask
    Degrade(DegradeArgs),
    /// Fill the gaps listed in a mask file
    Inpaint(InpaintArgs),
    /// Gap-restricted SDR of a reconstruction
    Evaluate(EvaluateArgs),
    /// Degrade, inpaint and evaluate a corpus over a parameter grid
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    Pcm16,
    Float32,
}

impl From<EncodingArg> for WavEncoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::Pcm16 => WavEncoding::Pcm16,
            EncodingArg::Float32 => WavEncoding::Float32,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Extrapolation,
    Gapwise,
    Framewise,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Lpc,
    Burg,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Lpc => Estimator::Lpc,
            EstimatorArg::Burg => Estimator::Burg,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WindowArg {
    Hann,
    Rect,
}

impl From<WindowArg> for WindowShape {
    fn from(w: WindowArg) -> Self {
        match w {
            WindowArg::Hann => WindowShape::Hann,
            WindowArg::Rect => WindowShape::Rectangular,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    /// Whole segment including the current gap estimate
    Full,
    /// Reliable context samples only
    Context,
}

#[derive(Args)]
struct DegradeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "gap-ms")]
    gap_ms: f64,
    #[arg(long, default_value_t = GapPlacement::DEFAULT_COUNT)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Minimum reliable samples between gaps
    #[arg(long, default_value_t = GapPlacement::DEFAULT_MIN_SEPARATION)]
    min_separation: usize,
    /// Reliable samples kept at both ends
    #[arg(long, default_value_t = GapPlacement::DEFAULT_BORDER)]
    border: usize,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long, value_enum, default_value = "float32")]
    encoding: EncodingArg,
    /// Average multi-channel input to mono
    #[arg(long)]
    downmix: bool,
}

#[derive(Args)]
struct InpaintArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "gapwise")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "burg")]
    estimator: EstimatorArg,
    /// Model order [default: 2048 extrapolation/gapwise, 1024 framewise Hann, 512 framewise rect]
    #[arg(long)]
    order: Option<usize>,
    /// Context samples per side (extrapolation, gapwise)
    #[arg(long, default_value_t = InpaintConfig::DEFAULT_CONTEXT)]
    context: usize,
    /// Frame length (framewise)
    #[arg(long, default_value_t = InpaintConfig::DEFAULT_FRAME)]
    frame: usize,
    /// Frame hop (framewise) [default: frame/2]
    #[arg(long)]
    hop: Option<usize>,
    /// Analysis window (framewise only) [default: hann]
    #[arg(long, value_enum)]
    window: Option<WindowArg>,
    #[arg(long, default_value_t = JanssenConfig::DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
    #[arg(long, default_value_t = JanssenConfig::DEFAULT_REL_TOLERANCE)]
    tolerance: f64,
    /// Samples used for coefficient estimation inside Janssen iterations
    #[arg(long, value_enum, default_value = "full")]
    scope: ScopeArg,
    #[arg(long, value_enum, default_value = "float32")]
    encoding: EncodingArg,
    #[arg(long)]
    downmix: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    estimate: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    /// CSV destination; standard output if omitted
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    downmix: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Directory of mono WAV files
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "extrapolation,gapwise,framewise-hann,framewise-rect")]
    methods: Vec<MethodSpec>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "burg,lpc")]
    estimators: Vec<EstimatorArg>,
    /// Model orders, e.g. 256,512,1024,2048,3072 [default: best order per method]
    #[arg(long, value_delimiter = ',')]
    orders: Vec<usize>,
    #[arg(long = "gap-ms", value_delimiter = ',', default_value = "10,20,30,40,50,60,70,80")]
    gap_ms: Vec<f64>,
    #[arg(long, default_value_t = InpaintConfig::DEFAULT_CONTEXT)]
    context: usize,
    #[arg(long, default_value_t = InpaintConfig::DEFAULT_FRAME)]
    frame: usize,
    #[arg(long, default_value_t = GapPlacement::DEFAULT_COUNT)]
    count: usize,
    #[arg(long, default_value_t = GapPlacement::DEFAULT_MIN_SEPARATION)]
    min_separation: usize,
    #[arg(long, default_value_t = GapPlacement::DEFAULT_BORDER)]
    border: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0: all cores)
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Record wall time per cell in elapsed_s (makes the CSV run-dependent)
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    downmix: bool,
}

fn run_inpaint(args: InpaintArgs) -> Result<()> {
    let framewise = matches!(args.method, MethodArg::Framewise);
    if !framewise && (args.window.is_some() || args.hop.is_some()) {
        Cli::command()
            .error(
                ErrorKind::ArgumentConflict,
                "--window and --hop only apply to --method framewise",
            )
            .exit();
    }
    let window: WindowShape = args.window.map_or(WindowShape::Hann, Into::into);
    let spec = match args.method {
        MethodArg::Extrapolation => MethodSpec::Extrapolation,
        MethodArg::Gapwise => MethodSpec::GapWise,
        MethodArg::Framewise => MethodSpec::FrameWise(window),
    };
    let order = args.order.unwrap_or(spec.default_order());
    let mut cfg = spec.config(args.estimator.into(), order, args.context, args.frame);
    cfg.hop = args.hop;
    cfg.janssen.max_iterations = args.max_iterations;
    cfg.janssen.rel_tolerance = args.tolerance;
    cfg.janssen.scope = match args.scope {
        ScopeArg::Full => EstimationScope::FullSegment,
        ScopeArg::Context => EstimationScope::ReliableOnly,
    };

    let out = inpaint_file(&args.input, &args.mask, &cfg, &args.output, args.encoding.into(), args.downmix)?;
    let mut total = 0.0;
    for (unit, secs) in &out.timings {
        match unit {
            WorkUnit::Gap(g) => println!("gap {g}: {secs:.3} s"),
            WorkUnit::Frame(k, start) => println!("frame {k} (start {start}): {secs:.3} s"),
        }
        total += secs;
    }
    println!("total: {total:.3} s");
    Ok(())
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let eval = evaluate_files(&args.reference, &args.estimate, &args.mask, args.downmix)?;
    match &args.output {
        Some(path) => {
            let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            eval.write_csv(io::BufWriter::new(file))
        }
        None => eval.write_csv(io::stdout().lock()),
    }
}

fn run_sweep_cmd(args: SweepArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus, args.downmix)?;
    let mut spec = SweepSpec::new(&args.output);
    spec.methods = args.methods;
    spec.estimators = args.estimators.into_iter().map(Into::into).collect();
    spec.orders = args.orders;
    spec.gap_lengths_ms = args.gap_ms;
    spec.context_length = args.context;
    spec.frame_length = args.frame;
    spec.gaps_per_signal = args.count;
    spec.min_separation = args.min_separation;
    spec.border = args.border;
    spec.seed = args.seed;
    spec.threads = args.threads;
    spec.timing = args.timing;

    let report = |r: &CellReport| {
        let mut err = io::stderr().lock();
        let _ = match &r.error {
            None => writeln!(
                err,
                "[{}/{}] {} {} {} p={} {} ms: {:.2} dB",
                r.done, r.total, r.signal_id, r.method, r.estimator, r.order, r.gap_length_ms, r.mean_sdr_db
            ),
            Some(e) => writeln!(
                err,
                "[{}/{}] {} {} {} p={} {} ms: FAILED: {e}",
                r.done, r.total, r.signal_id, r.method, r.estimator, r.order, r.gap_length_ms
            ),
        };
    };
    let summary = run_sweep(&corpus, &spec, &report)?;
    eprintln!(
        "{} cells ({} resumed, {} with failures), {} rows written to {}",
        summary.cells,
        summary.resumed,
        summary.failed,
        summary.rows,
        args.output.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Degrade(a) => {
            let placement = GapPlacement {
                gap_length_ms: a.gap_ms,
                count: a.count,
                min_separation: a.min_separation,
                border: a.border,
                seed: a.seed,
            };
            degrade(&a.input, &placement, &a.output, &a.mask, a.encoding.into(), a.downmix).map(|mask| {
                eprintln!("{} gaps, {} missing samples", mask.gaps().len(), mask.missing_count());
            })
        }
        Command::Inpaint(a) => run_inpaint(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Sweep(a) => run_sweep_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
