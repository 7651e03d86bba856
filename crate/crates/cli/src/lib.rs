//! Degradation, inpainting, evaluation and parameter sweeps over WAV
//! corpora. The `arinpaint` binary is a thin clap layer over these functions.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;

use arinpaint_core::io::{self, read_results, write_results, ResultsAppender, WavEncoding};
use arinpaint_core::{
    generate_gaps, inpaint, sdr, sdr_all_gaps, EvalRecord, Estimator, Gap, GapMask, GapPlacement,
    InpaintConfig, InpaintOutput, Method, Signal, SplitMix64, WindowShape,
};

/// Inpainting strategy as it appears in sweep specs and result rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodSpec {
    Extrapolation,
    GapWise,
    FrameWise(WindowShape),
}

impl MethodSpec {
    pub const ALL: [MethodSpec; 4] = [
        MethodSpec::Extrapolation,
        MethodSpec::GapWise,
        MethodSpec::FrameWise(WindowShape::Hann),
        MethodSpec::FrameWise(WindowShape::Rectangular),
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodSpec::Extrapolation => "extrapolation",
            MethodSpec::GapWise => "gapwise",
            MethodSpec::FrameWise(WindowShape::Hann) => "framewise-hann",
            MethodSpec::FrameWise(WindowShape::Rectangular) => "framewise-rect",
        }
    }

    /// Best-performing order at context/frame length 4096.
    pub fn default_order(self) -> usize {
        match self {
            MethodSpec::Extrapolation | MethodSpec::GapWise => 2048,
            MethodSpec::FrameWise(WindowShape::Hann) => 1024,
            MethodSpec::FrameWise(WindowShape::Rectangular) => 512,
        }
    }

    pub fn config(self, estimator: Estimator, order: usize, context: usize, frame: usize) -> InpaintConfig {
        let method = match self {
            MethodSpec::Extrapolation => Method::Extrapolation,
            MethodSpec::GapWise => Method::JanssenGapWise,
            MethodSpec::FrameWise(_) => Method::JanssenFrameWise,
        };
        let mut cfg = InpaintConfig::new(method, estimator, order).with_context(context);
        cfg.frame_length = frame;
        if let MethodSpec::FrameWise(window) = self {
            cfg.window = window;
        }
        cfg
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match MethodSpec::ALL.iter().find(|m| m.name() == s) {
            Some(m) => Ok(*m),
            None => bail!("unknown method `{s}` (expected extrapolation, gapwise, framewise-hann or framewise-rect)"),
        }
    }
}

/// Writes a degraded copy of `input` (gaps set to zero) and its mask.
pub fn degrade(
    input: &Path,
    placement: &GapPlacement,
    output: &Path,
    mask_path: &Path,
    encoding: WavEncoding,
    downmix: bool,
) -> Result<GapMask> {
    let signal = io::read_wav(input, downmix).with_context(|| format!("reading {}", input.display()))?;
    let mask = generate_gaps(signal.len(), signal.sample_rate(), placement)?;
    io::write_mask(&mask, signal.sample_rate(), mask_path)
        .with_context(|| format!("writing {}", mask_path.display()))?;
    io::write_wav(&signal.zero_gaps(&mask)?, output, encoding)
        .with_context(|| format!("writing {}", output.display()))?;
    Ok(mask)
}

fn read_checked_mask(path: &Path, signal: &Signal) -> Result<GapMask> {
    let file = io::read_mask(path).with_context(|| format!("reading {}", path.display()))?;
    ensure!(
        file.mask.signal_length() == signal.len(),
        "mask {} is for {} samples, signal has {}",
        path.display(),
        file.mask.signal_length(),
        signal.len()
    );
    Ok(file.mask)
}

pub fn inpaint_file(
    input: &Path,
    mask_path: &Path,
    cfg: &InpaintConfig,
    output: &Path,
    encoding: WavEncoding,
    downmix: bool,
) -> Result<InpaintOutput> {
    let signal = io::read_wav(input, downmix).with_context(|| format!("reading {}", input.display()))?;
    let mask = read_checked_mask(mask_path, &signal)?;
    let out = inpaint(&signal, &mask, cfg)?;
    io::write_wav(&out.signal, output, encoding).with_context(|| format!("writing {}", output.display()))?;
    Ok(out)
}

/// Gap-restricted SDR of one reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub gaps: Vec<(Gap, f64)>,
    pub all_gaps: f64,
}

impl Evaluation {
    /// CSV with columns `gap_index,start,length,sdr_db`; the last row has
    /// index `all` and covers the concatenation of all gaps.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "gap_index,start,length,sdr_db")?;
        let mut total = 0;
        for (i, (gap, value)) in self.gaps.iter().enumerate() {
            writeln!(out, "{i},{},{},{}", gap.start, gap.length, io::format_float(*value))?;
            total += gap.length;
        }
        writeln!(out, "all,,{total},{}", io::format_float(self.all_gaps))?;
        Ok(())
    }
}

pub fn evaluate(reference: &Signal, estimate: &Signal, mask: &GapMask) -> Result<Evaluation> {
    let per = arinpaint_core::sdr_per_gap(reference, estimate, mask)?;
    Ok(Evaluation {
        gaps: mask.gaps().iter().copied().zip(per).collect(),
        all_gaps: sdr_all_gaps(reference, estimate, mask)?,
    })
}

pub fn evaluate_files(reference: &Path, estimate: &Path, mask_path: &Path, downmix: bool) -> Result<Evaluation> {
    let y = io::read_wav(reference, downmix).with_context(|| format!("reading {}", reference.display()))?;
    let x = io::read_wav(estimate, downmix).with_context(|| format!("reading {}", estimate.display()))?;
    let mask = read_checked_mask(mask_path, &y)?;
    evaluate(&y, &x, &mask)
}

/// One corpus signal with its identifier in the results table.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub id: String,
    pub signal: Signal,
}

/// Every `*.wav` in `dir`, sorted by file name; ids are file stems.
pub fn load_corpus(dir: &Path, downmix: bool) -> Result<Vec<CorpusEntry>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading corpus directory {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")));
    paths.sort();
    ensure!(!paths.is_empty(), "no .wav files in {}", dir.display());
    paths
        .into_iter()
        .map(|p| {
            let id = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let signal = io::read_wav(&p, downmix).with_context(|| format!("reading {}", p.display()))?;
            Ok(CorpusEntry { id, signal })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub methods: Vec<MethodSpec>,
    pub estimators: Vec<Estimator>,
    /// Model orders; empty means each method's default order.
    pub orders: Vec<usize>,
    pub gap_lengths_ms: Vec<f64>,
    pub context_length: usize,
    pub frame_length: usize,
    pub gaps_per_signal: usize,
    pub min_separation: usize,
    pub border: usize,
    pub seed: u64,
    pub output: PathBuf,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    /// Record wall time per cell. Off by default so reruns are byte-identical.
    pub timing: bool,
}

impl SweepSpec {
    pub fn new(output: impl Into<PathBuf>) -> Self {
        Self {
            methods: MethodSpec::ALL.to_vec(),
            estimators: vec![Estimator::Burg, Estimator::Lpc],
            orders: Vec::new(),
            gap_lengths_ms: (1..=8).map(|k| f64::from(k) * 10.0).collect(),
            context_length: InpaintConfig::DEFAULT_CONTEXT,
            frame_length: InpaintConfig::DEFAULT_FRAME,
            gaps_per_signal: GapPlacement::DEFAULT_COUNT,
            min_separation: GapPlacement::DEFAULT_MIN_SEPARATION,
            border: GapPlacement::DEFAULT_BORDER,
            seed: 0,
            output: output.into(),
            threads: 0,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.methods.is_empty(), "no methods given");
        ensure!(!self.estimators.is_empty(), "no estimators given");
        ensure!(!self.gap_lengths_ms.is_empty(), "no gap lengths given");
        ensure!(
            self.gap_lengths_ms.iter().all(|g| g.is_finite() && *g > 0.0),
            "gap lengths must be positive"
        );
        for &m in &self.methods {
            let limit = match m {
                MethodSpec::FrameWise(_) => self.frame_length,
                _ => self.context_length,
            };
            for order in self.orders_for(m) {
                ensure!(order >= 1, "model order must be at least 1");
                ensure!(order < limit, "order {order} is not below the {m} context/frame length {limit}");
            }
        }
        Ok(())
    }

    fn orders_for(&self, method: MethodSpec) -> Vec<usize> {
        if self.orders.is_empty() {
            vec![method.default_order()]
        } else {
            self.orders.clone()
        }
    }

    /// Path of the append-only file holding finished cells.
    pub fn partial_path(&self) -> PathBuf {
        let mut name = self.output.file_name().unwrap_or_default().to_os_string();
        name.push(".partial.csv");
        self.output.with_file_name(name)
    }
}

/// Seed for the mask of one (signal, gap length) pair; the same mask is
/// shared by every method, estimator and order.
pub fn derive_cell_seed(base: u64, signal_id: &str, gap_length_ms: f64) -> u64 {
    // FNV-1a over the id and the gap length bits, mixed with the base seed
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in signal_id.bytes().chain(gap_length_ms.to_bits().to_le_bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    SplitMix64::new(base ^ h).next_u64()
}

#[derive(Debug, Clone, PartialEq)]
struct Cell {
    signal: usize,
    gap_length_ms: f64,
    method: MethodSpec,
    estimator: Estimator,
    order: usize,
}

impl Cell {
    fn key(&self, corpus: &[CorpusEntry]) -> CellKey {
        CellKey {
            signal_id: corpus[self.signal].id.clone(),
            method: self.method.name().to_string(),
            estimator: self.estimator.name().to_string(),
            order: self.order,
            gap_bits: self.gap_length_ms.to_bits(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CellKey {
    signal_id: String,
    method: String,
    estimator: String,
    order: usize,
    gap_bits: u64,
}

impl From<&EvalRecord> for CellKey {
    fn from(r: &EvalRecord) -> Self {
        CellKey {
            signal_id: r.signal_id.clone(),
            method: r.method.clone(),
            estimator: r.estimator.clone(),
            order: r.order,
            gap_bits: r.gap_length_ms.to_bits(),
        }
    }
}

/// Progress notification for one finished cell.
#[derive(Debug, Clone)]
pub struct CellReport {
    pub done: usize,
    pub total: usize,
    pub signal_id: String,
    pub method: MethodSpec,
    pub estimator: Estimator,
    pub order: usize,
    pub gap_length_ms: f64,
    pub mean_sdr_db: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSummary {
    pub cells: usize,
    /// Cells found in the partial file of an interrupted run.
    pub resumed: usize,
    pub failed: usize,
    pub rows: usize,
}

/// Runs every cell of `spec` over `corpus` and writes the sorted results to
/// `spec.output`. Finished cells go to [`SweepSpec::partial_path`] first, so
/// an interrupted sweep resumes where it stopped.
pub fn run_sweep(corpus: &[CorpusEntry], spec: &SweepSpec, progress: &(dyn Fn(&CellReport) + Sync)) -> Result<SweepSummary> {
    spec.validate()?;
    let ids: HashSet<&str> = corpus.iter().map(|c| c.id.as_str()).collect();
    ensure!(ids.len() == corpus.len(), "corpus signal ids must be unique");

    let mut cells = Vec::new();
    for signal in 0..corpus.len() {
        for &gap_length_ms in &spec.gap_lengths_ms {
            for &method in &spec.methods {
                for &estimator in &spec.estimators {
                    for order in spec.orders_for(method) {
                        cells.push(Cell {
                            signal,
                            gap_length_ms,
                            method,
                            estimator,
                            order,
                        });
                    }
                }
            }
        }
    }
    let total = cells.len();

    let partial = spec.partial_path();
    let finished: HashSet<CellKey> = if partial.exists() {
        read_results(&partial)
            .with_context(|| format!("reading partial results {}", partial.display()))?
            .iter()
            .map(CellKey::from)
            .collect()
    } else {
        HashSet::new()
    };
    let pending: Vec<&Cell> = cells.iter().filter(|c| !finished.contains(&c.key(corpus))).collect();
    let resumed = total - pending.len();

    let appender = Mutex::new(
        ResultsAppender::open(&partial).with_context(|| format!("opening {}", partial.display()))?,
    );
    let counter = Mutex::new(resumed);
    let work = |cell: &&Cell| -> Result<()> {
        let (records, error) = run_cell(corpus, spec, cell);
        appender
            .lock()
            .expect("results writer poisoned")
            .append(&records)
            .with_context(|| format!("appending to {}", partial.display()))?;
        let done = {
            let mut c = counter.lock().expect("progress counter poisoned");
            *c += 1;
            *c
        };
        let finite: Vec<f64> = records.iter().map(|r| r.sdr_db).filter(|v| v.is_finite()).collect();
        progress(&CellReport {
            done,
            total,
            signal_id: corpus[cell.signal].id.clone(),
            method: cell.method,
            estimator: cell.estimator,
            order: cell.order,
            gap_length_ms: cell.gap_length_ms,
            mean_sdr_db: if finite.is_empty() {
                f64::NAN
            } else {
                finite.iter().sum::<f64>() / finite.len() as f64
            },
            error,
        });
        Ok(())
    };

    let pool = rayon::ThreadPoolBuilder::new().num_threads(spec.threads).build()?;
    pool.install(|| pending.par_iter().try_for_each(work))?;
    drop(appender);

    let records = read_results(&partial)?;
    let failed_cells: HashSet<CellKey> = records.iter().filter(|r| r.is_failure()).map(CellKey::from).collect();
    write_results(&records, &spec.output).with_context(|| format!("writing {}", spec.output.display()))?;
    fs::remove_file(&partial).with_context(|| format!("removing {}", partial.display()))?;
    Ok(SweepSummary {
        cells: total,
        resumed,
        failed: failed_cells.len(),
        rows: records.len(),
    })
}

/// Degrade, inpaint and evaluate one cell. Failures become rows with a NaN
/// SDR, one per gap, and the error message.
fn run_cell(corpus: &[CorpusEntry], spec: &SweepSpec, cell: &Cell) -> (Vec<EvalRecord>, Option<String>) {
    let entry = &corpus[cell.signal];
    let started = Instant::now();
    let record = |gap_index: usize, sdr_db: f64, elapsed_s: f64| EvalRecord {
        signal_id: entry.id.clone(),
        method: cell.method.name().to_string(),
        estimator: cell.estimator.name().to_string(),
        order: cell.order,
        gap_length_ms: cell.gap_length_ms,
        gap_index,
        sdr_db,
        elapsed_s,
    };
    let placement = GapPlacement {
        gap_length_ms: cell.gap_length_ms,
        count: spec.gaps_per_signal,
        min_separation: spec.min_separation,
        border: spec.border,
        seed: derive_cell_seed(spec.seed, &entry.id, cell.gap_length_ms),
    };
    let outcome = generate_gaps(entry.signal.len(), entry.signal.sample_rate(), &placement).and_then(|mask| {
        let degraded = entry.signal.zero_gaps(&mask)?;
        let cfg = cell.method.config(cell.estimator, cell.order, spec.context_length, spec.frame_length);
        let out = inpaint(&degraded, &mask, &cfg)?;
        Ok((mask, out.signal))
    });
    let elapsed = if spec.timing { started.elapsed().as_secs_f64() } else { 0.0 };
    match outcome {
        Ok((mask, estimate)) => {
            let rows = mask
                .gaps()
                .iter()
                .enumerate()
                .map(|(g, gap)| {
                    // a silent reference gap has no defined SDR
                    let value = sdr(&entry.signal.samples()[gap.range()], &estimate.samples()[gap.range()])
                        .unwrap_or(f64::NAN);
                    record(g, value, elapsed)
                })
                .collect();
            (rows, None)
        }
        Err(e) => (
            (0..spec.gaps_per_signal).map(|g| record(g, f64::NAN, elapsed)).collect(),
            Some(e.to_string()),
        ),
    }
}
