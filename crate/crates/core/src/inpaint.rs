//! Gap inpainting strategies built on the AR primitives.
//!
//! * extrapolation: separate models fitted to the left and right contexts,
//!   forward/backward predictions blended with a raised-cosine crossfade;
//! * frame-wise Janssen: windowed overlapping frames, Janssen on frames that
//!   contain missing samples, normalized overlap-add;
//! * gap-wise Janssen: one segment per gap made of both contexts and the gap,
//!   sharing a single model.
//!
//! Every method finishes with the reliable samples copied from the input.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::estimation::Estimator;
use crate::janssen::{janssen_iterate, JanssenConfig};
use crate::prediction::{extrapolate_backward, extrapolate_forward};
use crate::signal::{project_consistent, GapMask, Segment, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Extrapolation,
    JanssenGapWise,
    JanssenFrameWise,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Extrapolation => "extrapolation",
            Method::JanssenGapWise => "gapwise",
            Method::JanssenFrameWise => "framewise",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "extrapolation" => Ok(Method::Extrapolation),
            "gapwise" => Ok(Method::JanssenGapWise),
            "framewise" => Ok(Method::JanssenFrameWise),
            other => Err(Error::Config(format!(
                "unknown method `{other}` (expected extrapolation, gapwise or framewise)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WindowShape {
    Rectangular,
    Hann,
}

impl WindowShape {
    pub fn name(self) -> &'static str {
        match self {
            WindowShape::Rectangular => "rect",
            WindowShape::Hann => "hann",
        }
    }

    /// Window values; Hann is the periodic form `0.5 (1 - cos(2 pi n / L))`.
    pub fn values(self, len: usize) -> Vec<f64> {
        match self {
            WindowShape::Rectangular => vec![1.0; len],
            WindowShape::Hann => (0..len)
                .map(|n| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos()))
                .collect(),
        }
    }
}

impl fmt::Display for WindowShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WindowShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rect" | "rectangular" => Ok(WindowShape::Rectangular),
            "hann" => Ok(WindowShape::Hann),
            other => Err(Error::Config(format!("unknown window `{other}` (expected rect or hann)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InpaintConfig {
    pub method: Method,
    /// Reliable samples used on each side of a gap (extrapolation, gap-wise).
    pub context_length: usize,
    pub frame_length: usize,
    /// Frame stride; `None` means half the frame length.
    pub hop: Option<usize>,
    pub window: WindowShape,
    /// Order, estimator and iteration control. Extrapolation only uses the
    /// order and estimator.
    pub janssen: JanssenConfig,
}

impl InpaintConfig {
    pub const DEFAULT_CONTEXT: usize = 4096;
    pub const DEFAULT_FRAME: usize = 4096;

    pub fn new(method: Method, estimator: Estimator, order: usize) -> Self {
        Self {
            method,
            context_length: Self::DEFAULT_CONTEXT,
            frame_length: Self::DEFAULT_FRAME,
            hop: None,
            window: WindowShape::Hann,
            janssen: JanssenConfig::new(order, estimator),
        }
    }

    pub fn with_window(mut self, window: WindowShape) -> Self {
        self.window = window;
        self
    }

    pub fn with_context(mut self, context_length: usize) -> Self {
        self.context_length = context_length;
        self
    }

    pub fn order(&self) -> usize {
        self.janssen.order
    }

    pub fn estimator(&self) -> Estimator {
        self.janssen.estimator
    }

    pub fn hop(&self) -> usize {
        self.hop.unwrap_or(self.frame_length / 2)
    }

    pub fn validate(&self) -> Result<()> {
        self.janssen.validate()?;
        let p = self.order();
        if p == 0 {
            return Err(Error::Config("model order must be at least 1".into()));
        }
        match self.method {
            Method::Extrapolation | Method::JanssenGapWise => {
                if self.context_length < p + 1 {
                    return Err(Error::Config(format!(
                        "context length {} must be at least order + 1 = {}",
                        self.context_length,
                        p + 1
                    )));
                }
            }
            Method::JanssenFrameWise => {
                if self.frame_length < p + 1 {
                    return Err(Error::Config(format!(
                        "frame length {} must be at least order + 1 = {}",
                        self.frame_length,
                        p + 1
                    )));
                }
                let hop = self.hop();
                if hop == 0 || hop > self.frame_length {
                    return Err(Error::Config(format!(
                        "hop {hop} must lie in 1..={}",
                        self.frame_length
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Unit of work a timing refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkUnit {
    Gap(usize),
    /// Frame index and its first sample in signal coordinates (may be negative
    /// for frames reaching into the leading padding).
    Frame(usize, isize),
}

#[derive(Debug, Clone)]
pub struct InpaintOutput {
    pub signal: Signal,
    /// Wall time per processed gap or frame, in seconds.
    pub timings: Vec<(WorkUnit, f64)>,
}

/// Raised-cosine fade-out `0.5 (1 + cos(pi n / (L - 1)))`, from exactly 1
/// down to exactly 0; `[0.5]` for a single sample.
pub fn crossfade_weights(len: usize) -> Vec<f64> {
    match len {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => {
            let mut w = vec![0.0; len];
            let denom = (len - 1) as f64;
            for n in 0..len / 2 {
                let v = 0.5 * (1.0 + (std::f64::consts::PI * n as f64 / denom).cos());
                w[n] = v;
                w[len - 1 - n] = 1.0 - v;
            }
            if len % 2 == 1 {
                w[len / 2] = 0.5;
            }
            w
        }
    }
}

/// Runs the method selected in `cfg`.
pub fn inpaint(signal: &Signal, mask: &GapMask, cfg: &InpaintConfig) -> Result<InpaintOutput> {
    match cfg.method {
        Method::Extrapolation => inpaint_extrapolation(signal, mask, cfg),
        Method::JanssenGapWise => inpaint_janssen_gapwise(signal, mask, cfg),
        Method::JanssenFrameWise => inpaint_janssen_framewise(signal, mask, cfg),
    }
}

fn check_inputs(signal: &Signal, mask: &GapMask, cfg: &InpaintConfig) -> Result<()> {
    cfg.validate()?;
    if mask.signal_length() != signal.len() {
        return Err(Error::Shape(format!(
            "mask is for {} samples, signal has {}",
            mask.signal_length(),
            signal.len()
        )));
    }
    Ok(())
}

pub fn inpaint_extrapolation(signal: &Signal, mask: &GapMask, cfg: &InpaintConfig) -> Result<InpaintOutput> {
    check_inputs(signal, mask, cfg)?;
    let p = cfg.order();
    let x = signal.samples();
    let mut out = x.to_vec();
    let mut timings = Vec::with_capacity(mask.gaps().len());

    for (g, gap) in mask.gaps().iter().enumerate() {
        let started = Instant::now();
        let left = &x[mask.left_context(g, cfg.context_length)];
        let right = &x[mask.right_context(g, cfg.context_length)];
        let available = left.len().min(right.len());
        if available < p + 1 {
            return Err(Error::InsufficientContext {
                gap: g,
                needed: p + 1,
                got: available,
            });
        }
        let forward = extrapolate_forward(&cfg.estimator().estimate(left, p)?, left, gap.length)?;
        let backward = extrapolate_backward(&cfg.estimator().estimate(right, p)?, right, gap.length)?;
        let fade = crossfade_weights(gap.length);
        for (k, slot) in out[gap.range()].iter_mut().enumerate() {
            *slot = fade[k] * forward[k] + (1.0 - fade[k]) * backward[k];
        }
        timings.push((WorkUnit::Gap(g), started.elapsed().as_secs_f64()));
    }

    let candidate = Signal::new(out, signal.sample_rate())?;
    Ok(InpaintOutput {
        signal: project_consistent(signal, mask, &candidate)?,
        timings,
    })
}

pub fn inpaint_janssen_gapwise(signal: &Signal, mask: &GapMask, cfg: &InpaintConfig) -> Result<InpaintOutput> {
    check_inputs(signal, mask, cfg)?;
    let p = cfg.order();
    let x = signal.samples();
    let mut out = x.to_vec();
    let mut timings = Vec::with_capacity(mask.gaps().len());

    for (g, gap) in mask.gaps().iter().enumerate() {
        let started = Instant::now();
        let left = mask.left_context(g, cfg.context_length);
        let right = mask.right_context(g, cfg.context_length);
        let span = left.start..right.end;
        let context = left.len() + right.len();
        if span.len() < p + 1 || context == 0 {
            return Err(Error::InsufficientContext {
                gap: g,
                needed: p + 1,
                got: context,
            });
        }
        let local_missing = (gap.start - span.start..gap.end() - span.start).collect();
        let segment = Segment::new(x[span.clone()].to_vec(), span.start, local_missing)?;
        let filled = janssen_iterate(&segment, &cfg.janssen)?;
        out[gap.range()].copy_from_slice(&filled.samples[gap.start - span.start..gap.end() - span.start]);
        timings.push((WorkUnit::Gap(g), started.elapsed().as_secs_f64()));
    }

    let candidate = Signal::new(out, signal.sample_rate())?;
    Ok(InpaintOutput {
        signal: project_consistent(signal, mask, &candidate)?,
        timings,
    })
}

pub fn inpaint_janssen_framewise(signal: &Signal, mask: &GapMask, cfg: &InpaintConfig) -> Result<InpaintOutput> {
    check_inputs(signal, mask, cfg)?;
    let mut timings = Vec::new();
    let out = overlap_add(signal, mask, cfg, &mut timings)?;
    let candidate = Signal::new(out, signal.sample_rate())?;
    Ok(InpaintOutput {
        signal: project_consistent(signal, mask, &candidate)?,
        timings,
    })
}

/// Windowed frames, Janssen on frames with missing samples, overlap-add
/// normalized by the accumulated window.
fn overlap_add(
    signal: &Signal,
    mask: &GapMask,
    cfg: &InpaintConfig,
    timings: &mut Vec<(WorkUnit, f64)>,
) -> Result<Vec<f64>> {
    let n = signal.len();
    let frame = cfg.frame_length;
    let hop = cfg.hop();
    let pad = frame - hop;
    let frames = (pad + n - 1) / hop + 1;
    let total = (frames - 1) * hop + frame;

    let mut padded = vec![0.0; total];
    padded[pad..pad + n].copy_from_slice(signal.samples());
    let mut missing = vec![false; total];
    missing[pad..pad + n].copy_from_slice(&mask.missing_flags());
    let window = cfg.window.values(frame);

    let mut acc = vec![0.0; total];
    let mut wsum = vec![0.0; total];

    for k in 0..frames {
        let start = k * hop;
        let windowed: Vec<f64> = padded[start..start + frame]
            .iter()
            .zip(&window)
            .map(|(x, w)| x * w)
            .collect();
        let local_missing: Vec<usize> = (0..frame).filter(|&i| missing[start + i]).collect();
        let processed = if local_missing.is_empty() {
            windowed
        } else {
            let started = Instant::now();
            let segment = Segment::new(windowed, start, local_missing)?;
            let filled = janssen_iterate(&segment, &cfg.janssen)?;
            timings.push((
                WorkUnit::Frame(k, start as isize - pad as isize),
                started.elapsed().as_secs_f64(),
            ));
            filled.samples
        };
        for i in 0..frame {
            acc[start + i] += processed[i];
            wsum[start + i] += window[i];
        }
    }

    Ok((pad..pad + n)
        .map(|t| if wsum[t] > 0.0 { acc[t] / wsum[t] } else { 0.0 })
        .collect())
}
