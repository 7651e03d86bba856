//! Signals, gap masks, segments and seeded gap placement.
//!
//! All indices are 0-based. A [`GapMask`] stores the missing set as a sorted
//! list of disjoint, non-adjacent [`Gap`]s; the reliable set is its
//! complement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A mono, finite-valued sampled waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidSignal("signal must contain at least one sample".into()));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidSignal("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidSignal(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Copy of the signal with every missing sample replaced by zero.
    pub fn zero_gaps(&self, mask: &GapMask) -> Result<Signal> {
        check_mask_len(self, mask)?;
        let mut samples = self.samples.clone();
        for gap in mask.gaps() {
            samples[gap.range()].fill(0.0);
        }
        Ok(Signal {
            samples,
            sample_rate: self.sample_rate,
        })
    }
}

/// A run of consecutive missing samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Gap {
    pub start: usize,
    pub length: usize,
}

impl Gap {
    pub fn new(start: usize, length: usize) -> Self {
        Self { start, length }
    }

    /// One past the last missing index.
    pub fn end(&self) -> usize {
        self.start + self.length
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end()
    }
}

/// Missing-sample set of a signal, stored as sorted disjoint gaps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapMask {
    gaps: Vec<Gap>,
    signal_length: usize,
}

impl GapMask {
    /// Validates and builds a mask. Gaps must be sorted, non-empty, inside
    /// the signal and separated by at least one reliable sample.
    pub fn new(gaps: Vec<Gap>, signal_length: usize) -> Result<Self> {
        for (i, gap) in gaps.iter().enumerate() {
            if gap.length == 0 {
                return Err(Error::InvalidMask(format!("gap {i} (start {}) has zero length", gap.start)));
            }
            if gap.end() > signal_length {
                return Err(Error::InvalidMask(format!(
                    "gap {i} [{}, {}) exceeds signal length {signal_length}",
                    gap.start,
                    gap.end()
                )));
            }
            if i > 0 {
                let prev = gaps[i - 1];
                if gap.start < prev.start {
                    return Err(Error::InvalidMask(format!(
                        "gap {i} (start {}) is not sorted after gap {} (start {})",
                        gap.start,
                        i - 1,
                        prev.start
                    )));
                }
                if gap.start <= prev.end() {
                    return Err(Error::InvalidMask(format!(
                        "gap {i} [{}, {}) overlaps or touches gap {} [{}, {})",
                        gap.start,
                        gap.end(),
                        i - 1,
                        prev.start,
                        prev.end()
                    )));
                }
            }
        }
        Ok(Self {
            gaps,
            signal_length,
        })
    }

    /// A mask with no missing samples.
    pub fn empty(signal_length: usize) -> Self {
        Self {
            gaps: Vec::new(),
            signal_length,
        }
    }

    pub fn gaps(&self) -> &[Gap] {
        &self.gaps
    }

    pub fn signal_length(&self) -> usize {
        self.signal_length
    }

    pub fn missing_count(&self) -> usize {
        self.gaps.iter().map(|g| g.length).sum()
    }

    pub fn is_missing(&self, index: usize) -> bool {
        // gaps are sorted, so the candidate is the last gap starting at or before index
        let pos = self.gaps.partition_point(|g| g.start <= index);
        pos > 0 && index < self.gaps[pos - 1].end()
    }

    /// Per-sample flags, `true` where the sample is missing.
    pub fn missing_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.signal_length];
        for gap in &self.gaps {
            flags[gap.range()].fill(true);
        }
        flags
    }

    /// Reliable samples available immediately left of gap `index`, at most
    /// `max_len`, stopping at the signal start or the previous gap.
    pub fn left_context(&self, index: usize, max_len: usize) -> std::ops::Range<usize> {
        let gap = self.gaps[index];
        let floor = if index == 0 { 0 } else { self.gaps[index - 1].end() };
        gap.start.saturating_sub(max_len).max(floor)..gap.start
    }

    /// Reliable samples available immediately right of gap `index`, at most
    /// `max_len`, stopping at the signal end or the next gap.
    pub fn right_context(&self, index: usize, max_len: usize) -> std::ops::Range<usize> {
        let gap = self.gaps[index];
        let ceil = self
            .gaps
            .get(index + 1)
            .map_or(self.signal_length, |g| g.start);
        gap.end()..(gap.end() + max_len).min(ceil)
    }
}

/// Contiguous working excerpt of a signal with its local missing indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub samples: Vec<f64>,
    pub offset: usize,
    /// Sorted local indices of missing samples.
    pub local_missing: Vec<usize>,
}

impl Segment {
    /// Builds a segment, checking that all missing indices are in bounds.
    pub fn new(samples: Vec<f64>, offset: usize, mut local_missing: Vec<usize>) -> Result<Self> {
        local_missing.sort_unstable();
        local_missing.dedup();
        if let Some(&last) = local_missing.last() {
            if last >= samples.len() {
                return Err(Error::Bounds {
                    start: last,
                    end: last + 1,
                    len: samples.len(),
                });
            }
        }
        Ok(Self {
            samples,
            offset,
            local_missing,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn reliable_count(&self) -> usize {
        self.samples.len() - self.local_missing.len()
    }

    pub fn missing_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.samples.len()];
        for &i in &self.local_missing {
            flags[i] = true;
        }
        flags
    }

    /// `Some((start, len))` when the missing indices form one contiguous run.
    pub fn contiguous_missing(&self) -> Option<(usize, usize)> {
        let first = *self.local_missing.first()?;
        let last = *self.local_missing.last()?;
        (last - first + 1 == self.local_missing.len()).then_some((first, self.local_missing.len()))
    }

    /// Maximal runs of reliable samples as local ranges.
    pub fn reliable_runs(&self) -> Vec<std::ops::Range<usize>> {
        let mut runs = Vec::new();
        let mut start = 0;
        for &m in &self.local_missing {
            if m > start {
                runs.push(start..m);
            }
            start = m + 1;
        }
        if start < self.samples.len() {
            runs.push(start..self.samples.len());
        }
        runs
    }
}

fn check_mask_len(signal: &Signal, mask: &GapMask) -> Result<()> {
    if mask.signal_length() != signal.len() {
        return Err(Error::Shape(format!(
            "mask is for {} samples, signal has {}",
            mask.signal_length(),
            signal.len()
        )));
    }
    Ok(())
}

/// Copies `[start, start + length)` out of `signal`, marking the samples the
/// mask declares missing. Missing samples keep whatever value the signal has.
pub fn extract_segment(signal: &Signal, mask: &GapMask, start: usize, length: usize) -> Result<Segment> {
    check_mask_len(signal, mask)?;
    let end = start
        .checked_add(length)
        .filter(|&e| e <= signal.len())
        .ok_or(Error::Bounds {
            start,
            end: start.saturating_add(length),
            len: signal.len(),
        })?;
    let local_missing = mask
        .gaps()
        .iter()
        .filter(|g| g.end() > start && g.start < end)
        .flat_map(|g| g.start.max(start)..g.end().min(end))
        .map(|i| i - start)
        .collect();
    Ok(Segment {
        samples: signal.samples()[start..end].to_vec(),
        offset: start,
        local_missing,
    })
}

/// Output equals `original` on the reliable set and `candidate` on the gaps.
pub fn project_consistent(original: &Signal, mask: &GapMask, candidate: &Signal) -> Result<Signal> {
    if original.len() != candidate.len() {
        return Err(Error::Shape(format!(
            "original has {} samples, candidate has {}",
            original.len(),
            candidate.len()
        )));
    }
    if original.sample_rate() != candidate.sample_rate() {
        return Err(Error::Shape(format!(
            "sample rates differ: {} vs {}",
            original.sample_rate(),
            candidate.sample_rate()
        )));
    }
    check_mask_len(original, mask)?;
    let mut samples = original.samples().to_vec();
    for gap in mask.gaps() {
        samples[gap.range()].copy_from_slice(&candidate.samples()[gap.range()]);
    }
    Ok(Signal {
        samples,
        sample_rate: original.sample_rate(),
    })
}

/// SplitMix64 generator (Steele, Lea & Flood), used for reproducible masks.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `0..bound` by rejection of the biased tail.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % bound;
            }
        }
    }
}

/// Parameters for [`generate_gaps`].
#[derive(Debug, Clone, PartialEq)]
pub struct GapPlacement {
    pub gap_length_ms: f64,
    pub count: usize,
    /// Minimum number of reliable samples between consecutive gaps.
    pub min_separation: usize,
    /// Reliable samples kept at each end of the signal.
    pub border: usize,
    pub seed: u64,
}

impl GapPlacement {
    pub const DEFAULT_COUNT: usize = 10;
    pub const DEFAULT_MIN_SEPARATION: usize = 8192;
    pub const DEFAULT_BORDER: usize = 4096;

    pub fn new(gap_length_ms: f64, seed: u64) -> Self {
        Self {
            gap_length_ms,
            count: Self::DEFAULT_COUNT,
            min_separation: Self::DEFAULT_MIN_SEPARATION,
            border: Self::DEFAULT_BORDER,
            seed,
        }
    }
}

/// Gap length in samples for a duration in milliseconds.
pub fn gap_length_samples(gap_length_ms: f64, sample_rate: u32) -> usize {
    (gap_length_ms * f64::from(sample_rate) / 1000.0).round() as usize
}

const PLACEMENT_ROUNDS: usize = 1000;
const PLACEMENT_TRIES_PER_GAP: usize = 1000;

/// Places `count` equal-length gaps at pseudorandom positions.
///
/// Gaps are drawn one at a time: a start is sampled uniformly from
/// `[border, n - border - len]` and rejected if it comes closer than
/// `min_separation` to an already placed gap. If a gap cannot be placed
/// within a fixed number of draws the whole round restarts; after a fixed
/// number of rounds placement fails.
pub fn generate_gaps(n: usize, sample_rate: u32, params: &GapPlacement) -> Result<GapMask> {
    if !(params.gap_length_ms.is_finite() && params.gap_length_ms > 0.0) {
        return Err(Error::Placement(format!(
            "gap length must be positive, got {} ms",
            params.gap_length_ms
        )));
    }
    let len = gap_length_samples(params.gap_length_ms, sample_rate);
    if len == 0 {
        return Err(Error::Placement(format!(
            "{} ms at {sample_rate} Hz rounds to zero samples",
            params.gap_length_ms
        )));
    }
    if params.count == 0 {
        return Ok(GapMask::empty(n));
    }
    let sep = params.min_separation.max(1);
    let usable = n.saturating_sub(2 * params.border);
    let required = params.count * len + (params.count - 1) * sep;
    if n < 2 * params.border || required > usable {
        return Err(Error::Placement(format!(
            "{} gaps of {len} samples with separation {sep} need {required} samples, \
             only {usable} available inside the borders",
            params.count
        )));
    }

    let lo = params.border;
    let span = (n - params.border - len - lo + 1) as u64;
    let mut rng = SplitMix64::new(params.seed);
    let conflicts = |placed: &[usize], s: usize| {
        placed
            .iter()
            .any(|&p| !(s + len + sep <= p || p + len + sep <= s))
    };

    for _ in 0..PLACEMENT_ROUNDS {
        let mut placed: Vec<usize> = Vec::with_capacity(params.count);
        'gap: for _ in 0..params.count {
            for _ in 0..PLACEMENT_TRIES_PER_GAP {
                let s = lo + rng.below(span) as usize;
                if !conflicts(&placed, s) {
                    placed.push(s);
                    continue 'gap;
                }
            }
            break;
        }
        if placed.len() == params.count {
            placed.sort_unstable();
            let gaps = placed.into_iter().map(|s| Gap::new(s, len)).collect();
            return GapMask::new(gaps, n);
        }
    }
    Err(Error::Placement(format!(
        "could not place {} gaps of {len} samples after {PLACEMENT_ROUNDS} rounds",
        params.count
    )))
}
