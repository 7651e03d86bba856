//! Signal-to-distortion ratio restricted to inpainted sections, and
//! aggregation of per-gap results.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::signal::{GapMask, Signal};

/// One evaluated gap of one sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub signal_id: String,
    pub method: String,
    pub estimator: String,
    pub order: usize,
    pub gap_length_ms: f64,
    pub gap_index: usize,
    /// `+inf` for a perfect reconstruction, NaN when the cell failed.
    pub sdr_db: f64,
    pub elapsed_s: f64,
}

impl EvalRecord {
    pub fn is_failure(&self) -> bool {
        self.sdr_db.is_nan()
    }
}

/// `10 log10(||y||^2 / ||y - x||^2)`; `+inf` when the estimate is exact.
pub fn sdr(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::Shape(format!(
            "reference has {} samples, estimate has {}",
            reference.len(),
            estimate.len()
        )));
    }
    let (energy, distortion) = energies(reference.iter().copied().zip(estimate.iter().copied()));
    ratio_db(energy, distortion, None)
}

fn energies(pairs: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    pairs.fold((0.0, 0.0), |(e, d), (y, x)| (e + y * y, d + (y - x) * (y - x)))
}

fn ratio_db(energy: f64, distortion: f64, gap: Option<usize>) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(Error::UndefinedReference(gap));
    }
    if distortion == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (energy / distortion).log10())
}

fn check_pair(reference: &Signal, estimate: &Signal, mask: &GapMask) -> Result<()> {
    if reference.len() != estimate.len() || reference.sample_rate() != estimate.sample_rate() {
        return Err(Error::Shape(format!(
            "reference is {} samples at {} Hz, estimate is {} samples at {} Hz",
            reference.len(),
            reference.sample_rate(),
            estimate.len(),
            estimate.sample_rate()
        )));
    }
    if mask.signal_length() != reference.len() {
        return Err(Error::Shape(format!(
            "mask is for {} samples, signals have {}",
            mask.signal_length(),
            reference.len()
        )));
    }
    Ok(())
}

/// SDR of every gap separately, in mask order.
pub fn sdr_per_gap(reference: &Signal, estimate: &Signal, mask: &GapMask) -> Result<Vec<f64>> {
    check_pair(reference, estimate, mask)?;
    mask.gaps()
        .iter()
        .enumerate()
        .map(|(g, gap)| {
            let y = &reference.samples()[gap.range()];
            let x = &estimate.samples()[gap.range()];
            let (e, d) = energies(y.iter().copied().zip(x.iter().copied()));
            ratio_db(e, d, Some(g))
        })
        .collect()
}

/// SDR over the concatenation of all gaps.
pub fn sdr_all_gaps(reference: &Signal, estimate: &Signal, mask: &GapMask) -> Result<f64> {
    check_pair(reference, estimate, mask)?;
    let pairs = mask.gaps().iter().flat_map(|gap| {
        reference.samples()[gap.range()]
            .iter()
            .copied()
            .zip(estimate.samples()[gap.range()].iter().copied())
    });
    let (e, d) = energies(pairs);
    ratio_db(e, d, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupField {
    SignalId,
    Method,
    Estimator,
    Order,
    GapLengthMs,
    GapIndex,
}

impl GroupField {
    fn key(self, r: &EvalRecord) -> String {
        match self {
            GroupField::SignalId => r.signal_id.clone(),
            GroupField::Method => r.method.clone(),
            GroupField::Estimator => r.estimator.clone(),
            GroupField::Order => r.order.to_string(),
            GroupField::GapLengthMs => r.gap_length_ms.to_string(),
            GroupField::GapIndex => r.gap_index.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub key: Vec<String>,
    /// Number of finite SDR values entering mean and median.
    pub count: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub perfect_count: usize,
    pub failed_count: usize,
}

/// Mean and median of the finite SDR values per group, groups in order of
/// first appearance. `+inf` and failed (NaN) entries are counted, not averaged.
pub fn aggregate(records: &[EvalRecord], group_by: &[GroupField]) -> Vec<GroupSummary> {
    let mut index: HashMap<Vec<String>, usize> = HashMap::new();
    let mut groups: Vec<(Vec<String>, Vec<f64>, usize, usize)> = Vec::new();
    for r in records {
        let key: Vec<String> = group_by.iter().map(|f| f.key(r)).collect();
        let slot = *index.entry(key.clone()).or_insert_with(|| {
            groups.push((key, Vec::new(), 0, 0));
            groups.len() - 1
        });
        let group = &mut groups[slot];
        if r.sdr_db.is_nan() {
            group.3 += 1;
        } else if r.sdr_db == f64::INFINITY {
            group.2 += 1;
        } else {
            group.1.push(r.sdr_db);
        }
    }
    groups
        .into_iter()
        .map(|(key, mut values, perfect_count, failed_count)| {
            let count = values.len();
            let mean = (count > 0).then(|| values.iter().sum::<f64>() / count as f64);
            values.sort_by(f64::total_cmp);
            let median = (count > 0).then(|| {
                if count % 2 == 1 {
                    values[count / 2]
                } else {
                    0.5 * (values[count / 2 - 1] + values[count / 2])
                }
            });
            GroupSummary {
                key,
                count,
                mean,
                median,
                perfect_count,
                failed_count,
            }
        })
        .collect()
}
