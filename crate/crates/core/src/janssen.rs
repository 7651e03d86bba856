//! Janssen's alternating least-squares interpolation.
//!
//! With the coefficients fixed, the residual energy `||A x||^2` of the full
//! convolution matrix `A` is a quadratic in the missing samples with Hessian
//! `A^T A`. For a full convolution `A^T A` is exactly the symmetric Toeplitz
//! matrix built from the coefficient autocorrelation (the "Gram band"), so
//! the normal equations restricted to the missing set only need that band.

use crate::error::{Error, Result};
use crate::estimation::{ArModel, Estimator};
use crate::prediction::residual_energy;
use crate::signal::Segment;

/// `b_j = sum_i a_i a_{i+j}` for `j = 0..=p`; row band of `A^T A`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramBand(Vec<f64>);

impl GramBand {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Entry `(i, j)` of `A^T A`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.0.get(i.abs_diff(j)).copied().unwrap_or(0.0)
    }

    pub fn bandwidth(&self) -> usize {
        self.0.len() - 1
    }
}

pub fn gram_band(model: &ArModel) -> GramBand {
    let a = model.coeffs();
    GramBand(
        (0..a.len())
            .map(|j| a[..a.len() - j].iter().zip(&a[j..]).map(|(x, y)| x * y).sum())
            .collect(),
    )
}

/// Linear solver used for the missing-sample least-squares problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerSolver {
    /// Contiguous runs: banded QR or Toeplitz recursion, whichever needs
    /// fewer operations, with QR as fallback when the normal matrix is
    /// numerically singular. Scattered indices: dense Cholesky.
    #[default]
    Auto,
    /// Givens QR of the banded convolution rows for contiguous runs.
    Qr,
    /// Banded Cholesky of the normal equations for contiguous runs.
    Banded,
    /// Levinson-type Toeplitz recursion for contiguous runs.
    Toeplitz,
    /// Dense Cholesky for every cluster.
    Dense,
}

/// Which samples feed the coefficient estimate in each Janssen iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimationScope {
    /// The whole segment, including the current estimate of the gap.
    #[default]
    FullSegment,
    /// Only the reliable runs of the segment, fitted jointly.
    ReliableOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JanssenConfig {
    pub order: usize,
    pub estimator: Estimator,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub scope: EstimationScope,
    pub solver: InnerSolver,
}

impl JanssenConfig {
    pub const DEFAULT_MAX_ITERATIONS: usize = 50;
    pub const DEFAULT_REL_TOLERANCE: f64 = 1e-6;

    pub fn new(order: usize, estimator: Estimator) -> Self {
        Self {
            order,
            estimator,
            max_iterations: Self::DEFAULT_MAX_ITERATIONS,
            rel_tolerance: Self::DEFAULT_REL_TOLERANCE,
            scope: EstimationScope::default(),
            solver: InnerSolver::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if !(self.rel_tolerance >= 0.0) {
            return Err(Error::Config(format!(
                "rel_tolerance must be non-negative, got {}",
                self.rel_tolerance
            )));
        }
        Ok(())
    }
}

/// Result of [`janssen_iterate`].
#[derive(Debug, Clone, PartialEq)]
pub struct JanssenOutcome {
    pub samples: Vec<f64>,
    pub iterations: usize,
    /// Residual energy after the last missing-sample solve.
    pub objective: f64,
    /// Residual energy after every half step: estimate, solve, estimate, ...
    pub trace: Vec<f64>,
    pub model: Option<ArModel>,
}

/// Replaces the missing samples of `segment` by the minimizer of the
/// residual energy for the fixed model. Reliable samples are untouched.
pub fn solve_missing(model: &ArModel, segment: &Segment) -> Result<Vec<f64>> {
    solve_missing_with(model, segment, InnerSolver::Auto)
}

pub fn solve_missing_with(model: &ArModel, segment: &Segment, solver: InnerSolver) -> Result<Vec<f64>> {
    let mut out = segment.samples.clone();
    if segment.local_missing.is_empty() {
        return Ok(out);
    }
    let band = gram_band(model);
    let p = band.bandwidth();
    let flags = segment.missing_flags();

    // Independent clusters: missing runs whose distance exceeds p do not
    // couple in A^T A.
    let missing = &segment.local_missing;
    let mut start = 0;
    for i in 1..=missing.len() {
        if i == missing.len() || missing[i] - missing[i - 1] > p {
            let cluster = &missing[start..i];
            let contiguous = cluster[cluster.len() - 1] - cluster[0] + 1 == cluster.len();
            let sol = if contiguous {
                solve_run(model, &band, &segment.samples, &flags, cluster[0], cluster.len(), solver)?
            } else {
                let rhs = cluster_rhs(&band, &segment.samples, &flags, cluster);
                solve_dense(&band, cluster, rhs)?
            };
            for (&idx, v) in cluster.iter().zip(sol) {
                out[idx] = v;
            }
            start = i;
        }
    }
    Ok(out)
}

/// `-(A^T A)_{K,M} x_M` for missing indices `K`.
fn cluster_rhs(band: &GramBand, x: &[f64], missing: &[bool], cluster: &[usize]) -> Vec<f64> {
    let b = band.values();
    let p = band.bandwidth();
    cluster
        .iter()
        .map(|&k| {
            let lo = k.saturating_sub(p);
            let hi = (k + p + 1).min(x.len());
            -(lo..hi)
                .filter(|&l| !missing[l])
                .map(|l| b[k.abs_diff(l)] * x[l])
                .sum::<f64>()
        })
        .collect()
}

/// Missing run `start..start + len`.
fn solve_run(
    model: &ArModel,
    band: &GramBand,
    x: &[f64],
    missing: &[bool],
    start: usize,
    len: usize,
    solver: InnerSolver,
) -> Result<Vec<f64>> {
    let p = band.bandwidth();
    let cluster: Vec<usize> = (start..start + len).collect();
    let qr = || {
        let d = run_residual_rows(model.coeffs(), x, missing, start, len);
        banded_qr_solve(model.coeffs(), &d, len)
    };
    match solver {
        InnerSolver::Qr => qr(),
        InnerSolver::Banded => {
            banded_cholesky_solve(band.values(), len, cluster_rhs(band, x, missing, &cluster))
        }
        InnerSolver::Toeplitz => toeplitz_solve(band.values(), cluster_rhs(band, x, missing, &cluster)),
        InnerSolver::Dense => solve_dense(band, &cluster, cluster_rhs(band, x, missing, &cluster)),
        // QR ~ (n + p) p^2 rotations work, Toeplitz recursion ~ 4 n^2
        InnerSolver::Auto if p * p <= 4 * len => qr(),
        InnerSolver::Auto => {
            match toeplitz_solve(band.values(), cluster_rhs(band, x, missing, &cluster)) {
                Err(Error::Solver(_)) => qr(),
                other => other,
            }
        }
    }
}

/// Rows `start..start + len + p` of the residual `A x` with the missing
/// samples set to zero.
fn run_residual_rows(a: &[f64], x: &[f64], missing: &[bool], start: usize, len: usize) -> Vec<f64> {
    let p = a.len() - 1;
    (start..start + len + p)
        .map(|r| {
            let lo = r.saturating_sub(p);
            let hi = r.min(x.len() - 1);
            (lo..=hi)
                .filter(|&l| !missing[l])
                .map(|l| a[r - l] * x[l])
                .sum()
        })
        .collect()
}

/// Minimizes `||C s + d||` for the `(m + p) x m` lower-banded Toeplitz
/// matrix `C[j + i][j] = a_i` by row-wise Givens rotations; `R` keeps upper
/// bandwidth `p`.
pub(crate) fn banded_qr_solve(a: &[f64], d: &[f64], m: usize) -> Result<Vec<f64>> {
    let p = a.len() - 1;
    let w = p + 1;
    // row k of R holds columns k..k + p
    let mut r = vec![0.0; m * w];
    let mut qtb = vec![0.0; m];
    let mut row = vec![0.0; w];
    for t in 0..m + p {
        let lo = t.saturating_sub(p);
        let hi = t.min(m - 1);
        row.fill(0.0);
        for c in lo..=hi {
            row[c - lo] = a[t - c];
        }
        let mut rhs = -d[t];
        for k in lo..=hi {
            let xk = row[k - lo];
            if xk == 0.0 {
                continue;
            }
            let rkk: f64 = r[k * w];
            let h = rkk.hypot(xk);
            let (c, s) = (rkk / h, xk / h);
            for col in k..=hi {
                let rv = r[k * w + (col - k)];
                let xv = row[col - lo];
                r[k * w + (col - k)] = c * rv + s * xv;
                row[col - lo] = c * xv - s * rv;
            }
            let bv = qtb[k];
            qtb[k] = c * bv + s * rhs;
            rhs = c * rhs - s * bv;
        }
    }
    let mut s = vec![0.0; m];
    for k in (0..m).rev() {
        let diag = r[k * w];
        if diag == 0.0 {
            return Err(Error::Solver(format!("rank-deficient convolution matrix at column {k}")));
        }
        let tail = (k + w).min(m);
        let dot: f64 = (k + 1..tail).map(|j| r[k * w + (j - k)] * s[j]).sum();
        s[k] = (qtb[k] - dot) / diag;
    }
    Ok(s)
}

fn not_pd(step: usize) -> Error {
    Error::Solver(format!("normal matrix not positive definite at pivot {step}"))
}

/// Cholesky factorization and solve of the `n x n` symmetric Toeplitz matrix
/// with first row `band` (zero beyond), exploiting bandwidth `w`.
pub(crate) fn banded_cholesky_solve(band: &[f64], n: usize, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    let w = (band.len() - 1).min(n.saturating_sub(1));
    let stride = w + 1;
    // row i, column k (i - w <= k <= i) lives at i * stride + (k + w - i)
    let mut l = vec![0.0; n * stride];
    for i in 0..n {
        let first = i.saturating_sub(w);
        for j in first..=i {
            let k0 = first.max(j.saturating_sub(w));
            let row_i = &l[i * stride + (k0 + w - i)..i * stride + (j + w - i)];
            let row_j = &l[j * stride + (k0 + w - j)..j * stride + w];
            let dot: f64 = row_i.iter().zip(row_j).map(|(x, y)| x * y).sum();
            let s = band[i - j] - dot;
            if i == j {
                if !(s > 0.0) {
                    return Err(not_pd(i));
                }
                l[i * stride + w] = s.sqrt();
            } else {
                l[i * stride + (j + w - i)] = s / l[j * stride + w];
            }
        }
    }
    // L y = rhs
    for i in 0..n {
        let first = i.saturating_sub(w);
        let row = &l[i * stride + (first + w - i)..i * stride + w];
        let dot: f64 = row.iter().zip(&rhs[first..i]).map(|(x, y)| x * y).sum();
        rhs[i] = (rhs[i] - dot) / l[i * stride + w];
    }
    // L^T x = y
    for i in (0..n).rev() {
        let yi = rhs[i] / l[i * stride + w];
        rhs[i] = yi;
        let first = i.saturating_sub(w);
        for k in first..i {
            rhs[k] -= l[i * stride + (k + w - i)] * yi;
        }
    }
    Ok(rhs)
}

/// Levinson recursion for a symmetric positive-definite Toeplitz system
/// whose first row is `band` padded with zeros to the system size.
pub(crate) fn toeplitz_solve(band: &[f64], rhs: Vec<f64>) -> Result<Vec<f64>> {
    let n = rhs.len();
    let t0 = band[0];
    if !(t0 > 0.0) {
        return Err(not_pd(0));
    }
    let r = |k: usize| band.get(k).map_or(0.0, |v| v / t0);
    let b: Vec<f64> = rhs.iter().map(|v| v / t0).collect();

    let mut x = Vec::with_capacity(n);
    x.push(b[0]);
    if n == 1 {
        return Ok(x);
    }
    let rv: Vec<f64> = (1..n).map(r).collect();
    let mut y = vec![-rv[0]];
    let mut alpha = -rv[0];
    let mut beta = 1.0;
    for k in 1..n {
        beta *= 1.0 - alpha * alpha;
        if !(beta > 0.0) {
            return Err(not_pd(k));
        }
        // r(1:k)' * x(k:-1:1)
        let dot: f64 = rv[..k].iter().zip(x.iter().rev()).map(|(a, b)| a * b).sum();
        let mu = (b[k] - dot) / beta;
        for (i, yi) in y.iter().rev().enumerate() {
            x[i] += mu * yi;
        }
        x.push(mu);
        if k < n - 1 {
            let dot: f64 = rv[..k].iter().zip(y.iter().rev()).map(|(a, b)| a * b).sum();
            alpha = (-rv[k] - dot) / beta;
            let rev: Vec<f64> = y.iter().rev().copied().collect();
            for (yi, ri) in y.iter_mut().zip(rev) {
                *yi += alpha * ri;
            }
            y.push(alpha);
        }
    }
    Ok(x)
}

/// Dense Cholesky solve of `(A^T A)_{K,K} s = rhs`.
fn solve_dense(band: &GramBand, idx: &[usize], rhs: Vec<f64>) -> Result<Vec<f64>> {
    let n = idx.len();
    let mut m: Vec<f64> = idx
        .iter()
        .flat_map(|&i| idx.iter().map(move |&j| (i, j)))
        .map(|(i, j)| band.at(i, j))
        .collect();
    dense_cholesky_solve(&mut m, n, rhs)
}

pub(crate) fn dense_cholesky_solve(m: &mut [f64], n: usize, mut rhs: Vec<f64>) -> Result<Vec<f64>> {
    for j in 0..n {
        let dot: f64 = m[j * n..j * n + j].iter().map(|v| v * v).sum();
        let d = m[j * n + j] - dot;
        if !(d > 0.0) {
            return Err(not_pd(j));
        }
        let d = d.sqrt();
        m[j * n + j] = d;
        for i in j + 1..n {
            let (upper, lower) = m.split_at_mut(i * n);
            let dot: f64 = lower[..j].iter().zip(&upper[j * n..j * n + j]).map(|(x, y)| x * y).sum();
            lower[j] = (lower[j] - dot) / d;
        }
    }
    for i in 0..n {
        let dot: f64 = m[i * n..i * n + i].iter().zip(&rhs[..i]).map(|(x, y)| x * y).sum();
        rhs[i] = (rhs[i] - dot) / m[i * n + i];
    }
    for i in (0..n).rev() {
        let dot: f64 = (i + 1..n).map(|k| m[k * n + i] * rhs[k]).sum();
        rhs[i] = (rhs[i] - dot) / m[i * n + i];
    }
    Ok(rhs)
}

const CHANGE_FLOOR: f64 = 1e-12;

/// Alternates coefficient estimation and missing-sample solves.
///
/// Missing samples start at zero. Iteration stops after
/// `cfg.max_iterations` or once `||s_new - s_old|| / max(||s_new||, 1e-12)`
/// drops below `cfg.rel_tolerance`.
pub fn janssen_iterate(segment: &Segment, cfg: &JanssenConfig) -> Result<JanssenOutcome> {
    cfg.validate()?;
    let p = cfg.order;
    if segment.len() < p + 1 {
        return Err(Error::InsufficientData {
            needed: p + 1,
            got: segment.len(),
        });
    }
    if segment.reliable_count() == 0 {
        return Err(Error::Precondition("segment has no reliable samples".into()));
    }
    if segment.local_missing.is_empty() {
        return Ok(JanssenOutcome {
            samples: segment.samples.clone(),
            iterations: 0,
            objective: 0.0,
            trace: Vec::new(),
            model: None,
        });
    }

    let mut work = segment.clone();
    for &i in &work.local_missing {
        work.samples[i] = 0.0;
    }
    let runs = work.reliable_runs();
    let mut trace = Vec::with_capacity(2 * cfg.max_iterations);
    let mut iterations = 0;
    let mut model = None;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let m = match cfg.scope {
            EstimationScope::FullSegment => cfg.estimator.estimate(&work.samples, p)?,
            EstimationScope::ReliableOnly => {
                let slices: Vec<&[f64]> = runs.iter().map(|r| &work.samples[r.clone()]).collect();
                cfg.estimator.estimate_runs(&slices, p)?
            }
        };
        trace.push(residual_energy(&m, &work.samples));

        let filled = solve_missing_with(&m, &work, cfg.solver)?;
        let (mut change, mut norm) = (0.0, 0.0);
        for &i in &work.local_missing {
            let d = filled[i] - work.samples[i];
            change += d * d;
            norm += filled[i] * filled[i];
        }
        work.samples = filled;
        trace.push(residual_energy(&m, &work.samples));
        model = Some(m);

        if change.sqrt() / norm.sqrt().max(CHANGE_FLOOR) < cfg.rel_tolerance {
            break;
        }
    }

    // reliable samples come from the input, bit for bit
    let mut samples = segment.samples.clone();
    for &i in &segment.local_missing {
        samples[i] = work.samples[i];
    }
    Ok(JanssenOutcome {
        samples,
        iterations,
        objective: *trace.last().unwrap_or(&0.0),
        trace,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(c: &[f64]) -> ArModel {
        ArModel::new(c.to_vec()).unwrap()
    }

    #[test]
    fn gram_band_examples() {
        assert_eq!(gram_band(&model(&[1.0, -1.0])).values(), &[2.0, -1.0]);
        assert_eq!(gram_band(&ArModel::trivial(3)).values(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn solve_missing_examples() {
        let seg = Segment::new(vec![1.0, 0.0, 3.0], 0, vec![1]).unwrap();
        let out = solve_missing(&model(&[1.0, -1.0]), &seg).unwrap();
        assert!((out[1] - 2.0).abs() < 1e-14);
        assert_eq!((out[0], out[2]), (1.0, 3.0));

        let seg = Segment::new(vec![5.0, 7.0, 5.0], 0, vec![1]).unwrap();
        assert_eq!(solve_missing(&model(&[1.0, 0.0]), &seg).unwrap(), vec![5.0, 0.0, 5.0]);
    }

    #[test]
    fn solver_paths_agree_on_small_system() {
        let band = gram_band(&model(&[1.0, -1.6, 0.9, -0.2]));
        let rhs: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin()).collect();
        let a = banded_cholesky_solve(band.values(), 20, rhs.clone()).unwrap();
        let b = toeplitz_solve(band.values(), rhs.clone()).unwrap();
        let idx: Vec<usize> = (0..20).collect();
        let c = solve_dense(&band, &idx, rhs).unwrap();
        for i in 0..20 {
            assert!((a[i] - c[i]).abs() < 1e-9 * c[i].abs().max(1.0));
            assert!((b[i] - c[i]).abs() < 1e-9 * c[i].abs().max(1.0));
        }
    }

    #[test]
    fn all_paths_fill_the_same_run() {
        let x: Vec<f64> = (0..120).map(|i| (i as f64 * 0.21).sin() + 0.3 * (i as f64 * 0.05).cos()).collect();
        let m = model(&[1.0, -1.2, 0.5, 0.1, -0.05]);
        let seg = Segment::new(x, 0, (40..70).collect()).unwrap();
        let reference = solve_missing_with(&m, &seg, InnerSolver::Dense).unwrap();
        for solver in [InnerSolver::Auto, InnerSolver::Qr, InnerSolver::Banded, InnerSolver::Toeplitz] {
            let out = solve_missing_with(&m, &seg, solver).unwrap();
            for (a, b) in out.iter().zip(&reference) {
                assert!((a - b).abs() < 1e-9, "{solver:?}");
            }
        }
    }

    #[test]
    fn run_at_segment_edge() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.4).cos()).collect();
        let m = model(&[1.0, -0.9, 0.3]);
        for missing in [(0..5).collect::<Vec<_>>(), (26..30).collect()] {
            let seg = Segment::new(x.clone(), 0, missing).unwrap();
            let qr = solve_missing_with(&m, &seg, InnerSolver::Qr).unwrap();
            let dense = solve_missing_with(&m, &seg, InnerSolver::Dense).unwrap();
            for (a, b) in qr.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn burg_recovers_pure_tone() {
        let w = 2.0 * std::f64::consts::PI * 440.0 / 8000.0;
        let x: Vec<f64> = (0..1400).map(|i| (w * i as f64 + 0.3).sin()).collect();
        let seg = Segment::new(x.clone(), 0, (600..800).collect()).unwrap();
        let out = janssen_iterate(&seg, &JanssenConfig::new(16, Estimator::Burg)).unwrap();
        for i in 600..800 {
            assert!((out.samples[i] - x[i]).abs() < 1e-5);
        }
    }

    #[test]
    fn wide_band_narrow_system() {
        // order larger than the gap: bandwidth clips to n - 1
        let band = gram_band(&model(&[1.0, 0.5, -0.3, 0.2, 0.1, -0.05]));
        let rhs = vec![1.0, -2.0, 0.5];
        let a = banded_cholesky_solve(band.values(), 3, rhs.clone()).unwrap();
        let b = toeplitz_solve(band.values(), rhs.clone()).unwrap();
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn scattered_clusters_decouple() {
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).cos()).collect();
        let m = model(&[1.0, -0.5, 0.25]);
        let seg = Segment::new(x, 0, vec![3, 5, 6, 30, 31]).unwrap();
        let auto = solve_missing(&m, &seg).unwrap();
        let dense = solve_missing_with(&m, &seg, InnerSolver::Dense).unwrap();
        for (a, d) in auto.iter().zip(&dense) {
            assert!((a - d).abs() < 1e-12);
        }
    }

    #[test]
    fn janssen_edge_cases() {
        let cfg = JanssenConfig::new(2, Estimator::Burg);
        let seg = Segment::new(vec![0.0; 5], 0, vec![0, 1, 2, 3, 4]).unwrap();
        assert!(matches!(janssen_iterate(&seg, &cfg), Err(Error::Precondition(_))));

        let seg = Segment::new(vec![1.0, 2.0, 3.0, 4.0], 0, vec![]).unwrap();
        let out = janssen_iterate(&seg, &cfg).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.samples, seg.samples);

        let seg = Segment::new(vec![1.0, 2.0], 0, vec![1]).unwrap();
        assert!(matches!(janssen_iterate(&seg, &cfg), Err(Error::InsufficientData { .. })));

        let mut bad = cfg.clone();
        bad.max_iterations = 0;
        let seg = Segment::new(vec![1.0, 0.0, 3.0, 4.0], 0, vec![1]).unwrap();
        assert!(matches!(janssen_iterate(&seg, &bad), Err(Error::Config(_))));
    }

    #[test]
    fn reliable_only_scope_converges_in_two_passes() {
        let w = 0.05;
        let x: Vec<f64> = (0..600).map(|i| (w * i as f64).sin()).collect();
        let seg = Segment::new(x.clone(), 0, (250..300).collect()).unwrap();
        let mut cfg = JanssenConfig::new(8, Estimator::Burg);
        cfg.scope = EstimationScope::ReliableOnly;
        let out = janssen_iterate(&seg, &cfg).unwrap();
        assert!(out.iterations <= 2);
        for i in 250..300 {
            assert!((out.samples[i] - x[i]).abs() < 1e-2);
        }
    }
}
