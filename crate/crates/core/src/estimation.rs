//! AR coefficient estimation: the autocorrelation method (LPC) solved by
//! Levinson–Durbin, and Burg's lattice method.
//!
//! Coefficients follow the prediction-error-filter convention
//! `a = [1, a_1, ..., a_p]`, i.e. `e_n = sum_i a_i x_{n-i}`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Prediction-error filter `A(z) = 1 + a_1 z^-1 + ... + a_p z^-p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    coeffs: Vec<f64>,
}

impl ArModel {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.first() != Some(&1.0) {
            return Err(Error::Numeric("leading AR coefficient must be exactly 1".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Numeric("AR coefficients must be finite".into()));
        }
        Ok(Self { coeffs })
    }

    /// The all-pass-through model `[1, 0, ..., 0]` of the given order.
    pub fn trivial(order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = 1.0;
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    Lpc,
    Burg,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Lpc => "lpc",
            Estimator::Burg => "burg",
        }
    }

    pub fn estimate(self, x: &[f64], order: usize) -> Result<ArModel> {
        match self {
            Estimator::Lpc => estimate_lpc(x, order),
            Estimator::Burg => estimate_burg(x, order),
        }
    }

    /// Fits one model jointly to several disjoint excerpts.
    pub fn estimate_runs(self, runs: &[&[f64]], order: usize) -> Result<ArModel> {
        match self {
            Estimator::Lpc => estimate_lpc_runs(runs, order),
            Estimator::Burg => estimate_burg_runs(runs, order),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lpc" => Ok(Estimator::Lpc),
            "burg" => Ok(Estimator::Burg),
            other => Err(Error::Config(format!("unknown estimator `{other}` (expected lpc or burg)"))),
        }
    }
}

/// Biased, unnormalized autocorrelation `r_k = sum_n x_n x_{n+k}`, `k = 0..=p`.
pub fn autocorrelation(x: &[f64], order: usize) -> Result<Vec<f64>> {
    if x.len() < order + 1 {
        return Err(Error::InsufficientData {
            needed: order + 1,
            got: x.len(),
        });
    }
    Ok(autocorrelation_unchecked(x, order))
}

fn autocorrelation_unchecked(x: &[f64], order: usize) -> Vec<f64> {
    (0..=order)
        .map(|k| {
            if k >= x.len() {
                0.0
            } else {
                x[..x.len() - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum()
            }
        })
        .collect()
}

/// Solves the order-p Yule–Walker equations for the autocorrelation `r`.
///
/// Returns the model and the final prediction error power. A zero `r_0`
/// yields the trivial model with zero error. If the error power reaches
/// zero before order p (perfectly predictable input), the remaining
/// coefficients are left at zero.
pub fn levinson_durbin(r: &[f64]) -> Result<(ArModel, f64)> {
    let Some(&r0) = r.first() else {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    };
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("autocorrelation contains non-finite values".into()));
    }
    if r0 < 0.0 {
        return Err(Error::Numeric(format!("negative zero-lag autocorrelation {r0}")));
    }
    let order = r.len() - 1;
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    if r0 == 0.0 {
        return Ok((ArModel { coeffs: a }, 0.0));
    }

    let mut err = r0;
    let mut prev = a.clone();
    for m in 1..=order {
        if err <= 0.0 {
            err = 0.0;
            break;
        }
        let acc: f64 = r[m] + (1..m).map(|i| a[i] * r[m - i]).sum::<f64>();
        let k = -acc / err;
        prev[..m].copy_from_slice(&a[..m]);
        for i in 1..m {
            a[i] = prev[i] + k * prev[m - i];
        }
        a[m] = k;
        err *= 1.0 - k * k;
    }
    Ok((ArModel::new(a)?, err.max(0.0)))
}

/// LPC estimate: Levinson–Durbin on the biased autocorrelation.
pub fn estimate_lpc(x: &[f64], order: usize) -> Result<ArModel> {
    let r = autocorrelation(x, order)?;
    Ok(levinson_durbin(&r)?.0)
}

/// LPC fitted jointly to several excerpts by summing their autocorrelations.
pub fn estimate_lpc_runs(runs: &[&[f64]], order: usize) -> Result<ArModel> {
    check_runs(runs, order)?;
    let mut r = vec![0.0; order + 1];
    for run in runs {
        for (acc, v) in r.iter_mut().zip(autocorrelation_unchecked(run, order)) {
            *acc += v;
        }
    }
    Ok(levinson_durbin(&r)?.0)
}

/// Burg estimate from forward/backward lattice errors.
///
/// Each stage picks the reflection coefficient
/// `k = -2 sum f b / sum (f^2 + b^2)`, which keeps `|k| <= 1`; the resulting
/// `A(z)` is minimum phase. A zero denominator ends the recursion with the
/// remaining coefficients at zero.
pub fn estimate_burg(x: &[f64], order: usize) -> Result<ArModel> {
    estimate_burg_runs(&[x], order)
}

/// Burg fitted jointly to several excerpts: every stage sums the lattice
/// numerator and denominator over all excerpts long enough to contribute.
pub fn estimate_burg_runs(runs: &[&[f64]], order: usize) -> Result<ArModel> {
    check_runs(runs, order)?;
    // forward and backward prediction errors of the current stage per run
    let mut fwd: Vec<Vec<f64>> = runs.iter().map(|r| r.to_vec()).collect();
    let mut bwd = fwd.clone();
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut prev = a.clone();

    for m in 1..=order {
        let mut num = 0.0;
        let mut den = 0.0;
        for (f, b) in fwd.iter().zip(&bwd) {
            for n in m..f.len() {
                num += f[n] * b[n - 1];
                den += f[n] * f[n] + b[n - 1] * b[n - 1];
            }
        }
        if den == 0.0 {
            break;
        }
        let k = -2.0 * num / den;

        prev[..m].copy_from_slice(&a[..m]);
        for i in 1..m {
            a[i] = prev[i] + k * prev[m - i];
        }
        a[m] = k;

        for (f, b) in fwd.iter_mut().zip(bwd.iter_mut()) {
            for n in (m..f.len()).rev() {
                let fo = f[n];
                let bo = b[n - 1];
                f[n] = fo + k * bo;
                b[n] = bo + k * fo;
            }
        }
    }
    ArModel::new(a)
}

fn check_runs(runs: &[&[f64]], order: usize) -> Result<()> {
    let longest = runs.iter().map(|r| r.len()).max().unwrap_or(0);
    if longest < order + 1 {
        return Err(Error::InsufficientData {
            needed: order + 1,
            got: longest,
        });
    }
    Ok(())
}
