//! Residual evaluation and zero-input AR extrapolation.

use crate::error::{Error, Result};
use crate::estimation::ArModel;

/// Full convolution of the coefficients with `x`, treating samples outside
/// `x` as zero. The result has `x.len() + p` entries.
pub fn residual(model: &ArModel, x: &[f64]) -> Vec<f64> {
    let a = model.coeffs();
    let mut e = vec![0.0; x.len() + a.len() - 1];
    for (j, &xj) in x.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        for (i, &ai) in a.iter().enumerate() {
            e[i + j] += ai * xj;
        }
    }
    e
}

/// Squared norm of the residual, the least-squares objective.
pub fn residual_energy(model: &ArModel, x: &[f64]) -> f64 {
    residual(model, x).iter().map(|v| v * v).sum()
}

/// Continues `context` by `horizon` samples with the noise-free recursion
/// `x_n = -sum_{i>=1} a_i x_{n-i}`, seeded by the last p context samples.
pub fn extrapolate_forward(model: &ArModel, context: &[f64], horizon: usize) -> Result<Vec<f64>> {
    let p = model.order();
    if context.len() < p {
        return Err(Error::InsufficientData {
            needed: p,
            got: context.len(),
        });
    }
    let a = &model.coeffs()[1..];
    // history holds the last p context samples followed by the predictions
    let mut history = Vec::with_capacity(p + horizon);
    history.extend_from_slice(&context[context.len() - p..]);
    for n in p..p + horizon {
        let pred: f64 = a.iter().zip(history[n - p..n].iter().rev()).map(|(ai, x)| ai * x).sum();
        history.push(-pred);
    }
    Ok(history.split_off(p))
}

/// Extrapolates `context` backwards in time; the output ends immediately
/// before `context[0]`.
pub fn extrapolate_backward(model: &ArModel, context: &[f64], horizon: usize) -> Result<Vec<f64>> {
    let reversed: Vec<f64> = context.iter().rev().copied().collect();
    let mut out = extrapolate_forward(model, &reversed, horizon)?;
    out.reverse();
    Ok(out)
}
