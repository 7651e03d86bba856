//! Autoregressive audio inpainting.
//!
//! AR models are estimated with the autocorrelation method (Levinson–Durbin)
//! or Burg's method, and used to fill gaps of missing samples by
//! extrapolation with crossfade, frame-wise Janssen interpolation with
//! overlap-add, or gap-wise Janssen interpolation where one model is shared
//! by both contexts of a gap.
//!
//! ```
//! use arinpaint_core::{inpaint, Estimator, Gap, GapMask, InpaintConfig, Method, Signal};
//!
//! let w = 2.0 * std::f64::consts::PI * 440.0 / 8000.0;
//! let x: Vec<f64> = (0..4000).map(|n| (w * n as f64).sin()).collect();
//! let signal = Signal::new(x.clone(), 8000).unwrap();
//! let mask = GapMask::new(vec![Gap::new(2000, 80)], x.len()).unwrap();
//!
//! let cfg = InpaintConfig::new(Method::JanssenGapWise, Estimator::Burg, 8).with_context(512);
//! let out = inpaint(&signal.zero_gaps(&mask).unwrap(), &mask, &cfg).unwrap();
//! assert!((out.signal.samples()[2040] - x[2040]).abs() < 1e-4);
//! ```

pub mod error;
pub mod estimation;
pub mod eval;
pub mod inpaint;
pub mod io;
pub mod janssen;
pub mod prediction;
pub mod signal;

pub use error::{Error, Result};
pub use estimation::{
    autocorrelation, estimate_burg, estimate_lpc, levinson_durbin, ArModel, Estimator,
};
pub use eval::{aggregate, sdr, sdr_all_gaps, sdr_per_gap, EvalRecord, GroupField, GroupSummary};
pub use inpaint::{
    crossfade_weights, inpaint, inpaint_extrapolation, inpaint_janssen_framewise,
    inpaint_janssen_gapwise, InpaintConfig, InpaintOutput, Method, WindowShape, WorkUnit,
};
pub use janssen::{
    gram_band, janssen_iterate, solve_missing, solve_missing_with, EstimationScope, GramBand,
    InnerSolver, JanssenConfig, JanssenOutcome,
};
pub use prediction::{extrapolate_backward, extrapolate_forward, residual, residual_energy};
pub use signal::{
    extract_segment, gap_length_samples, generate_gaps, project_consistent, Gap, GapMask,
    GapPlacement, Segment, Signal, SplitMix64,
};
