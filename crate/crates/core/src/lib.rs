//! Multivariate spectral variance estimation for Monte Carlo output.
//!
//! A chain `Y_1, …, Y_n ∈ ℝ^p` is reduced to lag autocovariances, weighted by
//! a lag window and truncated at `b_n`, giving an estimate of the asymptotic
//! covariance `Σ` of `√n (Ȳ_n − θ)`. The estimate feeds joint confidence
//! regions and an effective sample size. A VAR(1) model with exact `Σ`
//! supports simulation studies.

// `!(x > 0.0)` checks send NaN to the rejection branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autocov;
pub mod chain;
pub mod error;
pub mod experiment;
pub mod inference;
pub mod msve;
pub mod numerics;
pub(crate) mod serde_util;
pub mod var1;
pub mod window;

pub use autocov::{autocov_range, sample_autocov, AutocovarianceSequence};
pub use chain::{acf_ccf, load_chain, summarize, ChainFormat, ChainMatrix, MeanAndScatter};
pub use error::{Error, Result};
pub use experiment::{coverage, sweep, CoverageReport, ExperimentConfig, Provenance, RegionMethod, SweepReport};
pub use inference::{confidence_report, ellipsoid, multivariate_ess, univariate_box, ConfidenceReport, Ellipsoid};
pub use msve::{decomposition_residual, end_correction, msve, msve_from_autocov, msve_overlap_form, SigmaEstimate};
pub use var1::{setting, simulate, true_sigma, Var1Spec, Var1SpecFile, Var1Truth};
pub use window::{condition_diagnostics, window_identity_check, ConditionReport, LagWindow, TruncationRule};
