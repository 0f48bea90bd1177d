//! Supporting linear algebra, chi-square quantiles and seeded Gaussian sampling.

pub mod chi2;
pub mod linalg;
pub mod rng;
pub mod sum;

pub use chi2::{chi2_cdf, chi2_quantile, normal_upper_quantile};
pub use linalg::{cholesky, log_det_pd, spectral_radius, sym_eigen, EigenDecomposition, Lu};
pub use rng::{mvn_sample, RngStream};
pub use sum::CompensatedSum;
