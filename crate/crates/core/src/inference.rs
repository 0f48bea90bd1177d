//! Confidence regions for the Monte Carlo mean and the multivariate effective
//! sample size.
//!
//! Given `√n(θ_n − θ) → N_p(0, Σ)` and an estimate `Σ̂`, the joint region is
//! the ellipsoid `{θ : n (θ_n − θ)ᵀ Σ̂⁻¹ (θ_n − θ) ≤ χ²_{level, p}}`. The
//! coordinatewise alternative is a box of z-intervals, with or without a
//! Bonferroni adjustment. Regions are closed: boundary points are inside.

use ndarray::{Array1, Array2, ArrayView1};
use serde::Serialize;

use crate::chain::MeanAndScatter;
use crate::error::{Error, Result};
use crate::msve::SigmaEstimate;
use crate::numerics::chi2::ln_gamma_half;
use crate::numerics::linalg::solve_lower;
use crate::numerics::{chi2_quantile, cholesky, log_det_pd, normal_upper_quantile};

fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("confidence level {level} outside (0, 1)")))
    }
}

#[derive(Debug, Clone)]
pub struct Ellipsoid {
    center: Array1<f64>,
    /// Cholesky factor of `Σ̂`.
    chol: Array2<f64>,
    n: usize,
    level: f64,
    chi2_radius: f64,
}

impl Ellipsoid {
    pub fn center(&self) -> ArrayView1<'_, f64> {
        self.center.view()
    }

    pub fn chi2_radius(&self) -> f64 {
        self.chi2_radius
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    /// `n (θ_n − θ)ᵀ Σ̂⁻¹ (θ_n − θ)`.
    pub fn squared_distance(&self, theta: ArrayView1<'_, f64>) -> f64 {
        let diff = &self.center - &theta;
        let y = solve_lower(self.chol.view(), diff.view());
        self.n as f64 * y.dot(&y)
    }

    pub fn contains(&self, theta: ArrayView1<'_, f64>) -> bool {
        self.squared_distance(theta) <= self.chi2_radius
    }
}

/// Joint confidence ellipsoid centered at the sample mean.
pub fn ellipsoid(estimate: &SigmaEstimate, summary: &MeanAndScatter, n: usize, level: f64) -> Result<Ellipsoid> {
    check_level(level)?;
    estimate.require_positive_definite()?;
    if summary.mean.len() != estimate.p {
        return Err(Error::Dimension("mean and estimate dimensions differ".into()));
    }
    let chol = cholesky(estimate.matrix.view())?;
    let chi2_radius = chi2_quantile(level, estimate.p as u32)?;
    Ok(Ellipsoid { center: summary.mean.clone(), chol, n, level, chi2_radius })
}

/// Volume to the `1/p` power from its ingredients, in log space:
/// `[π^{p/2} / Γ(p/2+1)]^{1/p} (χ²/n)^{1/2} |Σ̂|^{1/(2p)}`.
pub fn ellipsoid_volume_root_from_parts(log_det: f64, p: usize, n: usize, chi2_radius: f64) -> f64 {
    let pf = p as f64;
    let log_unit_ball = 0.5 * pf * std::f64::consts::PI.ln() - ln_gamma_half(p as u32 + 2);
    (log_unit_ball / pf + 0.5 * (chi2_radius / n as f64).ln() + log_det / (2.0 * pf)).exp()
}

pub fn ellipsoid_volume_pth_root(estimate: &SigmaEstimate, n: usize, level: f64) -> Result<f64> {
    check_level(level)?;
    estimate.require_positive_definite()?;
    let log_det = log_det_pd(estimate.matrix.view())?;
    let radius = chi2_quantile(level, estimate.p as u32)?;
    Ok(ellipsoid_volume_root_from_parts(log_det, estimate.p, n, radius))
}

/// Per-coordinate half-widths `z_q √(Σ̂_ii / n)`, with `q = (1+level)/2`, or
/// `q = 1 − (1−level)/(2p)` when Bonferroni-corrected.
pub fn univariate_half_widths(estimate: &SigmaEstimate, n: usize, level: f64, corrected: bool) -> Result<Array1<f64>> {
    check_level(level)?;
    let p = estimate.p;
    let diag = estimate.matrix.diag();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::IndefiniteEstimate { min_eigenvalue: diag[i] });
    }
    let q = if corrected { 1.0 - (1.0 - level) / (2.0 * p as f64) } else { 0.5 * (1.0 + level) };
    let z = normal_upper_quantile(q)?;
    Ok(diag.mapv(|d| z * (d / n as f64).sqrt()))
}

/// Axis-aligned box of coordinatewise intervals.
#[derive(Debug, Clone, Serialize)]
pub struct BoxRegion {
    #[serde(serialize_with = "crate::serde_util::vector")]
    pub center: Array1<f64>,
    #[serde(serialize_with = "crate::serde_util::vector")]
    pub half_widths: Array1<f64>,
}

impl BoxRegion {
    pub fn contains(&self, theta: ArrayView1<'_, f64>) -> bool {
        self.center
            .iter()
            .zip(theta)
            .zip(&self.half_widths)
            .all(|((c, t), h)| (c - t).abs() <= *h)
    }

    /// Geometric mean of the side lengths.
    pub fn volume_pth_root(&self) -> f64 {
        let p = self.half_widths.len() as f64;
        (self.half_widths.iter().map(|h| (2.0 * h).ln()).sum::<f64>() / p).exp()
    }
}

pub fn univariate_box(
    estimate: &SigmaEstimate,
    summary: &MeanAndScatter,
    n: usize,
    level: f64,
    corrected: bool,
) -> Result<BoxRegion> {
    Ok(BoxRegion {
        center: summary.mean.clone(),
        half_widths: univariate_half_widths(estimate, n, level, corrected)?,
    })
}

/// `n (|Λ̂| / |Σ̂|)^{1/p}`, evaluated through log-determinants.
pub fn multivariate_ess(summary: &MeanAndScatter, estimate: &SigmaEstimate, n: usize) -> Result<f64> {
    estimate.require_positive_definite()?;
    let log_lambda = log_det_pd(summary.sample_cov.view())?;
    let log_sigma = log_det_pd(estimate.matrix.view())?;
    Ok(n as f64 * ((log_lambda - log_sigma) / estimate.p as f64).exp())
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeRoots {
    pub ellipsoid: f64,
    pub bonferroni_box: f64,
    pub uncorrected_box: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfidenceReport {
    #[serde(serialize_with = "crate::serde_util::vector")]
    pub center: Array1<f64>,
    /// `Σ̂ / n`.
    #[serde(serialize_with = "crate::serde_util::matrix")]
    pub shape: Array2<f64>,
    pub level: f64,
    pub chi2_radius: f64,
    #[serde(serialize_with = "crate::serde_util::vector")]
    pub uncorrected_half_widths: Array1<f64>,
    #[serde(serialize_with = "crate::serde_util::vector")]
    pub bonferroni_half_widths: Array1<f64>,
    pub volume_pth_root: VolumeRoots,
    pub ess: f64,
}

pub fn confidence_report(estimate: &SigmaEstimate, summary: &MeanAndScatter, level: f64) -> Result<ConfidenceReport> {
    let n = estimate.n;
    let region = ellipsoid(estimate, summary, n, level)?;
    let plain = univariate_box(estimate, summary, n, level, false)?;
    let bonf = univariate_box(estimate, summary, n, level, true)?;
    Ok(ConfidenceReport {
        center: summary.mean.clone(),
        shape: &estimate.matrix / n as f64,
        level,
        chi2_radius: region.chi2_radius,
        volume_pth_root: VolumeRoots {
            ellipsoid: ellipsoid_volume_pth_root(estimate, n, level)?,
            bonferroni_box: bonf.volume_pth_root(),
            uncorrected_box: plain.volume_pth_root(),
        },
        uncorrected_half_widths: plain.half_widths,
        bonferroni_half_widths: bonf.half_widths,
        ess: multivariate_ess(summary, estimate, n)?,
    })
}
