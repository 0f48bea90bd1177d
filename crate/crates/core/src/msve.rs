//! Multivariate spectral variance estimator
//!
//! ```text
//! Σ̂_S = Σ_{s=−(b_n−1)}^{b_n−1} w_n(s) γ_n(s)
//! ```
//!
//! together with the overlapping-block representation `Σ̂_{w,n}` and the end
//! correction `d_n` satisfying `Σ̂_S = Σ̂_{w,n} + d_n` exactly. The latter two
//! exist mainly to quantify edge effects and as an independent algebraic
//! check on the estimator.

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::Serialize;

use crate::autocov::{autocov_range, AutocovarianceSequence};
use crate::chain::ChainMatrix;
use crate::error::{Error, Result};
use crate::numerics::linalg::{frobenius, symmetrized};
use crate::numerics::sym_eigen;
use crate::window::LagWindow;

/// Relative eigenvalue floor for calling an estimate positive definite:
/// `λ_min > PD_RELATIVE_FLOOR · trace / p`.
pub const PD_RELATIVE_FLOOR: f64 = 1e-10;

/// Rows of `l` per parallel chunk in the overlap form.
const OVERLAP_CHUNK: usize = 1024;

/// An estimate of the asymptotic covariance matrix with its provenance.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaEstimate {
    #[serde(serialize_with = "crate::serde_util::matrix")]
    pub matrix: Array2<f64>,
    pub window: LagWindow,
    pub bn: usize,
    pub n: usize,
    pub p: usize,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub is_positive_definite: bool,
}

impl SigmaEstimate {
    /// Wraps a raw estimate, symmetrizing it and recording its spectrum.
    pub fn from_matrix(raw: Array2<f64>, window: LagWindow, bn: usize, n: usize) -> Result<Self> {
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteResult("spectral variance estimate".into()));
        }
        let p = raw.nrows();
        let norm = frobenius(raw.view());
        let asym = frobenius((&raw - &raw.t()).view());
        if asym > 1e-12 * norm {
            return Err(Error::NonFiniteResult(format!("estimate asymmetric beyond roundoff ({asym:e})")));
        }
        let matrix = symmetrized(raw.view());
        let eig = sym_eigen(matrix.view())?;
        let min_eigenvalue = eig.min_eigenvalue();
        let trace = matrix.diag().sum();
        let is_positive_definite = trace > 0.0 && min_eigenvalue > PD_RELATIVE_FLOOR * trace / p as f64;
        Ok(Self {
            matrix,
            window,
            bn,
            n,
            p,
            eigenvalues: eig.eigenvalues.to_vec(),
            min_eigenvalue,
            is_positive_definite,
        })
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Errors unless the estimate is positive definite; inference on an
    /// indefinite estimate is refused rather than repaired.
    pub fn require_positive_definite(&self) -> Result<()> {
        if self.is_positive_definite {
            Ok(())
        } else {
            Err(Error::IndefiniteEstimate { min_eigenvalue: self.min_eigenvalue })
        }
    }
}

fn check_preconditions(chain: &ChainMatrix, window: &LagWindow, bn: usize) -> Result<()> {
    if bn == 0 {
        return Err(Error::InvalidArgument("truncation point must be at least 1".into()));
    }
    if chain.n() <= 2 * bn {
        return Err(Error::TruncationTooLarge { n: chain.n(), bn });
    }
    if !window.satisfies_basic_conditions(bn) {
        return Err(Error::InvalidWindowParam(format!("{window} violates the lag-window conditions at b_n = {bn}")));
    }
    Ok(())
}

/// Applies a window to precomputed autocovariances. Lets several windows
/// share one pass over the chain.
pub fn msve_from_autocov(seq: &AutocovarianceSequence, window: &LagWindow) -> Result<SigmaEstimate> {
    let bn = seq.bn();
    if !window.satisfies_basic_conditions(bn) {
        return Err(Error::InvalidWindowParam(format!("{window} violates the lag-window conditions at b_n = {bn}")));
    }
    let lags = seq.non_negative();
    let mut acc = lags[0].clone();
    for (lag, g) in lags.iter().enumerate().skip(1) {
        let w = window.evaluate(lag as i64, bn);
        if w != 0.0 {
            acc.scaled_add(w, g);
            acc.scaled_add(w, &g.t());
        }
    }
    SigmaEstimate::from_matrix(acc, *window, bn, seq.n())
}

/// `Σ̂_S` with lag window `window` and truncation point `bn`.
pub fn msve(chain: &ChainMatrix, window: &LagWindow, bn: usize) -> Result<SigmaEstimate> {
    check_preconditions(chain, window, bn)?;
    msve_from_autocov(&autocov_range(chain, bn)?, window)
}

/// Cumulative sums of centered rows: `P[0] = 0`, `P[t] = Σ_{u<t} Z_u`.
fn centered_prefix_sums(chain: &ChainMatrix) -> Array2<f64> {
    let z = chain.centered();
    let (n, p) = z.dim();
    let mut prefix = Array2::<f64>::zeros((n + 1, p));
    for t in 0..n {
        let (head, mut tail) = prefix.view_mut().split_at(Axis(0), t + 1);
        let mut next = tail.row_mut(0);
        next.assign(&head.row(t));
        next += &z.row(t);
    }
    prefix
}

/// Overlapping-block form
///
/// ```text
/// Σ̂_{w,n} = (1/n) Σ_{l=0}^{n−b_n} Σ_{k=1}^{b_n} k² Δ₂w(k) [Ȳ_l(k) − Ȳ_n][Ȳ_l(k) − Ȳ_n]ᵀ
/// ```
///
/// with `Ȳ_l(k)` the mean of rows `l+1..=l+k`. Evaluated through prefix sums
/// of the centered chain, since `k (Ȳ_l(k) − Ȳ_n) = P[l+k] − P[l]`.
pub fn msve_overlap_form(chain: &ChainMatrix, window: &LagWindow, bn: usize) -> Result<Array2<f64>> {
    check_preconditions(chain, window, bn)?;
    let (n, p) = (chain.n(), chain.p());
    let prefix = centered_prefix_sums(chain);
    let weights: Vec<(usize, f64)> = (1..=bn)
        .map(|k| (k, window.delta2_unchecked(k, bn)))
        .filter(|&(_, d)| d != 0.0)
        .collect();

    let starts: Vec<usize> = (0..=n - bn).step_by(OVERLAP_CHUNK).collect();
    let partials: Vec<Array2<f64>> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + OVERLAP_CHUNK).min(n - bn + 1);
            let mut acc = Array2::<f64>::zeros((p, p));
            let mut block = vec![0.0; p];
            for l in start..end {
                let base = prefix.row(l);
                for &(k, d2) in &weights {
                    let top = prefix.row(l + k);
                    for i in 0..p {
                        block[i] = top[i] - base[i];
                    }
                    for i in 0..p {
                        let bi = d2 * block[i];
                        for j in 0..p {
                            acc[[i, j]] += bi * block[j];
                        }
                    }
                }
            }
            acc
        })
        .collect();
    // fixed left-to-right reduction
    let mut total = Array2::<f64>::zeros((p, p));
    for part in &partials {
        total += part;
    }
    Ok(total / n as f64)
}

/// End correction `d_n`, the boundary terms dropped by the overlap form.
///
/// With `Z_l = Y_l − Ȳ_n` (1-based) and empty sums taken as zero,
///
/// ```text
/// n d_n = Σ_{t=1}^{b_n} Δ₁w(t) ( Σ_{l=1}^{t−1} Z_l Z_lᵀ + Σ_{l=n−b_n+t+1}^{n} Z_l Z_lᵀ )
///       + Σ_{s=1}^{b_n−1} Σ_{t=1}^{b_n−s} Δ₁w(s+t)
///           ( Σ_{l=1}^{t−1} C_{l,s} + Σ_{l=n−b_n+t+1}^{n−s} C_{l,s} ),
/// C_{l,s} = Z_l Z_{l+s}ᵀ + Z_{l+s} Z_lᵀ.
/// ```
pub fn end_correction(chain: &ChainMatrix, window: &LagWindow, bn: usize) -> Result<Array2<f64>> {
    check_preconditions(chain, window, bn)?;
    let (n, p) = (chain.n(), chain.p());
    let z = chain.centered();
    // 1-based row accessor
    let row = |l: usize| z.row(l - 1);
    let mut acc = Array2::<f64>::zeros((p, p));

    let add_outer = |acc: &mut Array2<f64>, c: f64, a: usize, b: usize, both: bool| {
        let (za, zb) = (row(a), row(b));
        for i in 0..p {
            for j in 0..p {
                let mut v = za[i] * zb[j];
                if both {
                    v += zb[i] * za[j];
                }
                acc[[i, j]] += c * v;
            }
        }
    };

    for t in 1..=bn {
        let d1 = window.delta1_unchecked(t, bn);
        for l in 1..t {
            add_outer(&mut acc, d1, l, l, false);
        }
        for l in (n - bn + t + 1)..=n {
            add_outer(&mut acc, d1, l, l, false);
        }
    }
    for s in 1..bn {
        for t in 1..=(bn - s) {
            let d1 = window.delta1_unchecked(s + t, bn);
            for l in 1..t {
                add_outer(&mut acc, d1, l, l + s, true);
            }
            for l in (n - bn + t + 1)..=(n - s) {
                add_outer(&mut acc, d1, l, l + s, true);
            }
        }
    }
    Ok(acc / n as f64)
}

/// `‖Σ̂_S − (Σ̂_{w,n} + d_n)‖_F` together with `‖Σ̂_S‖_F`.
pub fn decomposition_residual(chain: &ChainMatrix, window: &LagWindow, bn: usize) -> Result<(f64, f64)> {
    let sigma = msve(chain, window, bn)?.matrix;
    let overlap = msve_overlap_form(chain, window, bn)?;
    let d = end_correction(chain, window, bn)?;
    let resid = &sigma - &overlap - &d;
    Ok((frobenius(resid.view()), frobenius(sigma.view())))
}
