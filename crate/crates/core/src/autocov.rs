//! Lag-`s` sample autocovariance matrices,
//!
//! ```text
//! γ_n(s) = (1/n) Σ_{t ∈ I_s} (Y_t − Ȳ_n)(Y_{t+s} − Ȳ_n)ᵀ,   I_s = {1, …, n−s} for s ≥ 0
//! ```
//!
//! with `γ_n(−s) = γ_n(s)ᵀ`. The divisor is `n` for every lag.

use std::fmt::Write as _;

use ndarray::{s, Array2, ArrayView2};
use rayon::prelude::*;

use crate::chain::ChainMatrix;
use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;

/// Rows per block in the lag-product kernel. Each block is one dense
/// `p × BLOCK` by `BLOCK × p` product; block partials are combined with
/// compensated summation.
const BLOCK: usize = 4096;

/// `Σ_{t=0}^{n−s−1} z_t z_{t+s}ᵀ` for `s ≥ 0` (no normalization).
pub(crate) fn lag_cross_product(z: ArrayView2<'_, f64>, lag: usize) -> Array2<f64> {
    let (n, p) = z.dim();
    let m = n - lag;
    let lead = z.slice(s![..m, ..]);
    let follow = z.slice(s![lag.., ..]);
    if m <= BLOCK {
        return lead.t().dot(&follow);
    }
    let mut acc = vec![CompensatedSum::default(); p * p];
    let mut start = 0;
    while start < m {
        let end = (start + BLOCK).min(m);
        let part = lead.slice(s![start..end, ..]).t().dot(&follow.slice(s![start..end, ..]));
        for (a, x) in acc.iter_mut().zip(part.iter()) {
            a.add(*x);
        }
        start = end;
    }
    Array2::from_shape_vec((p, p), acc.iter().map(CompensatedSum::value).collect()).expect("p x p")
}

/// `γ_n(s)` for a single lag, `|s| < n`.
pub fn sample_autocov(chain: &ChainMatrix, lag: i64) -> Result<Array2<f64>> {
    let n = chain.n();
    let k = lag.unsigned_abs() as usize;
    if k >= n {
        return Err(Error::InvalidArgument(format!("lag {lag} requires |s| < n = {n}")));
    }
    let z = chain.centered();
    let g = lag_cross_product(z.view(), k) / n as f64;
    Ok(if lag < 0 { g.reversed_axes().as_standard_layout().into_owned() } else { g })
}

/// `γ_n(s)` for `|s| ≤ b_n − 1`, stored for non-negative lags only.
#[derive(Debug, Clone)]
pub struct AutocovarianceSequence {
    n: usize,
    p: usize,
    /// `lags[s] = γ_n(s)`, `s = 0..b_n`.
    lags: Vec<Array2<f64>>,
}

impl AutocovarianceSequence {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Truncation point: lags run over `−(b_n−1)..=(b_n−1)`.
    pub fn bn(&self) -> usize {
        self.lags.len()
    }

    /// `γ_n(s)`; negative lags are transposed views of the stored matrices.
    pub fn get(&self, lag: i64) -> Option<ArrayView2<'_, f64>> {
        let m = self.lags.get(lag.unsigned_abs() as usize)?;
        Some(if lag < 0 { m.t() } else { m.view() })
    }

    pub fn non_negative(&self) -> &[Array2<f64>] {
        &self.lags
    }

    /// `lag,i,j,value` rows for every stored and mirrored lag.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("lag,i,j,value\n");
        let top = self.bn() as i64 - 1;
        for lag in -top..=top {
            let g = self.get(lag).expect("lag in range");
            for ((i, j), v) in g.indexed_iter() {
                let _ = writeln!(out, "{lag},{i},{j},{v}");
            }
        }
        out
    }
}

/// All autocovariances needed by a spectral variance estimate with truncation
/// point `bn`. Requires `n > 2 b_n`.
///
/// Lags are computed in parallel; each lag's sum has a fixed order, so the
/// result does not depend on scheduling.
pub fn autocov_range(chain: &ChainMatrix, bn: usize) -> Result<AutocovarianceSequence> {
    let n = chain.n();
    if bn == 0 {
        return Err(Error::InvalidArgument("truncation point must be at least 1".into()));
    }
    if n <= 2 * bn {
        return Err(Error::TruncationTooLarge { n, bn });
    }
    Ok(autocov_lags(chain, bn))
}

/// Lags `0..bn` without the `n > 2 b_n` requirement (only `bn ≤ n`).
pub(crate) fn autocov_lags(chain: &ChainMatrix, bn: usize) -> AutocovarianceSequence {
    let n = chain.n();
    assert!(bn >= 1 && bn <= n, "lags 0..{bn} need bn <= n = {n}");
    let z = chain.centered();
    let lags: Vec<Array2<f64>> = (0..bn)
        .into_par_iter()
        .map(|lag| lag_cross_product(z.view(), lag) / n as f64)
        .collect();
    AutocovarianceSequence { n, p: chain.p(), lags }
}
