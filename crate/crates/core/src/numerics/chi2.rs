//! Chi-square distribution with integer degrees of freedom.
//!
//! The CDF is the regularized lower incomplete gamma function `P(df/2, x/2)`,
//! evaluated by its power series below `a + 1` and by a Lentz continued
//! fraction for the upper tail `Q` above it. Since `df/2` is always an integer
//! or half-integer, `ln Γ(df/2)` is computed exactly from factorial products
//! rather than a Lanczos approximation.

use crate::error::{Error, Result};

const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

/// `ln Γ(k / 2)` for a positive integer `k`.
pub fn ln_gamma_half(k: u32) -> f64 {
    assert!(k > 0, "ln_gamma_half requires k > 0");
    if k.is_multiple_of(2) {
        // Γ(m) = (m-1)!
        let m = k / 2;
        (1..m).map(|i| (i as f64).ln()).sum()
    } else {
        // Γ(m + 1/2) = √π Π_{i=0}^{m-1} (i + 1/2)
        let m = (k - 1) / 2;
        LN_SQRT_PI + (0..m).map(|i| (i as f64 + 0.5).ln()).sum::<f64>()
    }
}

/// Regularized incomplete gamma pair `(P(a,x), Q(a,x))` for `a = k/2`.
fn incomplete_gamma(k: u32, x: f64) -> (f64, f64) {
    let a = k as f64 / 2.0;
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    let log_prefactor = a * x.ln() - x - ln_gamma_half(k);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        let p = (log_prefactor.exp() * sum).min(1.0);
        (p, 1.0 - p)
    } else {
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-17 {
                break;
            }
        }
        let q = (log_prefactor.exp() * h).min(1.0);
        (1.0 - q, q)
    }
}

pub fn chi2_cdf(x: f64, df: u32) -> f64 {
    incomplete_gamma(df, x / 2.0).0
}

pub fn chi2_sf(x: f64, df: u32) -> f64 {
    incomplete_gamma(df, x / 2.0).1
}

pub fn chi2_pdf(x: f64, df: u32) -> f64 {
    if x <= 0.0 {
        return match df {
            1 => f64::INFINITY,
            2 => 0.5,
            _ => 0.0,
        };
    }
    let k = df as f64;
    ((k / 2.0 - 1.0) * x.ln() - x / 2.0 - (k / 2.0) * std::f64::consts::LN_2 - ln_gamma_half(df))
        .exp()
}

/// Quantile of the chi-square distribution: the `x` with `P(X ≤ x) = prob`.
///
/// Safeguarded Newton iteration inside a bisection bracket. For `prob > 1/2`
/// the residual is formed on the upper tail so precision does not degrade as
/// `prob → 1`.
pub fn chi2_quantile(prob: f64, df: u32) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidArgument(format!("quantile probability {prob} outside (0, 1)")));
    }
    if df == 0 {
        return Err(Error::InvalidArgument("chi-square degrees of freedom must be positive".into()));
    }
    let upper = prob > 0.5;
    let target = if upper { 1.0 - prob } else { prob };
    // increasing in x in both branches
    let residual = |x: f64| -> f64 {
        if upper {
            target - chi2_sf(x, df)
        } else {
            chi2_cdf(x, df) - target
        }
    };

    let mut lo = 0.0;
    let mut hi = (df as f64).max(1.0);
    while residual(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let r = residual(x);
        if r == 0.0 {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let pdf = chi2_pdf(x, df);
        let newton = x - r / pdf;
        let next = if pdf.is_finite() && pdf > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * x.abs() || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Standard normal quantile for `q ∈ (1/2, 1)`, via `z_q = √χ²_{2q−1, 1}`.
pub fn normal_upper_quantile(q: f64) -> Result<f64> {
    if !(q > 0.5 && q < 1.0) {
        return Err(Error::InvalidArgument(format!("normal quantile level {q} outside (1/2, 1)")));
    }
    Ok(chi2_quantile(2.0 * q - 1.0, 1)?.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_half_known_values() {
        assert!((ln_gamma_half(1) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-15);
        assert_eq!(ln_gamma_half(2), 0.0);
        assert!((ln_gamma_half(10) - 24f64.ln()).abs() < 1e-14);
        // Γ(7/2) = 15√π/8
        let g = 15.0 * std::f64::consts::PI.sqrt() / 8.0;
        assert!((ln_gamma_half(7) - g.ln()).abs() < 1e-14);
    }

    #[test]
    fn df2_is_exponential() {
        let q = chi2_quantile(0.90, 2).unwrap();
        assert!((q - 4.605170185988091).abs() <= 1e-12 * 4.605170185988091);
        for x in [0.1, 1.0, 5.0, 30.0] {
            assert!((chi2_cdf(x, 2) - (1.0 - (-x / 2.0).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_domain() {
        assert!(chi2_quantile(0.0, 2).is_err());
        assert!(chi2_quantile(1.0, 2).is_err());
        assert!(chi2_quantile(f64::NAN, 2).is_err());
        assert!(chi2_quantile(0.5, 0).is_err());
    }

    #[test]
    fn normal_quantiles() {
        assert!((normal_upper_quantile(0.975).unwrap() - 1.959963984540054).abs() < 1e-12);
        assert!((normal_upper_quantile(0.95).unwrap() - 1.6448536269514722).abs() < 1e-12);
    }

    #[test]
    fn tails_far_out() {
        // the upper tail is only as precise as the representable 1 - prob
        let prob = 1.0 - 1e-12;
        let q = chi2_quantile(prob, 3).unwrap();
        assert!((chi2_sf(q, 3) / (1.0 - prob) - 1.0).abs() < 1e-6, "{}", chi2_sf(q, 3));
        let q = chi2_quantile(1e-10, 4).unwrap();
        assert!((chi2_cdf(q, 4) / 1e-10 - 1.0).abs() < 1e-9);
    }
}
