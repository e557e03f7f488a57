//! Critical-exponent algebra for the degenerate semilinear wave equation.
//!
//! Every threshold is a root of an explicit quadratic, so the closed forms
//! are used directly and each one has a residual helper that plugs the root
//! back into its defining polynomial.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Degeneracy exponent of the Einstein–de Sitter background, `a(t) = t^(2/3)`.
pub const EDS_K: f64 = 2.0 / 3.0;

/// Which initial-value problem a blow-up prediction refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Problem {
    /// Weighted data prescribed at the singular hyperplane `t = 0`.
    SingularAtZero,
    /// Ordinary Cauchy data at `t = 1`.
    CauchyAtOne,
}

/// Verdict of [`blowup_predicted`]. The blow-up theorems are one-sided, so
/// there is deliberately no "global existence" variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Prediction {
    Blowup,
    NoPrediction,
}

/// All thresholds for one `(n, k)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub n: u32,
    pub k: f64,
    pub p0_singular: f64,
    pub pcr: f64,
    pub p0_nk: f64,
    pub fujita_like: f64,
    pub upper_bound_case2: f64,
    pub alpha0: f64,
}

impl ExponentReport {
    pub fn new(n: u32, k: f64) -> Result<Self> {
        Ok(Self {
            n,
            k,
            p0_singular: p0_singular(n)?,
            pcr: pcr(n)?,
            p0_nk: p0_nk(n, k)?,
            fujita_like: fujita_like(n, k)?,
            upper_bound_case2: upper_bound_case2(n, k)?,
            alpha0: alpha0(n)?,
        })
    }
}

fn check_dim(n: u32) -> Result<f64> {
    if n < 1 {
        return domain("spatial dimension n must be at least 1");
    }
    Ok(f64::from(n))
}

fn check_k(k: f64) -> Result<()> {
    if !(0.0..1.0).contains(&k) {
        return domain(format!("degeneracy exponent k = {k} must lie in [0, 1)"));
    }
    Ok(())
}

/// Positive root of `(n+3)p² − (n+13)p − 2 = 0` for a real dimension.
///
/// Exposed for continuous scans of the ratio against `1 + 6/n`.
pub fn p0_singular_real(n: f64) -> f64 {
    (n + 13.0 + (n * n + 34.0 * n + 193.0).sqrt()) / (2.0 * (n + 3.0))
}

/// Positive root of `(n+3)p² − (n+13)p − 2 = 0`.
pub fn p0_singular(n: u32) -> Result<f64> {
    let n = check_dim(n)?;
    Ok(p0_singular_real(n))
}

/// `max(p0_singular(n), 1 + 6/n)`.
pub fn pcr(n: u32) -> Result<f64> {
    let nf = check_dim(n)?;
    Ok(p0_singular_real(nf).max(1.0 + 6.0 / nf))
}

/// Positive root of `(1−k)(n+3)p² − (n+5−k(n+1))p − 2 + 2k = 0`.
pub fn p0_nk(n: u32, k: f64) -> Result<f64> {
    let n = check_dim(n)?;
    check_k(k)?;
    let disc = k * k * (n + 5.0).powi(2) - 2.0 * k * (n * (n + 14.0) + 29.0) + n * (n + 18.0) + 49.0;
    Ok((n + 5.0 - k * (n + 1.0) + disc.sqrt()) / (2.0 * (1.0 - k) * (n + 3.0)))
}

/// First-case threshold `1 + 2/(n(1−k))` of the Cauchy problem.
pub fn fujita_like(n: u32, k: f64) -> Result<f64> {
    let n = check_dim(n)?;
    check_k(k)?;
    Ok(1.0 + 2.0 / (n * (1.0 - k)))
}

/// Second-case upper bound `(2/(n+3))(n − 1 + 2/(1−k))`.
pub fn upper_bound_case2(n: u32, k: f64) -> Result<f64> {
    let n = check_dim(n)?;
    check_k(k)?;
    Ok(2.0 / (n + 3.0) * (n - 1.0 + 2.0 / (1.0 - k)))
}

/// Positive root of `(n+3)α² + (n+3)α − 6 = 0`, the admissible range of the
/// local existence result being `0 < α < alpha0(n)`.
pub fn alpha0(n: u32) -> Result<f64> {
    let n = check_dim(n)?;
    Ok((-(n + 3.0) + (n * n + 30.0 * n + 81.0).sqrt()) / (2.0 * (n + 3.0)))
}

/// Kato's lemma hypotheses `r ≥ 1`, `p > 1`, `(p−1)r > q−2`.
pub fn kato_condition(p: f64, q: f64, r: f64) -> bool {
    r >= 1.0 && p > 1.0 && (p - 1.0) * r > q - 2.0
}

/// Whether the blow-up theorems cover the exponent `p`.
pub fn blowup_predicted(n: u32, k: f64, p: f64, problem: Problem) -> Result<Prediction> {
    if !(p > 1.0) {
        return domain(format!("exponent p = {p} must exceed 1"));
    }
    check_k(k)?;
    let blowup = match problem {
        Problem::SingularAtZero => {
            if (k - EDS_K).abs() > 1e-12 {
                return domain("the weighted problem at t = 0 is only defined for k = 2/3");
            }
            p < pcr(n)?
        }
        Problem::CauchyAtOne => {
            p < fujita_like(n, k)? || (p <= upper_bound_case2(n, k)? && p < p0_nk(n, k)?)
        }
    };
    Ok(if blowup {
        Prediction::Blowup
    } else {
        Prediction::NoPrediction
    })
}

/// `p0_singular(n) / (1 + 6/n)` for real `n`.
pub fn singular_ratio(n: f64) -> f64 {
    p0_singular_real(n) / (1.0 + 6.0 / n)
}

/// Locates the dimension where [`singular_ratio`] crosses 1 by bisection on
/// `[lo, hi]`. Returns `None` when the bracket does not change sign.
pub fn ratio_crossing(mut lo: f64, mut hi: f64) -> Option<f64> {
    let f = |n: f64| singular_ratio(n) - 1.0;
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo * fhi > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || hi - lo < 1e-14 {
            return Some(mid);
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Relative residuals of the defining quadratics, used as transcription guards.
pub mod residual {
    /// `|(n+3)p² − (n+13)p − 2| / ((n+3)p² + (n+13)p + 2)`.
    pub fn singular(n: f64, p: f64) -> f64 {
        let (a, b, c) = (n + 3.0, n + 13.0, 2.0);
        (a * p * p - b * p - c).abs() / (a * p * p + b * p + c)
    }

    pub fn nk(n: f64, k: f64, p: f64) -> f64 {
        let a = (1.0 - k) * (n + 3.0);
        let b = n + 5.0 - k * (n + 1.0);
        let c = 2.0 - 2.0 * k;
        (a * p * p - b * p - c).abs() / (a * p * p + b.abs() * p + c.abs())
    }

    pub fn alpha(n: f64, alpha: f64) -> f64 {
        let a = n + 3.0;
        (a * alpha * alpha + a * alpha - 6.0).abs() / (a * alpha * alpha + a * alpha + 6.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn p0_singular_dimension_three() {
        let p = p0_singular(3).unwrap();
        assert_relative_eq!(p, (16.0 + 304f64.sqrt()) / 12.0, max_relative = 1e-15);
        assert!((6.0 * p * p - 16.0 * p - 2.0).abs() < 1e-10);
        assert!(p < 3.0);
    }

    #[test]
    fn p0_singular_limit() {
        let a = p0_singular(1_000).unwrap();
        let b = p0_singular(1_000_000).unwrap();
        assert!(a > b && b > 1.0);
        // p0(n) − 1 = 12/n + O(n^−2)
        assert!(((a - 1.0) * 1e3 - 12.0).abs() < 0.1);
        assert!(((b - 1.0) * 1e6 - 12.0).abs() < 1e-4);
        assert!((a - 1.0).abs() < 1.2e-2);
        assert!((b - 1.0).abs() < 1.2e-5);
    }

    #[test]
    fn pcr_values() {
        assert_eq!(pcr(3).unwrap(), 3.0);
        // branch evaluation: p0(1) = (14 + √228)/8 < 7
        let p01 = (14.0 + 228f64.sqrt()) / 8.0;
        assert!(p01 < 7.0);
        assert_eq!(pcr(1).unwrap(), 7.0);
        let p010 = (23.0 + 633f64.sqrt()) / 26.0;
        assert!(p010 > 1.6);
        assert_relative_eq!(pcr(10).unwrap(), p010, max_relative = 1e-15);
        assert!((pcr(10).unwrap() - 1.852_288).abs() < 1e-6);
    }

    #[test]
    fn p0_nk_values() {
        assert_relative_eq!(
            p0_nk(3, 0.5).unwrap(),
            (3.0 + 2.0 * 3f64.sqrt()) / 3.0,
            max_relative = 1e-12
        );
        let p = p0_nk(3, 2.0 / 3.0).unwrap();
        assert!((2.0 * p * p - 16.0 / 3.0 * p - 2.0 / 3.0).abs() < 1e-10);
        assert_relative_eq!(p, (16.0 + 304f64.sqrt()) / 12.0, max_relative = 1e-12);
        let p = p0_nk(3, 0.0).unwrap();
        assert!((6.0 * p * p - 8.0 * p - 2.0).abs() < 1e-10);
        assert_relative_eq!(p, (4.0 + 28f64.sqrt()) / 6.0, max_relative = 1e-12);
        assert!(p0_nk(3, 1.0).is_err());
    }

    #[test]
    fn cauchy_thresholds() {
        assert!((fujita_like(3, 0.5).unwrap() - 7.0 / 3.0).abs() < 1e-15);
        // 2((n−1)(1−k) + 2)/((1−k)(n+3)) at n = 3: 2 for k = 1/2, 8/3 for k = 2/3
        assert!((upper_bound_case2(3, 0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!((upper_bound_case2(3, EDS_K).unwrap() - 8.0 / 3.0).abs() < 1e-15);
        let (n, k) = (5.0, 0.3);
        let alt = 2.0 * ((n - 1.0) * (1.0 - k) + 2.0) / ((1.0 - k) * (n + 3.0));
        assert!((upper_bound_case2(5, k).unwrap() - alt).abs() < 1e-14);
    }

    #[test]
    fn blowup_examples() {
        use Prediction::*;
        use Problem::*;
        assert_eq!(blowup_predicted(3, 2.0 / 3.0, 2.5, CauchyAtOne).unwrap(), Blowup);
        assert!(2.2 < 7.0 / 3.0);
        assert!(2.2 > p0_nk(3, 0.5).unwrap());
        assert_eq!(blowup_predicted(3, 0.5, 2.2, CauchyAtOne).unwrap(), Blowup);
        assert_eq!(blowup_predicted(3, 2.0 / 3.0, 4.0, CauchyAtOne).unwrap(), NoPrediction);
        assert_eq!(blowup_predicted(3, 2.0 / 3.0, 2.9, SingularAtZero).unwrap(), Blowup);
        assert_eq!(blowup_predicted(3, 2.0 / 3.0, 3.0, SingularAtZero).unwrap(), NoPrediction);
        assert!(blowup_predicted(3, 0.5, 2.0, SingularAtZero).is_err());
        assert!(blowup_predicted(3, 0.5, 1.0, CauchyAtOne).is_err());
    }

    #[test]
    fn alpha0_values() {
        assert_relative_eq!(alpha0(3).unwrap(), (5f64.sqrt() - 1.0) / 2.0, max_relative = 1e-12);
        let a = alpha0(1).unwrap();
        assert!((4.0 * a * a + 4.0 * a - 6.0).abs() < 1e-10);
        assert_relative_eq!(a, (-4.0 + 112f64.sqrt()) / 8.0, max_relative = 1e-12);
    }

    #[test]
    fn kato_examples() {
        assert!(kato_condition(2.0, 2.0, 1.0));
        assert!(!kato_condition(2.0, 4.0, 1.0));
        assert!(!kato_condition(2.0, 3.0, 1.0));
    }

    #[test]
    fn rejects_zero_dimension() {
        assert!(p0_singular(0).is_err());
        assert!(pcr(0).is_err());
        assert!(alpha0(0).is_err());
    }

    #[test]
    fn ratio_crosses_once() {
        let mut crossings = 0;
        let mut prev = singular_ratio(1.0) - 1.0;
        for n in 2..=300 {
            let cur = singular_ratio(f64::from(n)) - 1.0;
            if prev.signum() != cur.signum() {
                crossings += 1;
            }
            prev = cur;
        }
        assert_eq!(crossings, 1);
        let n = ratio_crossing(1.0, 300.0).unwrap();
        assert!(n > 3.0 && n < 5.0, "crossing at {n}");
    }
}
