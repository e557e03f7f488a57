//! Time-dependent factors of the test functions `v(x, t) = λ(t) φ(x)`.

use serde::{Deserialize, Serialize};

use super::bessel::{bessel_k_scaled, bessel_ik_scaled};
use crate::error::{domain, Result};

/// Value and first derivative of a scalar function of time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueDeriv {
    pub value: f64,
    pub derivative: f64,
}

/// Characteristic time `∫ t^(−k) dt = t^(1−k)/(1−k)`.
pub fn characteristic_time(k: f64, t: f64) -> f64 {
    t.powf(1.0 - k) / (1.0 - k)
}

/// Inverse of [`characteristic_time`].
pub fn time_from_characteristic(k: f64, tau: f64) -> f64 {
    ((1.0 - k) * tau).powf(1.0 / (1.0 - k))
}

fn check_k(k: f64) -> Result<()> {
    if !(0.0..1.0).contains(&k) {
        return domain(format!("k = {k} must lie in [0, 1)"));
    }
    Ok(())
}

/// `λ(t) = (φ+1)e^(−φ)` with `φ = 3t^(1/3)`, the decaying solution of
/// `λ'' = t^(−4/3) λ` with `λ(0⁺) = 1`; `λ'(t) = −(9/φ) e^(−φ)`.
pub fn lambda_eds(t: f64) -> Result<ValueDeriv> {
    if !(t > 0.0) {
        return domain(format!("λ(t) requires t > 0, got {t}"));
    }
    let phi = 3.0 * t.cbrt();
    let e = (-phi).exp();
    Ok(ValueDeriv {
        value: (phi + 1.0) * e,
        derivative: -9.0 / phi * e,
    })
}

/// Order `ν = 1/(2−2k)` of the Bessel test function.
pub fn bessel_order(k: f64) -> f64 {
    1.0 / (2.0 - 2.0 * k)
}

/// `ln λ̃(t)` where `λ̃(t) = √t K_ν(φ(t)) / K_ν(φ(1))`, `φ(t) = t^(1−k)/(1−k)`.
///
/// The logarithm stays finite for arguments far beyond the range where
/// `λ̃` itself underflows.
pub fn ln_lambda_tilde(k: f64, t: f64) -> Result<f64> {
    check_k(k)?;
    if !(t >= 1.0) {
        return domain(format!("λ̃(t) is defined for t ≥ 1, got {t}"));
    }
    if t == 1.0 {
        return Ok(0.0);
    }
    let nu = bessel_order(k);
    let (z1, zt) = (characteristic_time(k, 1.0), characteristic_time(k, t));
    let (k1, kt) = (bessel_k_scaled(nu, z1)?, bessel_k_scaled(nu, zt)?);
    Ok(0.5 * t.ln() + (kt / k1).ln() - (zt - z1))
}

/// Normalised Bessel test function `λ̃(t)`; `λ̃(1) = 1` exactly.
pub fn lambda_tilde(k: f64, t: f64) -> Result<f64> {
    Ok(ln_lambda_tilde(k, t)?.exp())
}

/// `λ̃(t)` together with `λ̃'(t) = −t^(−k) K_{1−ν}(φ)/K_ν(φ) · λ̃(t)`.
pub fn lambda_tilde_deriv(k: f64, t: f64) -> Result<ValueDeriv> {
    let value = lambda_tilde(k, t)?;
    let nu = bessel_order(k);
    let z = characteristic_time(k, t);
    let ratio = bessel_k_scaled(1.0 - nu, z)? / bessel_ik_scaled(nu, z)?.k;
    Ok(ValueDeriv {
        value,
        derivative: -t.powf(-k) * ratio * value,
    })
}

/// `Λ₁(k) = −λ̃'(1) = K_{(1−2k)/(2−2k)}(1/(1−k)) / K_{1/(2−2k)}(1/(1−k))`.
pub fn lambda1(k: f64) -> Result<f64> {
    check_k(k)?;
    let z = 1.0 / (1.0 - k);
    let nu = bessel_order(k);
    Ok(bessel_k_scaled((1.0 - 2.0 * k) / (2.0 - 2.0 * k), z)? / bessel_k_scaled(nu, z)?)
}

/// Relative residual `|λ̃'' − t^(−2k)λ̃| / (t^(−2k)λ̃)`, with `λ̃''` from a
/// Richardson-extrapolated centred difference of step `0.01 t^k`.
pub fn lambda_tilde_residual(k: f64, t: f64) -> Result<f64> {
    let h = 0.01 * t.powf(k);
    if !(t - h >= 1.0) {
        return domain(format!("the difference stencil at t = {t} leaves [1, ∞)"));
    }
    let f0 = lambda_tilde(k, t)?;
    let d2 = |h: f64| -> Result<f64> { Ok((lambda_tilde(k, t + h)? - 2.0 * f0 + lambda_tilde(k, t - h)?) / (h * h)) };
    let rich = (4.0 * d2(h / 2.0)? - d2(h)?) / 3.0;
    let rhs = t.powf(-2.0 * k) * f0;
    Ok((rich - rhs).abs() / rhs)
}

/// `λ̃²(t) ∫_T^t λ̃^(−2)(s) ds` against `t^k / 32`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedBound {
    pub lhs: f64,
    pub rhs: f64,
}

/// The integrand `exp(2(ln λ̃(t) − ln λ̃(s)))` never exceeds one, so the
/// integral is formed in log space and never overflows. Panels are laid out
/// in the characteristic variable, doubling in width away from `t`.
pub fn weighted_integral_bound_check(k: f64, t: f64, t0: f64) -> Result<WeightedBound> {
    use crate::quadrature::{integrate, Tolerance};
    check_k(k)?;
    if !(1.0 < t0 && t0 < t) {
        return domain(format!("need 1 < T < t, got T = {t0}, t = {t}"));
    }
    let lt = ln_lambda_tilde(k, t)?;
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-11,
        max_depth: 40,
    };
    // s = s(σ), ds = s^k dσ
    let f = |sigma: f64| {
        let s = time_from_characteristic(k, sigma).clamp(t0, t);
        match ln_lambda_tilde(k, s) {
            Ok(ls) => (2.0 * (lt - ls)).exp() * s.powf(k),
            Err(_) => f64::NAN,
        }
    };
    let (lo, hi) = (characteristic_time(k, t0), characteristic_time(k, t));
    let mut lhs = 0.0;
    let mut right = hi;
    let mut width = 0.5;
    while right > lo {
        let left = (right - width).max(lo);
        let piece = integrate(f, left, right, tol)?;
        lhs += piece;
        if piece < 1e-18 * lhs && right - lo > 0.0 && hi - right > 60.0 {
            break;
        }
        right = left;
        width *= 2.0;
    }
    Ok(WeightedBound {
        lhs,
        rhs: t.powf(k) / 32.0,
    })
}
