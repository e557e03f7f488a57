//! Integral representations evaluated by adaptive quadrature.
//!
//! These share no code with the series and continued-fraction paths and are
//! used to cross-check them.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::quadrature::{integrate, Tolerance};

fn tol() -> Tolerance {
    Tolerance {
        abs: 0.0,
        rel: 1e-14,
        max_depth: 60,
    }
}

/// `e^z K_ν(z) = ∫₀^∞ e^(−z(cosh s − 1)) cosh(νs) ds`.
pub fn bessel_k_scaled_quad(nu: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return domain("z must be positive");
    }
    let nu = nu.abs();
    let mut upper = 1.0_f64;
    while z * (upper.cosh() - 1.0) - nu * upper < 800.0 {
        upper += 0.5;
    }
    // split at the bulk scale so the adaptive rule sees the peak
    let knee = (1.0 + 1.0 / z).ln().max(0.5).min(upper);
    let f = |s: f64| (-z * (s.cosh() - 1.0)).exp() * (nu * s).cosh();
    Ok(integrate(f, 0.0, knee, tol())? + integrate(f, knee, upper, tol())?)
}

/// `e^(−z) I_ν(z)` from
/// `I_ν(z) = (1/π)∫₀^π e^(z cos θ) cos(νθ) dθ − (sin νπ/π) ∫₀^∞ e^(−z cosh t − νt) dt`.
pub fn bessel_i_scaled_quad(nu: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return domain("z must be positive");
    }
    let first = integrate(
        |th: f64| (z * (th.cos() - 1.0)).exp() * (nu * th).cos(),
        0.0,
        PI,
        tol(),
    )? / PI;
    let s = (nu * PI).sin();
    if s.abs() < 1e-15 {
        return Ok(first);
    }
    let mut upper = 1.0_f64;
    while z * (upper.cosh() + 1.0) + nu * upper < 800.0 {
        upper += 0.5;
    }
    let second = integrate(|t: f64| (-z * (t.cosh() + 1.0) - nu * t).exp(), 0.0, upper, tol())?;
    Ok(first - s / PI * second)
}

/// `Γ(a, z) = e^(−z) ∫₀^∞ (z + s)^(a−1) e^(−s) ds`.
pub fn incomplete_gamma_upper_quad(a: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return domain("z must be positive");
    }
    let peak = (a - 1.0 - z).max(0.0);
    let upper = peak + 60.0 + 10.0 * (a.abs() + 1.0).sqrt() * (peak.sqrt() + 1.0);
    let f = |s: f64| ((a - 1.0) * (z + s).ln() - s).exp();
    let mut total = 0.0;
    let mut lo = 0.0;
    // unit-scale panels near the origin where the power factor varies fastest
    for edge in [z.min(1.0), 1.0, 4.0, 16.0, upper] {
        if edge > lo {
            total += integrate(f, lo, edge, tol())?;
            lo = edge;
        }
    }
    Ok(total * (-z).exp())
}

fn log_space(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| lo * (hi / lo).powf(j as f64 / (n - 1) as f64))
}

/// Reference grid for `K_ν` and `I_ν`: twenty orders `ν = 2j/19` spanning
/// `[0, 2]` against twenty arguments log-spaced over `[10⁻², 700]`.
pub fn bessel_check_grid() -> Vec<(f64, f64)> {
    (0..20)
        .flat_map(|j| log_space(1e-2, 700.0, 20).map(move |z| (2.0 * j as f64 / 19.0, z)))
        .collect()
}

/// Reference grid for `Γ(a, z)`: twenty orders evenly spaced over `[−3, 3]`
/// against twenty arguments log-spaced over `[10⁻², 50]`.
pub fn gamma_check_grid() -> Vec<(f64, f64)> {
    (0..20)
        .flat_map(|j| log_space(1e-2, 50.0, 20).map(move |z| (-3.0 + 6.0 * j as f64 / 19.0, z)))
        .collect()
}
