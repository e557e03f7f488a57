//! The positive eigenfunction `Aφ = φ`.
//!
//! Outside the coefficient ball it equals the sphere average
//! `φ_L(x) = ∫_{S^(n−1)} e^(x·ω) dω`. The discrete version solves `A_h φ = φ`
//! on every interior node with `φ_L` on the grid boundary, so it agrees with
//! `φ_L` outside the ball up to the discretisation error and has no seam.

use super::bessel::bessel_i;
use super::gamma::gamma;
use crate::error::{domain, Error, Result};
use crate::grid::{sphere_area, GridField, GridSpec};
use crate::linalg::SparseSym;
use crate::operators::EllipticOperator;

/// `∫_{S^(n−1)} e^(r ω₁) dω = (2π)^(n/2) r^(−(n−2)/2) I_{(n−2)/2}(r)`;
/// `2 cosh r` for `n = 1`.
pub fn phi_l(n: u32, r: f64) -> Result<f64> {
    if n < 1 {
        return domain("n must be at least 1");
    }
    if !(r >= 0.0) {
        return domain(format!("r must be non-negative, got {r}"));
    }
    if n == 1 {
        return Ok(2.0 * r.cosh());
    }
    let nu = (f64::from(n) - 2.0) / 2.0;
    let two_pi_pow = (2.0 * std::f64::consts::PI).powf(f64::from(n) / 2.0);
    if r < 1.0 {
        // r^(−ν) I_ν(r) = Σ (r/2)^(2m) / (2^ν m! Γ(m+ν+1))
        let q = 0.25 * r * r;
        let mut term = 1.0 / (2f64.powf(nu) * gamma(nu + 1.0));
        let mut sum = term;
        for m in 1..60 {
            let mf = m as f64;
            term *= q / (mf * (mf + nu));
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        return Ok(two_pi_pow * sum);
    }
    Ok(two_pi_pow * r.powf(-nu) * bessel_i(nu, r)?)
}

/// Discrete eigenfunction on a grid.
#[derive(Debug, Clone)]
pub struct Eigenfunction {
    pub operator: EllipticOperator,
    pub values: GridField,
    /// `R_A + 1`, the ball outside which `φ = φ_L` for the continuous problem.
    pub ball_radius: f64,
    /// Max of `|A_h φ − φ|` over non-boundary nodes.
    pub residual: f64,
}

/// Solves `A_h φ = φ` on interior nodes with `φ = φ_L(x/√c)` on the boundary.
pub fn eigenfunction(a: &EllipticOperator, grid: &GridSpec) -> Result<Eigenfunction> {
    let ball = a.r_a + 1.0;
    if grid.extent < ball + grid.spacing {
        return domain(format!(
            "grid extent {} does not cover the ball of radius {ball}",
            grid.extent
        ));
    }
    let op = a.discretize(grid)?;
    let n = grid.space_dim();
    let scale = a.c.sqrt();
    let mut phi = GridField::zeros(*grid);
    for i in 0..grid.len() {
        phi.values[i] = phi_l(n, grid.radius(i) / scale)?;
    }

    let unknown: Vec<usize> = (0..grid.len())
        .filter(|&i| !grid.is_boundary(i))
        .collect();
    let mut pos = vec![usize::MAX; grid.len()];
    for (p, &i) in unknown.iter().enumerate() {
        pos[i] = p;
    }
    let omega = op.inner_weights();
    let mut rows = Vec::with_capacity(unknown.len());
    let mut rhs = Vec::with_capacity(unknown.len());
    for &i in &unknown {
        let mut row = vec![(pos[i], omega[i])];
        let mut b = 0.0;
        op.stencil(i, |j, c| {
            if pos[j] == usize::MAX {
                b += omega[i] * c * phi.values[j];
            } else {
                row.push((pos[j], -omega[i] * c));
            }
        });
        rows.push(row);
        rhs.push(b);
    }
    let m = SparseSym { rows };
    let band = m.bandwidth() as f64;
    let sol = if (unknown.len() as f64) * band * band <= 2e9 {
        m.solve_banded(&rhs)?
    } else {
        m.solve_cg(&rhs, 1e-14, 20 * unknown.len() + 1000)?
    };
    for (p, &i) in unknown.iter().enumerate() {
        phi.values[i] = sol[p];
    }
    if let Some(bad) = phi.values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::LinearSolve(format!("eigenfunction lost positivity ({bad})")));
    }
    let aphi = op.apply(&phi)?;
    let residual = (0..grid.len())
        .filter(|&i| !grid.is_boundary(i))
        .map(|i| (aphi.values[i] - phi.values[i]).abs())
        .fold(0.0, f64::max);
    Ok(Eigenfunction {
        operator: a.clone(),
        values: phi,
        ball_radius: ball,
        residual,
    })
}

/// Growth of `∫_{|x|≤τ} φ^(p/(p−1))` against `τ^((n−1)(p−2)/(2(p−1))) e^(τp/(p−1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthBound {
    pub lhs: f64,
    pub rhs_shape: f64,
}

/// Evaluates the integral with the exterior form `φ_L` on the whole ball
/// (the exact eigenfunction of the flat operator).
pub fn growth_bound_check(p: f64, n: u32, tau: f64, r_a: f64) -> Result<GrowthBound> {
    use crate::quadrature::{integrate, Tolerance};
    if !(p > 1.0) {
        return domain(format!("p must exceed 1, got {p}"));
    }
    if !(tau >= r_a + 1.0) {
        return domain(format!("τ = {tau} lies below R_A + 1 = {}", r_a + 1.0));
    }
    let q = p / (p - 1.0);
    let nf = f64::from(n);
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-12,
        max_depth: 50,
    };
    let f = |r: f64| phi_l(n, r).map(|v| v.powf(q) * r.powf(nf - 1.0)).unwrap_or(f64::NAN);
    let mut lhs = 0.0;
    let mut lo = 0.0;
    while lo < tau {
        let hi = (lo + 1.0).min(tau);
        lhs += integrate(f, lo, hi, tol)?;
        lo = hi;
    }
    lhs *= sphere_area(n);
    let rhs_shape = tau.powf((nf - 1.0) / 2.0 * (p - 2.0) / (p - 1.0)) * (tau * q).exp();
    Ok(GrowthBound { lhs, rhs_shape })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn phi_l_closed_forms() {
        assert!((phi_l(3, 1.0).unwrap() - 4.0 * PI * 1f64.sinh()).abs() < 1e-12);
        assert!((phi_l(3, 0.0).unwrap() - 4.0 * PI).abs() < 1e-13);
        for &r in &[0.3, 0.999, 1.0, 1.001, 7.0] {
            let exact = 4.0 * PI * f64::sinh(r) / r;
            assert!((phi_l(3, r).unwrap() / exact - 1.0).abs() < 1e-13, "r={r}");
        }
        assert!((phi_l(1, 2.0).unwrap() - 2.0 * 2f64.cosh()).abs() < 1e-14);
        // n = 2: 2π I₀(r)
        assert!((phi_l(2, 0.0).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!((phi_l(4, 0.0).unwrap() - sphere_area(4)).abs() < 1e-13);
    }

    #[test]
    fn phi_l_asymptotics() {
        let r = 30.0;
        let ratio = phi_l(3, r).unwrap() / (2.0 * PI * r.exp() / r);
        assert!((ratio - 1.0).abs() < 0.02);
    }

    #[test]
    fn flat_eigenfunction_reproduces_phi_l() {
        let g = GridSpec::radial(3, 6.0, 601).unwrap();
        let op = EllipticOperator::flat(3, 1.0).unwrap();
        let e = eigenfunction(&op, &g).unwrap();
        let max_rel = (0..g.len())
            .map(|i| (e.values.values[i] / phi_l(3, g.radius(i)).unwrap() - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(max_rel < 1e-4, "{max_rel}");
    }

    #[test]
    fn scaled_exterior_constant() {
        let g = GridSpec::tensor(1, 6.0, 241).unwrap();
        let op = EllipticOperator::flat(1, 4.0).unwrap();
        let e = eigenfunction(&op, &g).unwrap();
        let mid = g.flat_index(&[120, 0, 0]);
        assert!((e.values.values[mid] - 2.0).abs() < 1e-3);
        assert!(e.residual < 1e-3 * e.values.max_abs());
    }

    #[test]
    fn grid_must_cover_ball() {
        let g = GridSpec::tensor(2, 2.5, 11).unwrap();
        let op = EllipticOperator::example1(2, 1.0, 2.0).unwrap();
        assert!(eigenfunction(&op, &g).is_err());
    }

    #[test]
    fn growth_bound_domain() {
        assert!(growth_bound_check(1.0, 3, 5.0, 1.0).is_err());
        assert!(growth_bound_check(2.0, 3, 1.5, 1.0).is_err());
        let g = growth_bound_check(2.0, 3, 5.0, 1.0).unwrap();
        assert_eq!(g.rhs_shape, (10.0f64).exp());
    }
}
