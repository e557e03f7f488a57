//! Modified Bessel functions `I_ν` and `K_ν` of real order and positive
//! argument.
//!
//! The order is split as `ν = μ + l` with `|μ| ≤ 1/2`. `K_μ, K_{μ+1}` come
//! from Temme's series for `x < 2` and Steed's continued fraction (CF2)
//! otherwise, and are recurred upward to `ν`. `I_ν` follows from the ratio
//! `I'_ν / I_ν` (CF1) and the Wronskian. Everything is carried exponentially
//! scaled so that arguments up to several hundred stay representable.

use std::f64::consts::PI;

use super::gamma::temme_gammas;
use crate::error::{domain, Error, Result};

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const MAX_ITER: usize = 100_000;
const TEMME_LIMIT: f64 = 2.0;

/// Exponentially scaled values `(e^(−x) I_ν, e^(x) K_ν, e^(−x) I'_ν, e^(x) K'_ν)`
/// for `ν ≥ 0`, `x > 0`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledIK {
    pub i: f64,
    pub k: f64,
    pub ip: f64,
    pub kp: f64,
}

/// Returns `(e^x K_μ, e^x K_{μ+1})` for `|μ| ≤ 1/2`.
fn k_pair_scaled(mu: f64, x: f64) -> Result<(f64, f64)> {
    let xi = 1.0 / x;
    if x < TEMME_LIMIT {
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        let mu2 = mu * mu;
        for i in 1..MAX_ITER {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu2);
            c *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if del.abs() < sum.abs() * EPS {
                let scale = x.exp();
                return Ok((sum * scale, sum1 * 2.0 * xi * scale));
            }
        }
        Err(Error::Convergence(format!("Temme series for K_{mu}({x})")))
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut h = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu * mu;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..MAX_ITER {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                let h = a1 * h;
                let kmu = (PI / (2.0 * x)).sqrt() / s;
                let k1 = kmu * (mu + x + 0.5 - h) * xi;
                return Ok((kmu, k1));
            }
        }
        Err(Error::Convergence(format!("Steed CF2 for K_{mu}({x})")))
    }
}

/// `I'_ν / I_ν` by the modified Lentz evaluation of CF1.
fn i_ratio(nu: f64, x: f64) -> Result<f64> {
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let mut h = (nu * xi).max(FPMIN);
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    for _ in 0..MAX_ITER {
        b += xi2;
        d = 1.0 / (b + d);
        c = b + 1.0 / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(Error::Convergence(format!("CF1 for I_{nu}({x})")))
}

/// Scaled `I_ν, K_ν` and derivatives for `ν ≥ 0`, `x > 0`.
pub fn bessel_ik_scaled(nu: f64, x: f64) -> Result<ScaledIK> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("Bessel functions require z > 0, got {x}"));
    }
    if !(nu >= 0.0) {
        return domain(format!("order must be non-negative here, got {nu}"));
    }
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;

    // downward recurrence of an unnormalised I from ν to μ
    let h = i_ratio(nu, x)?;
    let mut ril = FPMIN;
    let mut ripl = h * ril;
    let ril1 = ril;
    let rip1 = ripl;
    let mut fact = nu * xi;
    for _ in 0..nl as usize {
        let ritemp = fact * ril + ripl;
        fact -= xi;
        ripl = fact * ritemp + ril;
        ril = ritemp;
    }
    let f = ripl / ril;

    let (mut kmu, mut k1) = k_pair_scaled(mu, x)?;
    let kmup = mu * xi * kmu - k1;
    let imu = xi / (f * kmu - kmup);
    let i = imu * ril1 / ril;
    let ip = imu * rip1 / ril;
    for l in 1..=nl as usize {
        let ktemp = (mu + l as f64) * xi2 * k1 + kmu;
        kmu = k1;
        k1 = ktemp;
    }
    let kp = nu * xi * kmu - k1;
    Ok(ScaledIK { i, k: kmu, ip, kp })
}

/// `e^z K_ν(z)` for any real order.
pub fn bessel_k_scaled(nu: f64, z: f64) -> Result<f64> {
    Ok(bessel_ik_scaled(nu.abs(), z)?.k)
}

/// `K_ν(z)`, underflowing to zero for very large `z`.
pub fn bessel_k(nu: f64, z: f64) -> Result<f64> {
    let s = bessel_k_scaled(nu, z)?;
    Ok(s * (-z).exp())
}

/// `e^(−z) I_ν(z)` for any real order (`I_{−ν} = I_ν + (2/π) sin(νπ) K_ν`).
pub fn bessel_i_scaled(nu: f64, z: f64) -> Result<f64> {
    let r = bessel_ik_scaled(nu.abs(), z)?;
    if nu >= 0.0 {
        Ok(r.i)
    } else {
        let m = nu.abs();
        Ok(r.i + 2.0 / PI * (PI * m).sin() * r.k * (-2.0 * z).exp())
    }
}

/// `I_ν(z)`, overflowing to infinity for very large `z`.
pub fn bessel_i(nu: f64, z: f64) -> Result<f64> {
    Ok(bessel_i_scaled(nu, z)? * z.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_order_closed_forms() {
        for &z in &[0.01, 0.5, 1.0, 1.99, 2.0, 7.5, 40.0, 300.0] {
            let k = bessel_k_scaled(0.5, z).unwrap();
            let exact = (PI / (2.0 * z)).sqrt();
            assert!((k / exact - 1.0).abs() < 1e-13, "K_1/2({z})");
            let i = bessel_i_scaled(0.5, z).unwrap();
            let exact = (2.0 / (PI * z)).sqrt() * 0.5 * (1.0 - (-2.0 * z).exp());
            assert!((i / exact - 1.0).abs() < 1e-12, "I_1/2({z})");
            let k32 = bessel_k_scaled(1.5, z).unwrap();
            let exact = (PI / (2.0 * z)).sqrt() * (1.0 + 1.0 / z);
            assert!((k32 / exact - 1.0).abs() < 1e-13, "K_3/2({z})");
        }
    }

    #[test]
    fn k_half_at_one() {
        let v = bessel_k(0.5, 1.0).unwrap();
        assert!((v - (PI / 2.0).sqrt() * (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.461_069).abs() < 1e-6);
    }

    #[test]
    fn integer_orders_reference() {
        // Abramowitz & Stegun table values
        assert!((bessel_k(0.0, 1.0).unwrap() - 0.421_024_438_240_708_3).abs() < 1e-15);
        assert!((bessel_k(1.0, 1.0).unwrap() - 0.601_907_230_197_234_6).abs() < 1e-15);
        assert!((bessel_i(0.0, 1.0).unwrap() - 1.266_065_877_752_008_4).abs() < 1e-14);
        assert!((bessel_i(1.0, 1.0).unwrap() - 0.565_159_103_992_485_1).abs() < 1e-14);
        assert!((bessel_k(0.0, 2.0).unwrap() - 0.113_893_872_749_533_4).abs() < 1e-15);
        assert!((bessel_k(1.0, 2.0).unwrap() - 0.139_865_881_816_522_4).abs() < 1e-15);
    }

    #[test]
    fn even_in_order() {
        let a = bessel_k(0.3, 2.0).unwrap();
        let b = bessel_k(-0.3, 2.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn negative_half_order_i() {
        let z = 1.3;
        let i = bessel_i(-0.5, z).unwrap();
        assert!((i - (2.0 / (PI * z)).sqrt() * z.cosh()).abs() < 1e-14);
    }

    #[test]
    fn wronskian() {
        for &(nu, z) in &[(0.2, 0.3), (1.7, 2.5), (2.0, 50.0), (0.9, 600.0)] {
            let r = bessel_ik_scaled(nu, z).unwrap();
            let w = r.i * r.kp - r.ip * r.k;
            assert!((w * z + 1.0).abs() < 1e-12, "nu={nu} z={z}");
        }
    }

    #[test]
    fn rejects_nonpositive_argument() {
        assert!(bessel_k(1.0, 0.0).is_err());
        assert!(bessel_k(1.0, -2.0).is_err());
    }

    #[test]
    fn large_argument_underflows() {
        assert_eq!(bessel_k(1.0, 800.0).unwrap(), 0.0);
        assert!(bessel_k_scaled(1.0, 800.0).unwrap() > 0.0);
    }
}
