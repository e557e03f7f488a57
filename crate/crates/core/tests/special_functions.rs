use std::f64::consts::PI;

use edes_lab::grid::GridSpec;
use edes_lab::operators::EllipticOperator;
use edes_lab::special::oracle::{
    bessel_check_grid, bessel_i_scaled_quad, bessel_k_scaled_quad, gamma_check_grid, incomplete_gamma_upper_quad,
};
use edes_lab::special::{
    bessel_i_scaled, bessel_k, bessel_k_scaled, eigenfunction, growth_bound_check, incomplete_gamma_upper, lambda1,
    lambda_tilde, phi_l, weighted_integral_bound_check,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn bessel_k_agrees_with_quadrature_on_grid() {
    let mut worst = (0.0, 0.0, 0.0);
    for (nu, z) in bessel_check_grid() {
        let e = rel(bessel_k_scaled(nu, z).unwrap(), bessel_k_scaled_quad(nu, z).unwrap());
        if e > worst.0 {
            worst = (e, nu, z);
        }
    }
    assert!(worst.0 < 1e-9, "worst {worst:?}");
}

#[test]
fn bessel_i_agrees_with_quadrature_on_grid() {
    let mut worst = (0.0, 0.0, 0.0);
    for (nu, z) in bessel_check_grid() {
        let e = rel(bessel_i_scaled(nu, z).unwrap(), bessel_i_scaled_quad(nu, z).unwrap());
        if e > worst.0 {
            worst = (e, nu, z);
        }
    }
    assert!(worst.0 < 1e-9, "worst {worst:?}");
}

#[test]
fn incomplete_gamma_agrees_with_quadrature_on_grid() {
    let mut worst = (0.0, 0.0, 0.0);
    for (a, z) in gamma_check_grid() {
        let e = rel(incomplete_gamma_upper(a, z).unwrap(), incomplete_gamma_upper_quad(a, z).unwrap());
        if e > worst.0 {
            worst = (e, a, z);
        }
    }
    assert!(worst.0 < 1e-9, "worst {worst:?}");
}

#[test]
fn k_half_and_leading_asymptotic() {
    let exact = (PI / 2.0).sqrt() * (-1.0f64).exp();
    assert!((bessel_k(0.5, 1.0).unwrap() - exact).abs() < 1e-10);
    assert!((bessel_k(0.5, 1.0).unwrap() - 0.461_069).abs() < 1e-6);
    let z = 10.0;
    let lead = bessel_k(1.0 / 3.0, z).unwrap() * (2.0 * z / PI).sqrt() * z.exp();
    assert!((lead - 1.0).abs() < 1e-2);
    let quad = bessel_k_scaled_quad(1.0 / 3.0, z).unwrap() * (2.0 * z / PI).sqrt();
    assert!(rel(lead, quad) < 1e-12);
    assert_eq!(bessel_k(-0.3, 2.0).unwrap(), bessel_k(0.3, 2.0).unwrap());
}

#[test]
fn incomplete_gamma_examples() {
    assert!(rel(incomplete_gamma_upper(1.0, 2.0).unwrap(), (-2.0f64).exp()) < 1e-14);
    assert!((incomplete_gamma_upper(2.0, 1e-12).unwrap() - 1.0).abs() < 1e-11);
    let z: f64 = 5.0;
    let scaled = incomplete_gamma_upper(-2.0, z).unwrap() * z.powi(3) * z.exp();
    assert!((scaled - 1.0).abs() < 5e-1);
    assert!((scaled - 0.651_39).abs() < 1e-5);
    // Γ(a,z) z^(1−a) e^z ~ 1 + (a−1)/z + (a−1)(a−2)/z²: successive truncations bracket it
    let (one, two, three) = (1.0, 1.0 - 3.0 / z, 1.0 - 3.0 / z + 12.0 / (z * z));
    assert!(two < scaled && scaled < one && scaled < three);
    let z: f64 = 50.0;
    let scaled = incomplete_gamma_upper(-2.0, z).unwrap() * z.powi(3) * z.exp();
    assert!((scaled - (1.0 - 3.0 / z)).abs() < 1e-2);
}

#[test]
fn lambda1_reference_values() {
    assert!((lambda1(0.0).unwrap() - 1.0).abs() < 1e-14);
    let k0 = bessel_k_scaled_quad(0.0, 2.0).unwrap();
    let k1 = bessel_k_scaled_quad(1.0, 2.0).unwrap();
    assert!((lambda1(0.5).unwrap() - k0 / k1).abs() < 1e-12);
    assert!((lambda1(0.5).unwrap() - 0.814_307_758_8).abs() < 1e-9);
    let min = (0..20)
        .map(|j| lambda1(0.05 * j as f64).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!(min > 0.5, "{min}");
}

#[test]
fn lambda_tilde_solves_its_equation() {
    for &k in &[0.0, 0.25, 0.5, 2.0 / 3.0, 0.9] {
        let mut worst = 0.0f64;
        for i in 0..=98 {
            let t = 1.1 + 0.5 * i as f64;
            let f = |s: f64| lambda_tilde(k, s).unwrap();
            let h = 0.01 * t.powf(k);
            let d2 = |h: f64| (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
            let rich = (4.0 * d2(h / 2.0) - d2(h)) / 3.0;
            let scale = t.powf(-2.0 * k) * f(t);
            worst = worst.max((rich - scale).abs() / scale);
        }
        assert!(worst < 1e-7, "k={k}: {worst}");
    }
}

#[test]
fn phi_l_is_increasing() {
    for n in 2..=4 {
        let mut prev = phi_l(n, 0.0).unwrap();
        for i in 1..=400 {
            let v = phi_l(n, 0.05 * i as f64).unwrap();
            assert!(v > prev, "n={n} r={}", 0.05 * i as f64);
            prev = v;
        }
    }
}

#[test]
fn phi_l_matches_sphere_quadrature() {
    // ∫_{S²} e^(r cos θ) dω = 2π ∫₀^π e^(r cos θ) sin θ dθ
    let r: f64 = 1.0;
    let m = 20_000;
    let h = PI / m as f64;
    let simpson: f64 = (0..=m)
        .map(|j| {
            let th = j as f64 * h;
            let w = if j == 0 || j == m { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
            w * (r * th.cos()).exp() * th.sin()
        })
        .sum::<f64>()
        * h
        / 3.0;
    let quad = 2.0 * PI * simpson;
    assert!(rel(phi_l(3, r).unwrap(), quad) < 1e-12);
    assert!((phi_l(3, 1.0).unwrap() - 14.7680).abs() < 1e-4);
}

#[test]
fn eigenfunction_converges_for_example_one() {
    let op = EllipticOperator::example1(2, 1.0, 2.0).unwrap();
    let sizes = [41, 81, 161];
    let fields: Vec<_> = sizes
        .iter()
        .map(|&n| eigenfunction(&op, &GridSpec::tensor(2, 4.0, n).unwrap()).unwrap())
        .collect();
    for e in &fields {
        assert!(e.values.values.iter().all(|v| *v > 0.0));
        assert!(e.residual < 1e-8 * e.values.max_abs());
    }
    // compare on the coarse nodes against the next finer grid
    let coarse_err = |c: usize, f: usize| -> f64 {
        let (gc, gf) = (fields[c].values.spec, fields[f].values.spec);
        let ratio = (gf.points - 1) / (gc.points - 1);
        (0..gc.len())
            .map(|i| {
                let m = gc.multi_index(i);
                let j = gf.flat_index(&[m[0] * ratio, m[1] * ratio, 0]);
                (fields[c].values.values[i] - fields[f].values.values[j]).abs()
            })
            .fold(0.0, f64::max)
    };
    let e0 = coarse_err(0, 2);
    let e1 = coarse_err(1, 2);
    // against the finest grid: e(h) ∝ h² − h_f² so e0/e1 = (16−1)/(4−1) = 5 for order 2
    let order = ((e0 / e1) * 3.0 / 15.0 * 4.0).log2();
    assert!(order >= 1.9, "order {order} ({e0}, {e1})");
}

#[test]
fn growth_bound_ratio_is_bounded() {
    let ratios: Vec<f64> = [5.0, 10.0, 15.0]
        .iter()
        .map(|&tau| {
            let g = growth_bound_check(2.0, 3, tau, 1.0).unwrap();
            g.lhs / g.rhs_shape
        })
        .collect();
    // φ = 4π sinh r / r: the ratio is 64π³ ∫₀^τ sinh² r dr / e^(2τ), which rises to 8π³
    let limit = 8.0 * PI.powi(3);
    let exact = |tau: f64| 64.0 * PI.powi(3) * ((2.0 * tau).sinh() / 4.0 - tau / 2.0) / (2.0 * tau).exp();
    for (r, tau) in ratios.iter().zip([5.0, 10.0, 15.0]) {
        assert!((r - exact(tau)).abs() < 1e-10 * limit, "τ={tau}: {r}");
        assert!(*r <= 1.001 * ratios[0]);
    }
    assert!((ratios[0] - 247.824_983_685_772).abs() < 1e-8);
    assert!((ratios[2] - limit).abs() < 1e-8);
    let g = growth_bound_check(3.0, 3, 10.0, 1.0).unwrap();
    assert!(g.lhs.is_finite() && g.lhs > 0.0);
    assert!(growth_bound_check(2.0, 3, 1.5, 1.0).is_err());
}

#[test]
fn weighted_bound_at_thirty() {
    let b = weighted_integral_bound_check(0.5, 30.0, 2.0).unwrap();
    assert!(b.lhs >= b.rhs && (b.rhs - 30f64.sqrt() / 32.0).abs() < 1e-15);
}
