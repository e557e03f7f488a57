use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use edes_lab::grid::{GridField, GridSpec};
use edes_lab::operators::{apply, s_a, self_adjointness_defect, EllipticOperator};

fn random_bump(g: GridSpec, rng: &mut StdRng) -> GridField {
    let centre = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let radius = rng.gen_range(1.0..2.5);
    let amp = rng.gen_range(-2.0..2.0);
    GridField::from_fn(g, move |x| {
        let s = ((x[0] - centre[0]).powi(2) + (x[1] - centre[1]).powi(2)) / (radius * radius);
        if s < 1.0 {
            amp * (1.0 - s).powi(4)
        } else {
            0.0
        }
    })
}

#[test]
fn seeded_bumps_are_self_adjoint() {
    let g = GridSpec::tensor(2, 4.0, 61).unwrap();
    let mut rng = StdRng::seed_from_u64(7);
    for op in [
        EllipticOperator::example1(2, 1.5, 3.0).unwrap(),
        EllipticOperator::example2(2, 0.7, 3.0).unwrap(),
    ] {
        let d = op.discretize(&g).unwrap();
        for _ in 0..20 {
            let (u, v) = (random_bump(g, &mut rng), random_bump(g, &mut rng));
            let au = d.apply(&u).unwrap();
            let scale = d.inner(&au.values, &au.values).sqrt() * d.inner(&v.values, &v.values).sqrt();
            assert!(self_adjointness_defect(&op, &u, &v).unwrap() <= 1e-13 * scale);
        }
    }
}

#[test]
fn example2_matches_expanded_form() {
    let beta = 1.7;
    let op = EllipticOperator::example2(2, beta, 20.0).unwrap();
    let mut errs = Vec::new();
    for pts in [41, 81, 161] {
        let g = GridSpec::tensor(2, 2.0, pts).unwrap();
        let u = GridField::from_fn(g, |x| x[0].sin() * (0.5 * x[1]).cos());
        let au = apply(&op, &u).unwrap();
        let mut err = 0.0f64;
        for i in (0..g.len()).filter(|&i| !g.is_boundary(i)) {
            let [x, y, _] = g.coords(i);
            let e = (-x * x).exp();
            let gx = e + 1.0;
            let exact = (gx / beta) * (-x.sin() * (0.5 * y).cos()) + (-2.0 * x * e / beta) * x.cos() * (0.5 * y).cos()
                + (beta / gx) * (-0.25 * x.sin() * (0.5 * y).cos());
            err = err.max((au.values[i] - exact).abs());
        }
        errs.push(err);
    }
    let orders = [(errs[0] / errs[1]).log2(), (errs[1] / errs[2]).log2()];
    assert!(orders.iter().all(|o| *o > 1.9), "{errs:?}");
}

#[test]
fn exterior_agrees_with_flat_laplacian() {
    let g = GridSpec::tensor(2, 5.0, 101).unwrap();
    let mut rng = StdRng::seed_from_u64(11);
    let u = GridField::from_fn(g, |x| (0.3 * x[0]).sin() + (0.2 * x[1]).cos());
    let noise: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let u = u.axpy(1.0, &GridField::from_values(g, noise).unwrap()).unwrap();
    let r_a = 2.5;
    for op in [
        EllipticOperator::example1(2, 2.0, r_a).unwrap(),
        EllipticOperator::example2(2, 0.5, r_a).unwrap(),
    ] {
        let a = apply(&op, &u).unwrap();
        let f = apply(&EllipticOperator::flat(2, 1.0).unwrap(), &u).unwrap();
        let mut compared = 0;
        for i in 0..g.len() {
            if g.radius(i) > r_a + 2.0 * g.spacing {
                compared += 1;
                assert!((a.values[i] - f.values[i]).abs() <= 1e-12 * f.values[i].abs().max(1.0));
            }
        }
        assert!(compared > g.len() / 2);
    }
}

#[test]
fn speed_of_example1_by_brute_force() {
    // β = 1, R_A = 3 on [−2, 2]²: max over nodes of the largest eigenvalue of diag((x²+1), 1/(x²+1))
    let g = GridSpec::tensor(2, 2.0, 81).unwrap();
    let op = EllipticOperator::example1(2, 1.0, 3.0).unwrap();
    let mut brute = 0.0f64;
    for i in 0..g.len() {
        let m = op.matrix(&g.coords(i));
        for j in 0..64 {
            let th = std::f64::consts::PI * j as f64 / 64.0;
            let (c, s) = (th.cos(), th.sin());
            brute = brute.max(m[0][0] * c * c + 2.0 * m[0][1] * c * s + m[1][1] * s * s);
        }
    }
    let sa = s_a(&op, &g);
    assert!((sa.defined_value - brute).abs() < 1e-12);
    assert!((sa.defined_value - 5.0).abs() < 1e-12);
    assert!((sa.speed_value - 5f64.sqrt()).abs() < 1e-12);
}
