//! Divergence-form elliptic operators `A u = (1/a) ∂_k(a_kj ∂_j u)` and their
//! conservative finite-difference discretisation.
//!
//! Diagonal fluxes use coefficients at half points; mixed derivatives use the
//! symmetric pairing `½[D_k⁺(a_kj D_j⁻ u) + D_k⁻(a_kj D_j⁺ u)]`. Both pieces are
//! symmetric in the weighted inner product `Σ w a f g`, and the fluxes
//! telescope, so the discrete divergence theorem `Σ w a (A u) = 0` holds for
//! compactly supported `u`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::grid::{shell_volume, GridField, GridMode, GridSpec};

/// User-supplied coefficients for [`Preset::Custom`]. Only the leading
/// `dim × dim` block of the matrix is used.
pub trait Coefficients: Send + Sync {
    fn weight(&self, x: &[f64; 3]) -> f64;
    fn matrix(&self, x: &[f64; 3]) -> [[f64; 3]; 3];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Preset {
    FlatLaplacian,
    /// `a_xx = (x²+1)/β`, `a_yy = β/(x²+1)`, `a_zz = 1`.
    Example1 { beta: f64 },
    /// `a_xx = (e^(−x²)+1)/β`, `a_yy = β/(e^(−x²)+1)`, `a_zz = 1`.
    Example2 { beta: f64 },
    Custom,
}

#[derive(Clone)]
pub struct EllipticOperator {
    pub dim: usize,
    /// Exterior constant: `a_jk = c δ_jk` for `|x| ≥ R_A`.
    pub c: f64,
    pub r_a: f64,
    pub preset: Preset,
    custom: Option<Arc<dyn Coefficients>>,
}

impl fmt::Debug for EllipticOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EllipticOperator")
            .field("dim", &self.dim)
            .field("c", &self.c)
            .field("r_a", &self.r_a)
            .field("preset", &self.preset)
            .finish()
    }
}

/// `1` on `[0, r_a − 1]`, `0` beyond `r_a`, quintic smoothstep (C²) between.
fn cutoff(rho: f64, r_a: f64) -> f64 {
    let width = r_a.min(1.0);
    let s = ((rho - (r_a - width)) / width).clamp(0.0, 1.0);
    1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

fn check_dim(dim: usize) -> Result<()> {
    if !(1..=3).contains(&dim) {
        return domain(format!("operator dimension must be 1, 2 or 3, got {dim}"));
    }
    Ok(())
}

impl EllipticOperator {
    pub fn flat(dim: usize, c: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(c > 0.0) {
            return domain(format!("exterior constant c must be positive, got {c}"));
        }
        Ok(Self {
            dim,
            c,
            r_a: 1.0,
            preset: Preset::FlatLaplacian,
            custom: None,
        })
    }

    fn example(dim: usize, preset: Preset, beta: f64, r_a: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(beta > 0.0) || !(r_a > 0.0) {
            return domain("β and R_A must be positive");
        }
        Ok(Self {
            dim,
            c: 1.0,
            r_a,
            preset,
            custom: None,
        })
    }

    /// Example 1 inside `|x| ≤ R_A − 1`, blended to the Laplacian by `|x| = R_A`.
    pub fn example1(dim: usize, beta: f64, r_a: f64) -> Result<Self> {
        Self::example(dim, Preset::Example1 { beta }, beta, r_a)
    }

    /// Example 2 inside `|x| ≤ R_A − 1`, blended to the Laplacian by `|x| = R_A`.
    pub fn example2(dim: usize, beta: f64, r_a: f64) -> Result<Self> {
        Self::example(dim, Preset::Example2 { beta }, beta, r_a)
    }

    /// Arbitrary coefficients; checked against the operator class when discretised.
    pub fn custom(dim: usize, c: f64, r_a: f64, coeffs: Arc<dyn Coefficients>) -> Result<Self> {
        check_dim(dim)?;
        if !(c > 0.0) || !(r_a > 0.0) {
            return domain("c and R_A must be positive");
        }
        Ok(Self {
            dim,
            c,
            r_a,
            preset: Preset::Custom,
            custom: Some(coeffs),
        })
    }

    pub fn weight(&self, x: &[f64; 3]) -> f64 {
        match (&self.preset, &self.custom) {
            (Preset::Custom, Some(cf)) => cf.weight(x),
            _ => 1.0,
        }
    }

    /// Coefficient matrix; entries outside the leading `dim × dim` block are zero.
    pub fn matrix(&self, x: &[f64; 3]) -> [[f64; 3]; 3] {
        let d = self.dim;
        let mut m = [[0.0; 3]; 3];
        let inner: [f64; 3] = match self.preset {
            Preset::FlatLaplacian => [self.c; 3],
            Preset::Example1 { beta } => {
                let g = x[0] * x[0] + 1.0;
                [g / beta, beta / g, 1.0]
            }
            Preset::Example2 { beta } => {
                let g = (-x[0] * x[0]).exp() + 1.0;
                [g / beta, beta / g, 1.0]
            }
            Preset::Custom => {
                let full = self.custom.as_ref().expect("custom operator without coefficients").matrix(x);
                for j in 0..d {
                    for k in 0..d {
                        m[j][k] = full[j][k];
                    }
                }
                return m;
            }
        };
        if let Preset::FlatLaplacian = self.preset {
            for j in 0..d {
                m[j][j] = self.c;
            }
            return m;
        }
        let rho = (0..d).map(|j| x[j] * x[j]).sum::<f64>().sqrt();
        let chi = cutoff(rho, self.r_a);
        for j in 0..d {
            m[j][j] = chi * inner[j] + (1.0 - chi) * self.c;
        }
        m
    }

    /// Checks positivity, symmetry, ellipticity and exterior constancy on every node.
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        let d = self.dim;
        for idx in 0..grid.len() {
            let x = grid.coords(idx);
            let a = self.weight(&x);
            if !(a > 0.0) || !a.is_finite() {
                return domain(format!("weight a(x) = {a} is not positive at {x:?}"));
            }
            let m = self.matrix(&x);
            for j in 0..d {
                for k in 0..j {
                    if (m[j][k] - m[k][j]).abs() > 1e-14 * (m[j][k].abs() + m[k][j].abs()) {
                        return domain(format!("coefficient matrix not symmetric at {x:?}"));
                    }
                }
            }
            let (lo, _) = eig_range(&m, d);
            if !(lo > 0.0) {
                return domain(format!("coefficient matrix not positive definite at {x:?}"));
            }
            if grid.radius(idx) >= self.r_a {
                let flat = (a - 1.0).abs() < 1e-12
                    && (0..d).all(|j| (0..d).all(|k| {
                        let target = if j == k { self.c } else { 0.0 };
                        (m[j][k] - target).abs() < 1e-12 * self.c
                    }));
                if !flat {
                    return domain(format!("coefficients are not constant outside R_A at {x:?}"));
                }
            }
        }
        Ok(())
    }

    /// Binds the operator to a grid, precomputing stencil coefficients.
    pub fn discretize(&self, grid: &GridSpec) -> Result<DiscreteOperator> {
        match grid.mode {
            GridMode::Radial(n) => {
                if self.preset != Preset::FlatLaplacian {
                    return domain("radial grids support only the flat Laplacian");
                }
                let h = grid.spacing;
                let nm1 = f64::from(n) - 1.0;
                let mut plus = vec![0.0; grid.points];
                let mut minus = vec![0.0; grid.points];
                // finite-volume form: flux through r_{i±1/2} over the shell volume
                for i in 0..grid.points - 1 {
                    let lo = if i == 0 { 0.0 } else { (i as f64 - 0.5) * h };
                    let hi = (i as f64 + 0.5) * h;
                    let vol = shell_volume(n, lo, hi) * h;
                    plus[i] = self.c * hi.powf(nm1) / vol;
                    if i > 0 {
                        minus[i] = self.c * lo.powf(nm1) / vol;
                    }
                }
                Ok(DiscreteOperator {
                    spec: *grid,
                    weight: vec![1.0; grid.len()],
                    kind: Kind::Radial { plus, minus },
                })
            }
            GridMode::Tensor(d) => {
                if d != self.dim {
                    return Err(Error::GridMismatch(format!(
                        "operator dimension {} on a {d}-dimensional grid",
                        self.dim
                    )));
                }
                if self.preset == Preset::Custom {
                    self.validate(grid)?;
                }
                let h = grid.spacing;
                let len = grid.len();
                let mut weight = Vec::with_capacity(len);
                let mut half = Vec::with_capacity(len);
                let mut offdiag = Vec::with_capacity(len);
                let mut has_off = false;
                for idx in 0..len {
                    let x = grid.coords(idx);
                    weight.push(self.weight(&x));
                    let mut hv = [0.0; 3];
                    for (k, slot) in hv.iter_mut().enumerate().take(d) {
                        let mut xm = x;
                        xm[k] += 0.5 * h;
                        *slot = self.matrix(&xm)[k][k];
                    }
                    half.push(hv);
                    let m = self.matrix(&x);
                    let o = [m[0][1], m[0][2], m[1][2]];
                    has_off |= o.iter().any(|v| *v != 0.0);
                    offdiag.push(o);
                }
                Ok(DiscreteOperator {
                    spec: *grid,
                    weight,
                    kind: Kind::Tensor {
                        half,
                        offdiag: if has_off { Some(offdiag) } else { None },
                    },
                })
            }
        }
    }
}

/// Smallest and largest eigenvalue of the leading `d × d` block (cyclic Jacobi).
pub fn eig_range(m: &[[f64; 3]; 3], d: usize) -> (f64, f64) {
    let mut a = *m;
    for _ in 0..50 {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..d).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| (lo.min(a[i][i]), hi.max(a[i][i])))
}

enum Kind {
    Radial { plus: Vec<f64>, minus: Vec<f64> },
    Tensor { half: Vec<[f64; 3]>, offdiag: Option<Vec<[f64; 3]>> },
}

/// An operator bound to a grid. Rows on boundary nodes are zero
/// (homogeneous Dirichlet closure).
pub struct DiscreteOperator {
    spec: GridSpec,
    weight: Vec<f64>,
    kind: Kind,
}

fn off_index(k: usize, j: usize) -> usize {
    match (k.min(j), k.max(j)) {
        (0, 1) => 0,
        (0, 2) => 1,
        _ => 2,
    }
}

impl DiscreteOperator {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Nodal weight `a(x_i)`.
    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    /// Emits the nonzero entries `(j, A_ij)` of row `i`.
    #[inline]
    pub fn stencil<F: FnMut(usize, f64)>(&self, i: usize, mut emit: F) {
        if self.spec.is_boundary(i) {
            return;
        }
        match &self.kind {
            Kind::Radial { plus, minus } => {
                if i == 0 {
                    emit(0, -plus[0]);
                    emit(1, plus[0]);
                } else {
                    emit(i - 1, minus[i]);
                    emit(i, -plus[i] - minus[i]);
                    emit(i + 1, plus[i]);
                }
            }
            Kind::Tensor { half, offdiag } => {
                let d = self.spec.dim();
                let h2 = self.spec.spacing * self.spec.spacing;
                let inv_a = 1.0 / self.weight[i];
                let mut centre = 0.0;
                for k in 0..d {
                    let s = self.spec.stride(k);
                    let cp = half[i][k] / h2 * inv_a;
                    let cm = half[i - s][k] / h2 * inv_a;
                    emit(i + s, cp);
                    emit(i - s, cm);
                    centre -= cp + cm;
                }
                emit(i, centre);
                if let Some(off) = offdiag {
                    let f = 0.5 / h2 * inv_a;
                    for k in 0..d {
                        for j in 0..d {
                            if j == k {
                                continue;
                            }
                            let o = off_index(k, j);
                            let (sk, sj) = (self.spec.stride(k), self.spec.stride(j));
                            let bp = off[i + sk][o] * f;
                            let b0 = off[i][o] * f;
                            let bm = off[i - sk][o] * f;
                            // D_k⁺(b D_j⁻ u)
                            emit(i + sk, bp);
                            emit(i + sk - sj, -bp);
                            emit(i, -b0);
                            emit(i - sj, b0);
                            // D_k⁻(b D_j⁺ u)
                            emit(i + sj, b0);
                            emit(i, -b0);
                            emit(i - sk + sj, -bm);
                            emit(i - sk, bm);
                        }
                    }
                }
            }
        }
    }

    /// `out = A u` on raw value slices.
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            self.stencil(i, |j, c| acc += c * u[j]);
            *o = acc;
        }
    }

    pub fn apply(&self, u: &GridField) -> Result<GridField> {
        if u.spec != self.spec {
            return Err(Error::GridMismatch("field and operator live on different grids".into()));
        }
        let mut out = GridField::zeros(self.spec);
        self.apply_into(&u.values, &mut out.values);
        Ok(out)
    }

    /// Quadrature weights multiplied by `a(x)`.
    pub fn inner_weights(&self) -> Vec<f64> {
        self.spec.weights().iter().zip(&self.weight).map(|(w, a)| w * a).collect()
    }

    /// `⟨f, g⟩_a = Σ w a f g`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.inner_weights().iter().zip(f.iter().zip(g)).map(|(w, (a, b))| w * a * b).sum()
    }
}

/// `A u` for a field, discretising on the field's grid.
pub fn apply(a: &EllipticOperator, u: &GridField) -> Result<GridField> {
    a.discretize(&u.spec)?.apply(u)
}

/// Propagation-speed bounds on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedBound {
    /// `max_x max_|ξ|=1 a_jk ξ_j ξ_k / a`.
    pub defined_value: f64,
    /// `√defined_value`, the characteristic speed of the principal symbol.
    pub speed_value: f64,
}

impl SpeedBound {
    /// The larger of the two, used for light-cone radii.
    pub fn conservative(&self) -> f64 {
        self.defined_value.max(self.speed_value)
    }
}

pub fn s_a(a: &EllipticOperator, grid: &GridSpec) -> SpeedBound {
    let defined_value = match grid.mode {
        GridMode::Radial(_) => a.c,
        GridMode::Tensor(_) => (0..grid.len())
            .map(|idx| {
                let x = grid.coords(idx);
                eig_range(&a.matrix(&x), a.dim).1 / a.weight(&x)
            })
            .fold(0.0, f64::max),
    };
    SpeedBound {
        defined_value,
        speed_value: defined_value.sqrt(),
    }
}

/// `|⟨Au, v⟩_a − ⟨u, Av⟩_a|`.
pub fn self_adjointness_defect(a: &EllipticOperator, u: &GridField, v: &GridField) -> Result<f64> {
    u.check_same_grid(v)?;
    let op = a.discretize(&u.spec)?;
    let au = op.apply(u)?;
    let av = op.apply(v)?;
    Ok((op.inner(&au.values, &v.values) - op.inner(&u.values, &av.values)).abs())
}

/// Three time levels `f(t − δ), f(t), f(t + δ)` of a field.
#[derive(Debug, Clone, Copy)]
pub struct TimeLevels<'a> {
    pub prev: &'a GridField,
    pub now: &'a GridField,
    pub next: &'a GridField,
}

impl TimeLevels<'_> {
    fn check(&self) -> Result<()> {
        self.now.check_same_grid(self.prev)?;
        self.now.check_same_grid(self.next)
    }
}

fn check_levels(t: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0 && t - dt > 0.0) {
        return domain(format!("need 0 < δ < t, got t = {t}, δ = {dt}"));
    }
    Ok(())
}

/// Centred discretisation of `S u = u_tt − t^(−2k) A u` at time `t`.
pub fn apply_s(a: &EllipticOperator, k: f64, u: TimeLevels<'_>, t: f64, dt: f64) -> Result<GridField> {
    u.check()?;
    check_levels(t, dt)?;
    let au = apply(a, u.now)?;
    let speed = t.powf(-2.0 * k);
    let values = (0..au.values.len())
        .map(|i| (u.next.values[i] - 2.0 * u.now.values[i] + u.prev.values[i]) / (dt * dt) - speed * au.values[i])
        .collect();
    GridField::from_values(au.spec, values)
}

/// Centred discretisation of `L ψ = ψ_tt − t^(−2k) A ψ + 2t^(−1) ψ_t` at time `t`.
pub fn apply_l(a: &EllipticOperator, k: f64, psi: TimeLevels<'_>, t: f64, dt: f64) -> Result<GridField> {
    psi.check()?;
    check_levels(t, dt)?;
    let ap = apply(a, psi.now)?;
    let speed = t.powf(-2.0 * k);
    let values = (0..ap.values.len())
        .map(|i| {
            let (m, c, p) = (psi.prev.values[i], psi.now.values[i], psi.next.values[i]);
            (p - 2.0 * c + m) / (dt * dt) - speed * ap.values[i] + (p - m) / (t * dt)
        })
        .collect();
    GridField::from_values(ap.spec, values)
}

/// `max|L_h ψ − t^(−1) S_h(tψ)|` relative to `max|L_h ψ|`.
pub fn liouville_identity_residual(a: &EllipticOperator, k: f64, psi: TimeLevels<'_>, t: f64, dt: f64) -> Result<f64> {
    let lhs = apply_l(a, k, psi, t, dt)?;
    let (um, u0, up) = (psi.prev.scaled(t - dt), psi.now.scaled(t), psi.next.scaled(t + dt));
    let su = apply_s(
        a,
        k,
        TimeLevels {
            prev: &um,
            now: &u0,
            next: &up,
        },
        t,
        dt,
    )?;
    let diff = lhs
        .values
        .iter()
        .zip(&su.values)
        .map(|(l, s)| (l - s / t).abs())
        .fold(0.0, f64::max);
    Ok(diff / lhs.max_abs().max(f64::MIN_POSITIVE))
}
