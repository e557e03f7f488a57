//! Time integration of `u_tt − t^(−2k) A u = c·t^(1−p) N(u)` for `u = tψ`.
//!
//! The integrator works in the characteristic time `τ = t^(1−k)/(1−k)`. With
//! `v = u_t` the system reads `du/dτ = t^k v`, `dv/dτ = t^k (t^(−2k) A u + S)`.
//! A kick–drift–kick splitting is used: kicks hold `t` fixed, and the drift
//! `u += v ∫ t^k dτ = v (t_{n+1} − t_n)` is exact. The scheme is symmetric,
//! second order, and its stability limit `Δτ ≲ h/√(c d)` does not depend on
//! `t`, so the degeneracy at `t → 0` costs nothing.
//!
//! Eliminating `v` gives the second-order form in `τ`:
//! `u_ττ − (k/((1−k)τ)) u_τ = A u + t^(2k) S`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exponents::EDS_K;
use crate::functionals::{fit_blowup_time, FunctionalTrace, Sample};
use crate::grid::{GridField, GridMode, GridSpec};
use crate::operators::{s_a, DiscreteOperator, EllipticOperator};
use crate::special::testfn::{characteristic_time, lambda_eds, lambda_tilde, time_from_characteristic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Nonlinearity {
    /// `|u|^p`
    AbsPow,
    /// `|u|^(p−1) u`
    SignedPow,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Start {
    /// Weighted data at `t = 0⁺`, started from the asymptotic expansion at `t = ε`.
    SingularAtZero { eps: f64 },
    /// Cauchy data at `t = 1`.
    CauchyAtOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub n: u32,
    pub k: f64,
    pub p: f64,
    pub nonlinearity: Nonlinearity,
    #[serde(default = "one")]
    pub coupling: f64,
    pub horizon: f64,
    pub start: Start,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Max-norm threshold for blow-up; `1e8·(max|u₀| + 1)` when absent.
    #[serde(default)]
    pub blowup_cap: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn default_cfl() -> f64 {
    0.5
}

impl ModelParams {
    pub fn new(n: u32, k: f64, p: f64, nonlinearity: Nonlinearity, horizon: f64, start: Start) -> Self {
        Self {
            n,
            k,
            p,
            nonlinearity,
            coupling: 1.0,
            horizon,
            start,
            cfl: default_cfl(),
            blowup_cap: None,
        }
    }

    pub fn initial_time(&self) -> f64 {
        match self.start {
            Start::SingularAtZero { eps } => eps,
            Start::CauchyAtOne => 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return domain("n must be at least 1");
        }
        if !(0.0..1.0).contains(&self.k) {
            return domain(format!("k = {} must lie in [0, 1)", self.k));
        }
        if self.nonlinearity != Nonlinearity::None && !(self.p > 1.0) {
            return domain(format!("p = {} must exceed 1", self.p));
        }
        if !self.coupling.is_finite() {
            return domain("coupling must be finite");
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return domain(format!("CFL number {} must lie in (0, 1]", self.cfl));
        }
        if let Start::SingularAtZero { eps } = self.start {
            if !(eps > 0.0 && eps <= 0.1) {
                return domain(format!("ε = {eps} must lie in (0, 0.1]"));
            }
            if (self.k - EDS_K).abs() > 1e-12 {
                return domain("the singular start is defined only for k = 2/3");
            }
        }
        if !(self.horizon > self.initial_time()) || !self.horizon.is_finite() {
            return domain(format!("horizon {} must exceed the initial time", self.horizon));
        }
        self.validate_except_horizon()
    }

    fn validate_except_horizon(&self) -> Result<()> {
        if let Some(m) = self.blowup_cap {
            if !(m > 0.0) {
                return domain("blow-up cap must be positive");
            }
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return domain(format!("horizon {} must be positive and finite", self.horizon));
        }
        Ok(())
    }

    /// `c·t^(1−p) N(u)`.
    #[inline]
    pub fn source(&self, t: f64, u: f64) -> f64 {
        match self.nonlinearity {
            Nonlinearity::None => 0.0,
            Nonlinearity::AbsPow => self.coupling * t.powf(1.0 - self.p) * u.abs().powf(self.p),
            Nonlinearity::SignedPow => self.coupling * t.powf(1.0 - self.p) * u.abs().powf(self.p - 1.0) * u,
        }
    }
}

/// Instantaneous state of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: GridField,
    pub u_t: GridField,
    pub steps: usize,
    /// `(t, max|u|)` at every recorded sample.
    pub max_history: Vec<(f64, f64)>,
}

impl SimState {
    pub fn spec(&self) -> &GridSpec {
        &self.u.spec
    }
}

fn check_data(params: &ModelParams, phi0: &GridField, phi1: &GridField) -> Result<()> {
    params.validate()?;
    phi0.check_same_grid(phi1)?;
    if phi0.spec.space_dim() != params.n {
        return Err(Error::GridMismatch(format!(
            "grid dimension {} differs from n = {}",
            phi0.spec.space_dim(),
            params.n
        )));
    }
    Ok(())
}

/// Asymptotic start at `t = ε` for weighted data `(φ₀, φ₁)`. The leading
/// terms are `u = φ₀ + εφ₁ − (9/2)ε^(2/3) Aφ₀`, `u_t = φ₁ − 3ε^(−1/3) Aφ₀`;
/// the `A²φ₀` and `Aφ₁` corrections below make the start error `O(ε)`.
///
/// Returns the state and whether `ε^(2/3)‖Aφ₀‖ > 0.1‖φ₀‖`, in which case the
/// expansion is unreliable.
pub fn init_weighted(
    params: &ModelParams,
    a: &EllipticOperator,
    phi0: &GridField,
    phi1: &GridField,
) -> Result<(SimState, bool)> {
    check_data(params, phi0, phi1)?;
    let eps = match params.start {
        Start::SingularAtZero { eps } => eps,
        Start::CauchyAtOne => return domain("init_weighted needs a singular start"),
    };
    let op = a.discretize(&phi0.spec)?;
    let aphi0 = op.apply(phi0)?;
    let a2phi0 = op.apply(&extrapolate_boundary(&aphi0))?;
    let aphi1 = op.apply(phi1)?;
    // Series of the two singular solutions through the A²φ₀ and Aφ₁ terms:
    // u = φ₀ + εφ₁ − (9/2)ε^(2/3)Aφ₀ − (81/8)ε^(4/3)A²φ₀ + (9/10)ε^(5/3)Aφ₁.
    let e13 = eps.cbrt();
    let e23 = e13 * e13;
    let u = phi0
        .axpy(eps, phi1)?
        .axpy(-4.5 * e23, &aphi0)?
        .axpy(-81.0 / 8.0 * e23 * e23, &a2phi0)?
        .axpy(0.9 * eps * e23, &aphi1)?;
    let u_t = phi1
        .axpy(-3.0 / e13, &aphi0)?
        .axpy(-13.5 * e13, &a2phi0)?
        .axpy(1.5 * e23, &aphi1)?;
    let warn = e23 * aphi0.max_abs() > 0.1 * phi0.max_abs();
    Ok((
        SimState {
            t: eps,
            u,
            u_t,
            steps: 0,
            max_history: Vec::new(),
        },
        warn,
    ))
}

/// Replaces boundary values by cubic extrapolation from the interior along
/// the inward (diagonal at corners) direction, dropping order on small grids.
fn extrapolate_boundary(f: &GridField) -> GridField {
    const WEIGHTS: [&[f64]; 4] = [&[1.0], &[2.0, -1.0], &[3.0, -3.0, 1.0], &[4.0, -6.0, 4.0, -1.0]];
    let g = f.spec;
    let mut out = f.clone();
    let last = g.points as isize - 1;
    let tensor = matches!(g.mode, GridMode::Tensor(_));
    for i in 0..g.len() {
        if !g.is_boundary(i) {
            continue;
        }
        let mi = g.multi_index(i);
        let mut step = [0isize; 3];
        for k in 0..g.dim() {
            let c = mi[k] as isize;
            step[k] = if c == 0 && tensor { 1 } else if c == last { -1 } else { 0 };
        }
        let node = |m: isize| -> Option<usize> {
            let mut idx = mi;
            for k in 0..g.dim() {
                let c = mi[k] as isize + m * step[k];
                if c < 0 || c > last {
                    return None;
                }
                idx[k] = c as usize;
            }
            let j = g.flat_index(&idx);
            (!g.is_boundary(j)).then_some(j)
        };
        let inner: Vec<usize> = (1..=4).map_while(node).collect();
        if inner.is_empty() {
            continue;
        }
        out.values[i] = WEIGHTS[inner.len() - 1]
            .iter()
            .zip(&inner)
            .map(|(w, &j)| w * f.values[j])
            .sum();
    }
    out
}

/// Cauchy data `ψ(1) = φ₀`, `ψ_t(1) = φ₁` become `u(1) = φ₀`, `u_t(1) = φ₀ + φ₁`.
pub fn init_cauchy(params: &ModelParams, phi0: &GridField, phi1: &GridField) -> Result<SimState> {
    check_data(params, phi0, phi1)?;
    if params.start != Start::CauchyAtOne {
        return domain("init_cauchy needs a Cauchy start");
    }
    Ok(SimState {
        t: 1.0,
        u: phi0.clone(),
        u_t: phi0.axpy(1.0, phi1)?,
        steps: 0,
        max_history: Vec::new(),
    })
}

/// `ψ = u/t`, `ψ_t = u_t/t − u/t²`.
pub fn liouville_to_psi(state: &SimState) -> Result<(GridField, GridField)> {
    let t = state.t;
    if !(t > 0.0) {
        return domain(format!("t = {t} must be positive"));
    }
    let psi = state.u.scaled(1.0 / t);
    let psi_t = state.u_t.scaled(1.0 / t).axpy(-1.0 / (t * t), &state.u)?;
    Ok((psi, psi_t))
}

/// Inverse of [`liouville_to_psi`].
pub fn psi_to_liouville(t: f64, psi: &GridField, psi_t: &GridField) -> Result<SimState> {
    if !(t > 0.0) {
        return domain(format!("t = {t} must be positive"));
    }
    Ok(SimState {
        t,
        u: psi.scaled(t),
        u_t: psi_t.scaled(t).axpy(1.0, psi)?,
        steps: 0,
        max_history: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExplicitKind {
    U,
    W,
    V,
}

/// Separated solutions of `λ'' = t^(−4/3) λ`, with `s = 3t^(1/3)`:
/// `U = cosh s − s sinh s`, `W = sinh s − s cosh s`, `V = U − W = (s+1)e^(−s)`.
pub fn explicit_solutions(kind: ExplicitKind, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return domain(format!("t = {t} must be positive"));
    }
    let s = 3.0 * t.cbrt();
    Ok(match kind {
        ExplicitKind::U => s.cosh() - s * s.sinh(),
        ExplicitKind::W => s.sinh() - s * s.cosh(),
        ExplicitKind::V => (s + 1.0) * (-s).exp(),
    })
}

/// Values imposed on boundary nodes.
#[derive(Clone, Default)]
pub enum Boundary {
    #[default]
    Zero,
    /// `g(t, x)` on boundary nodes.
    Prescribed(Arc<dyn Fn(f64, &[f64; 3]) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundary::Zero => write!(f, "Zero"),
            Boundary::Prescribed(_) => write!(f, "Prescribed(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Spatial factor `φ` of the test function `v = λ(t)φ`; `F₁` is NaN without it.
    pub test_weight: Option<GridField>,
    pub boundary: Boundary,
    /// Record a sample every this many steps.
    pub sample_stride: usize,
    /// Shrink steps as the source stiffens (needed to resolve blow-up).
    pub adaptive: bool,
    /// Safety factor of the source-stiffness step limit.
    pub stiffness_safety: f64,
    pub max_steps: usize,
    /// Overrides the CFL step in `τ`.
    pub fixed_dtau: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            test_weight: None,
            boundary: Boundary::Zero,
            sample_stride: 1,
            adaptive: true,
            stiffness_safety: 0.2,
            max_steps: 20_000_000,
            fixed_dtau: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    ReachedHorizon,
    BlowupDetected { t_est: f64 },
    StepCollapse,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub trace: FunctionalTrace,
    pub outcome: Outcome,
    pub state: SimState,
}

/// CFL step in `τ`: `CFL·h / (max(1, speed)·√d)`, `d` the spatial dimension.
pub fn cfl_step(params: &ModelParams, a: &EllipticOperator, grid: &GridSpec) -> f64 {
    let speed = s_a(a, grid).speed_value.max(1.0);
    params.cfl * grid.spacing / (speed * f64::from(grid.space_dim()).sqrt())
}

/// Per-run constants shared by the stepper and the sampler.
pub(crate) struct Workspace<'a> {
    pub params: &'a ModelParams,
    pub op: DiscreteOperator,
    pub wa: Vec<f64>,
    pub boundary_nodes: Vec<usize>,
    pub by_radius_desc: Vec<usize>,
    pub test_weight: Option<&'a GridField>,
}

impl<'a> Workspace<'a> {
    pub fn new(params: &'a ModelParams, a: &EllipticOperator, grid: &GridSpec, test_weight: Option<&'a GridField>) -> Result<Self> {
        let op = a.discretize(grid)?;
        let wa = op.inner_weights();
        if let Some(w) = test_weight {
            if w.spec != *grid {
                return Err(Error::GridMismatch("test weight lives on a different grid".into()));
            }
        }
        let boundary_nodes = (0..grid.len()).filter(|&i| grid.is_boundary(i)).collect();
        let mut by_radius_desc: Vec<usize> = (0..grid.len()).collect();
        let radii: Vec<f64> = (0..grid.len()).map(|i| grid.radius(i)).collect();
        by_radius_desc.sort_by(|&x, &y| radii[y].total_cmp(&radii[x]));
        Ok(Self {
            params,
            op,
            wa,
            boundary_nodes,
            by_radius_desc,
            test_weight,
        })
    }

    fn lambda(&self, t: f64) -> f64 {
        match self.params.start {
            Start::SingularAtZero { .. } => lambda_eds(t).map(|l| l.value).unwrap_or(f64::NAN),
            Start::CauchyAtOne => lambda_tilde(self.params.k, t).unwrap_or(f64::NAN),
        }
    }

    pub fn sample(&self, t: f64, u: &[f64]) -> Sample {
        let spec = self.op.spec();
        let mut f = 0.0;
        let mut src = 0.0;
        let mut mass = 0.0;
        let mut abs_p = 0.0;
        let mut max_norm = 0.0f64;
        for i in 0..u.len() {
            f += self.wa[i] * u[i];
            mass += self.wa[i] * u[i].abs();
            src += self.wa[i] * self.params.source(t, u[i]);
            abs_p += self.wa[i] * u[i].abs().powf(self.params.p);
            max_norm = max_norm.max(u[i].abs());
        }
        let f1 = match self.test_weight {
            Some(phi) => {
                let m: f64 = (0..u.len()).map(|i| self.wa[i] * u[i] * phi.values[i]).sum();
                self.lambda(t) * m
            }
            None => f64::NAN,
        };
        let cut = 1e-12 * max_norm;
        let support_radius = if max_norm == 0.0 {
            0.0
        } else {
            self.by_radius_desc
                .iter()
                .find(|&&i| u[i].abs() > cut)
                .map(|&i| spec.radius(i))
                .unwrap_or(0.0)
        };
        // smallest radius with less than 1e−8 of the mass outside it
        let mut outside = 0.0;
        let mut mass_radius = 0.0;
        if mass > 0.0 {
            for &i in &self.by_radius_desc {
                outside += self.wa[i] * u[i].abs();
                if outside >= 1e-8 * mass {
                    mass_radius = spec.radius(i);
                    break;
                }
            }
        }
        let exact_support = self
            .by_radius_desc
            .iter()
            .find(|&&i| u[i] != 0.0)
            .map_or(-1.0, |&i| spec.radius(i));
        let support_measure = (0..u.len())
            .filter(|&i| spec.radius(i) <= exact_support)
            .map(|i| self.wa[i])
            .sum();
        Sample {
            t,
            f,
            f1,
            support_radius,
            max_norm,
            source: src,
            mass_radius,
            support_measure,
            abs_p_integral: abs_p,
        }
    }

    /// `v += (Δτ/2) t^k (t^(−2k) A u + S(t, u))` on interior nodes.
    fn kick(&self, t: f64, half_dtau: f64, u: &[f64], v: &mut [f64], frozen: Option<&[f64]>) {
        let tk = t.powf(self.params.k);
        let t_2k = t.powf(-2.0 * self.params.k);
        for i in 0..u.len() {
            let mut au = 0.0;
            self.op.stencil(i, |j, c| au += c * u[j]);
            let s = self.params.source(t, frozen.map_or(u[i], |f| f[i]));
            v[i] += half_dtau * tk * (t_2k * au + s);
        }
        for &i in &self.boundary_nodes {
            v[i] = 0.0;
        }
    }

    fn set_boundary(&self, boundary: &Boundary, t: f64, u: &mut [f64]) {
        let spec = self.op.spec();
        for &i in &self.boundary_nodes {
            u[i] = match boundary {
                Boundary::Zero => 0.0,
                Boundary::Prescribed(g) => g(t, &spec.coords(i)),
            };
        }
    }

    /// One kick–drift–kick step from `t0` to `t1`. A frozen field replaces `u`
    /// inside the source term.
    #[allow(clippy::too_many_arguments)]
    pub fn step(
        &self,
        boundary: &Boundary,
        t0: f64,
        t1: f64,
        dtau: f64,
        u: &mut [f64],
        v: &mut [f64],
        frozen0: Option<&[f64]>,
        frozen1: Option<&[f64]>,
    ) {
        self.kick(t0, 0.5 * dtau, u, v, frozen0);
        let dt = t1 - t0;
        for i in 0..u.len() {
            u[i] += dt * v[i];
        }
        self.set_boundary(boundary, t1, u);
        self.kick(t1, 0.5 * dtau, u, v, frozen1);
    }
}

fn stiffness_limit(params: &ModelParams, t: f64, max_norm: f64, safety: f64) -> f64 {
    if params.nonlinearity == Nonlinearity::None || max_norm == 0.0 {
        return f64::INFINITY;
    }
    let j = params.coupling.abs() * params.p * t.powf(1.0 - params.p) * max_norm.powf(params.p - 1.0);
    safety / (t.powf(params.k) * j.sqrt())
}

/// Advances `state` to `params.horizon` (which may lie before `state.t`, for
/// backward runs of the linear problem).
pub fn run(state: SimState, params: &ModelParams, a: &EllipticOperator, options: &RunOptions) -> Result<RunResult> {
    ModelParams {
        horizon: params.initial_time().max(state.t) + 1.0,
        ..*params
    }
    .validate()?;
    params.validate_except_horizon()?;
    if !(state.t > 0.0) {
        return domain(format!("state time {} must be positive", state.t));
    }
    let grid = state.u.spec;
    state.u.check_same_grid(&state.u_t)?;
    if grid.space_dim() != params.n {
        return Err(Error::GridMismatch(format!(
            "grid dimension {} differs from n = {}",
            grid.space_dim(),
            params.n
        )));
    }
    let ws = Workspace::new(params, a, &grid, options.test_weight.as_ref())?;
    let k = params.k;
    let t_start = state.t;
    let tau_start = characteristic_time(k, t_start);
    let tau_end = characteristic_time(k, params.horizon);
    let dir = if tau_end >= tau_start { 1.0 } else { -1.0 };
    let base = options.fixed_dtau.unwrap_or_else(|| cfl_step(params, a, &grid));
    if !(base > 0.0) {
        return domain("time step must be positive");
    }

    let mut u = state.u.values.clone();
    let mut v = state.u_t.values.clone();
    ws.set_boundary(&options.boundary, t_start, &mut u);
    let initial_max = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let cap = params.blowup_cap.unwrap_or(1e8 * (initial_max + 1.0));

    let first = ws.sample(t_start, &u);
    let mut trace = FunctionalTrace::new(*params, &ws, &u, &v, t_start, first.support_radius);
    let mut max_history = state.max_history.clone();
    max_history.push((t_start, first.max_norm));
    trace.samples.push(first);

    let mut tau = tau_start;
    let mut t = t_start;
    let mut steps = state.steps;
    let mut max_norm = initial_max;
    let mut outcome = Outcome::ReachedHorizon;
    let mut taken = 0usize;
    while dir * (tau_end - tau) > 1e-14 * tau_end.abs().max(1.0) {
        // resolve the 1/τ behaviour of u_t near a singular start
        let mut dtau = base * tau.abs().min(1.0);
        if options.adaptive {
            dtau = dtau.min(stiffness_limit(params, t, max_norm, options.stiffness_safety));
        }
        if dtau < 1e-15 * tau.abs().max(1e-300) || taken >= options.max_steps {
            outcome = Outcome::StepCollapse;
            break;
        }
        // equal steps to the horizon while the limit holds still
        let remaining = dir * (tau_end - tau);
        let left = (remaining / dtau - 1e-9).ceil().max(1.0);
        let dtau = if left <= 1.0 { remaining } else { remaining / left };
        let tau_next = if left <= 1.0 { tau_end } else { tau + dir * dtau };
        let t_next = if tau_next == tau_end {
            params.horizon
        } else {
            time_from_characteristic(k, tau_next)
        };
        ws.step(&options.boundary, t, t_next, dir * dtau, &mut u, &mut v, None, None);
        tau = tau_next;
        t = t_next;
        steps += 1;
        taken += 1;

        max_norm = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if max_norm.is_nan() || u.iter().chain(&v).any(|x| x.is_nan()) {
            return Err(Error::Numerical(format!("NaN in the solution at t = {t} after {steps} steps")));
        }
        let blown = !(max_norm <= cap);
        let at_end = tau == tau_end;
        if blown || at_end || taken % options.sample_stride.max(1) == 0 {
            let s = ws.sample(t, &u);
            max_history.push((t, s.max_norm));
            trace.samples.push(s);
        }
        if blown {
            let t_est = fit_blowup_time(&trace.samples, params.p).max(t);
            outcome = Outcome::BlowupDetected { t_est };
            break;
        }
    }
    let state = SimState {
        t,
        u: GridField::from_values(grid, u)?,
        u_t: GridField::from_values(grid, v)?,
        steps,
        max_history,
    };
    Ok(RunResult { trace, outcome, state })
}

/// Result of the Picard iteration for the integral equation.
#[derive(Debug, Clone)]
pub struct PicardResult {
    /// Final-time state of each iterate `u₀, u₁, …`.
    pub iterates: Vec<SimState>,
    /// `d(u_{m+1}, u_m)` in the weighted norm, one per completed iteration.
    pub distances: Vec<f64>,
    /// Ratios of successive distances (`0/0` counts as `0`).
    pub contraction_estimates: Vec<f64>,
    /// Set after three consecutive estimates above one.
    pub diverged: bool,
}

/// Picard iteration `u_{m+1} = u_lin + G[c·t^(1−p)|u_m|^p]`, `p = 1 + α`,
/// where `G` is the linear solver driven by the frozen source of the previous
/// iterate on a fixed time grid. Distances use
/// `sup_t t^(1 + nα/(3(α+2))) ‖ψ_{m+1} − ψ_m‖_{L^q}`, `q = α + 2`, `ψ = u/t`.
pub fn picard_local_solve(
    params: &ModelParams,
    a: &EllipticOperator,
    phi0: &GridField,
    phi1: &GridField,
    iterations: usize,
) -> Result<PicardResult> {
    if params.nonlinearity != Nonlinearity::AbsPow {
        return domain("the Picard iteration is set up for the |u|^p source");
    }
    let alpha = params.p - 1.0;
    let a0 = crate::exponents::alpha0(params.n)?;
    if !(alpha > 0.0) {
        return domain(format!("α = {alpha} must be positive"));
    }
    if alpha >= a0 {
        return domain(format!("α = {alpha} must lie below α₀(n) = {a0}"));
    }
    let start = match params.start {
        Start::SingularAtZero { .. } => init_weighted(params, a, phi0, phi1)?.0,
        Start::CauchyAtOne => init_cauchy(params, phi0, phi1)?,
    };
    let grid = phi0.spec;
    let ws = Workspace::new(params, a, &grid, None)?;
    let k = params.k;
    let tau0 = characteristic_time(k, start.t);
    let tau1 = characteristic_time(k, params.horizon);
    let base = cfl_step(params, a, &grid);
    let nsteps = ((tau1 - tau0) / base).ceil().max(1.0) as usize;
    let dtau = (tau1 - tau0) / nsteps as f64;
    let mut times: Vec<f64> = (0..=nsteps)
        .map(|j| time_from_characteristic(k, tau0 + j as f64 * dtau))
        .collect();
    times[0] = start.t;
    times[nsteps] = params.horizon;

    let q = alpha + 2.0;
    let weight_exp = 1.0 + f64::from(params.n) * alpha / (3.0 * (alpha + 2.0));
    let wq = ws.wa.clone();
    let distance = |x: &[Vec<f64>], y: &[Vec<f64>]| -> f64 {
        times
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let lq: f64 = (0..x[j].len())
                    .map(|i| wq[i] * ((x[j][i] - y[j][i]) / t).abs().powf(q))
                    .sum::<f64>()
                    .powf(1.0 / q);
                t.powf(weight_exp) * lq
            })
            .fold(0.0, f64::max)
    };

    let zero = vec![0.0; grid.len()];
    // linear solve driven by the source of a stored iterate (zero source when absent)
    let march = |frozen: Option<&[Vec<f64>]>| -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let mut u = start.u.values.clone();
        let mut v = start.u_t.values.clone();
        let mut hist = Vec::with_capacity(nsteps + 1);
        hist.push(u.clone());
        for j in 0..nsteps {
            let (f0, f1) = match frozen {
                Some(f) => (&f[j][..], &f[j + 1][..]),
                None => (&zero[..], &zero[..]),
            };
            ws.step(&Boundary::Zero, times[j], times[j + 1], dtau, &mut u, &mut v, Some(f0), Some(f1));
            if u.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numerical(format!("Picard iterate diverged at t = {}", times[j + 1])));
            }
            hist.push(u.clone());
        }
        Ok((hist, v))
    };

    let to_state = |u: &[f64], v: Vec<f64>| -> Result<SimState> {
        Ok(SimState {
            t: params.horizon,
            u: GridField::from_values(grid, u.to_vec())?,
            u_t: GridField::from_values(grid, v)?,
            steps: nsteps,
            max_history: Vec::new(),
        })
    };

    let (mut prev, v0) = march(None)?;
    let mut iterates = vec![to_state(&prev[nsteps], v0)?];
    let mut distances = Vec::new();
    let mut estimates = Vec::new();
    let mut above = 0;
    let mut diverged = false;
    for _ in 0..iterations {
        let (next, v) = march(Some(&prev))?;
        let d = distance(&next, &prev);
        if let Some(&last) = distances.last() {
            let est = if d == 0.0 && last == 0.0 { 0.0 } else { d / last };
            estimates.push(est);
            above = if est > 1.0 { above + 1 } else { 0 };
        }
        distances.push(d);
        iterates.push(to_state(&next[nsteps], v)?);
        prev = next;
        if above >= 3 {
            diverged = true;
            break;
        }
        if d == 0.0 {
            break;
        }
    }
    Ok(PicardResult {
        iterates,
        distances,
        contraction_estimates: estimates,
        diverged,
    })
}
