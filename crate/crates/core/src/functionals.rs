//! Integral functionals of a solution and the checks built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::exponents::{blowup_predicted, Prediction, Problem};
use crate::grid::{GridField, GridSpec};
use crate::operators::{s_a, EllipticOperator};
use crate::solver::{
    init_cauchy, init_weighted, run, ModelParams, Nonlinearity, Outcome, RunOptions, SimState, Start, Workspace,
};
use crate::special::testfn::{characteristic_time, lambda1, lambda_eds, lambda_tilde};

/// One row of a [`FunctionalTrace`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    /// `∫ a u`
    pub f: f64,
    /// `∫ a u v` with `v = λ(t) φ`
    pub f1: f64,
    /// Radius of the smallest ball holding every node with `|u| > 1e−12 max|u|`.
    pub support_radius: f64,
    pub max_norm: f64,
    /// `∫ a S(t, u)`, the right-hand side of `F'' = ∫ a S`.
    pub source: f64,
    /// Smallest node radius with less than `1e−8` of `∫ a|u|` outside it.
    pub mass_radius: f64,
    /// `∫ a` over the ball containing every node where `u ≠ 0`.
    pub support_measure: f64,
    /// `∫ a |u|^p`.
    pub abs_p_integral: f64,
}

/// Time series recorded during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalTrace {
    pub samples: Vec<Sample>,
    pub params: ModelParams,
    pub t0: f64,
    /// `∫ a u(t₀)`
    pub c0: f64,
    /// `∫ a u_t(t₀)`
    pub c1: f64,
    /// `∫ a u(t₀) φ` (NaN without a test weight).
    pub moment0: f64,
    /// `∫ a u_t(t₀) φ` (NaN without a test weight).
    pub moment1: f64,
    pub initial_support: f64,
}

impl FunctionalTrace {
    pub(crate) fn new(params: ModelParams, ws: &Workspace<'_>, u: &[f64], v: &[f64], t0: f64, support: f64) -> Self {
        let c0 = ws.wa.iter().zip(u).map(|(w, x)| w * x).sum();
        let c1 = ws.wa.iter().zip(v).map(|(w, x)| w * x).sum();
        let (moment0, moment1) = match ws.test_weight {
            Some(phi) => (
                (0..u.len()).map(|i| ws.wa[i] * u[i] * phi.values[i]).sum(),
                (0..u.len()).map(|i| ws.wa[i] * v[i] * phi.values[i]).sum(),
            ),
            None => (f64::NAN, f64::NAN),
        };
        Self {
            samples: Vec::new(),
            params,
            t0,
            c0,
            c1,
            moment0,
            moment1,
            initial_support: support,
        }
    }
}

/// `F(t) = ∫ a u(t)`.
pub fn evaluate_f(state: &SimState, a: &EllipticOperator) -> Result<f64> {
    let op = a.discretize(state.spec())?;
    Ok(op.inner(&state.u.values, &vec![1.0; state.u.values.len()]))
}

/// `F₁(t) = λ(t) ∫ a u φ`, with `λ` the test function of the given start.
pub fn evaluate_f1(state: &SimState, a: &EllipticOperator, phi: &GridField, start: Start, k: f64) -> Result<f64> {
    state.u.check_same_grid(phi)?;
    let op = a.discretize(state.spec())?;
    let lambda = match start {
        Start::SingularAtZero { .. } => lambda_eds(state.t)?.value,
        Start::CauchyAtOne => lambda_tilde(k, state.t)?,
    };
    Ok(lambda * op.inner(&state.u.values, &phi.values))
}

/// Extrapolated blow-up time from `F ~ C (T − t)^(−2/(p−1))`: fits
/// `F^(−(p−1)/2)` by a line over the last decade of growth of `F`.
/// Falls back to the last sample time when no decreasing trend is found.
pub fn fit_blowup_time(samples: &[Sample], p: f64) -> f64 {
    let t_last = samples.last().map_or(0.0, |s| s.t);
    let positive: Vec<&Sample> = samples.iter().filter(|s| s.f > 0.0 && s.f.is_finite()).collect();
    let Some(last) = positive.last() else {
        return t_last;
    };
    let mut pts: Vec<(f64, f64)> = positive
        .iter()
        .filter(|s| s.f >= last.f / 10.0)
        .map(|s| (s.t, s.f.powf(-(p - 1.0) / 2.0)))
        .collect();
    if pts.len() < 3 {
        pts = positive
            .iter()
            .rev()
            .take(5)
            .map(|s| (s.t, s.f.powf(-(p - 1.0) / 2.0)))
            .collect();
    }
    if pts.len() < 2 {
        return t_last;
    }
    let m = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / m, sy / m);
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt) * (t - mt)));
    if sxx == 0.0 {
        return t_last;
    }
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return t_last;
    }
    let t_est = mt - my / slope;
    if t_est.is_finite() {
        t_est.max(t_last)
    } else {
        t_last
    }
}

/// Second difference of `F` on a non-uniform time grid at sample `i`.
fn second_difference(s: &[Sample], i: usize) -> f64 {
    let (a, b, c) = (&s[i - 1], &s[i], &s[i + 1]);
    let d1 = (c.f - b.f) / (c.t - b.t);
    let d0 = (b.f - a.f) / (b.t - a.t);
    2.0 * (d1 - d0) / (c.t - a.t)
}

/// `max_i |F''(t_i) − ∫ a S(t_i, u)|` over interior samples whose neighbours
/// are equally spaced in `τ`, divided by `max_i |∫ a S|`; the absolute value is
/// returned when the source vanishes.
pub fn f2_identity_residual(trace: &FunctionalTrace) -> Result<f64> {
    let s = &trace.samples;
    if s.len() < 5 {
        return domain(format!("need at least 5 samples, got {}", s.len()));
    }
    let k = trace.params.k;
    let tau: Vec<f64> = s.iter().map(|x| characteristic_time(k, x.t)).collect();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    let mut used = 0;
    for i in 1..s.len() - 1 {
        let (h0, h1) = (tau[i] - tau[i - 1], tau[i + 1] - tau[i]);
        if (h1 - h0).abs() > 1e-6 * h0.abs().max(h1.abs()) {
            continue;
        }
        used += 1;
        worst = worst.max((second_difference(s, i) - s[i].source).abs());
        scale = scale.max(s[i].source.abs());
    }
    if used < 3 {
        return domain(format!("only {used} samples are centred in τ"));
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KatoOutcome {
    Escape { t_est: f64 },
    Bounded { t_end: f64, f_end: f64 },
}

/// Integrates `F'' = c (1+t)^(−q) |F|^p`, `F(0) = F0`, `F'(0) = F0p`, by the
/// Dormand–Prince 5(4) pair. `Escape` once `F > 1e12` (or the step collapses);
/// the time is extrapolated as in [`fit_blowup_time`]. `r` is the growth
/// exponent of the lower bound `F ≥ c₀(1+t)^r` and only enters the caller's
/// classification.
pub fn kato_ode_integrate(p: f64, q: f64, _r: f64, f0: f64, f0p: f64, c: f64, horizon: f64) -> Result<KatoOutcome> {
    if !(p > 1.0) || !(c >= 0.0) || !(f0 >= 0.0) || !(f0p >= 0.0) || !(horizon > 0.0) {
        return domain("need p > 1, c ≥ 0, F0 ≥ 0, F0' ≥ 0 and a positive horizon");
    }
    let rhs = |t: f64, y: [f64; 2]| [y[1], c * (1.0 + t).powf(-q) * y[0].abs().powf(p)];
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let tol = 1e-10;
    let mut t = 0.0f64;
    let mut y = [f0, f0p];
    let mut h = 1e-3f64;
    let mut samples = vec![ode_sample(t, y[0])];
    let mut stride_t = 0.0f64;
    while t < horizon {
        if y[0] > 1e12 {
            return Ok(KatoOutcome::Escape {
                t_est: fit_blowup_time(&samples, p),
            });
        }
        h = h.min(horizon - t);
        if h < 1e-14 * t.max(1.0) {
            return Ok(KatoOutcome::Escape {
                t_est: fit_blowup_time(&samples, p).max(t),
            });
        }
        let mut k = [[0.0; 2]; 7];
        k[0] = rhs(t, y);
        for s in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                ys[0] += h * A[s][j] * kj[0];
                ys[1] += h * A[s][j] * kj[1];
            }
            k[s + 1] = rhs(t + C[s] * h, ys);
        }
        let mut y5 = y;
        let mut err = [0.0; 2];
        for j in 0..7 {
            for d in 0..2 {
                y5[d] += h * B5[j] * k[j][d];
                err[d] += h * (B5[j] - B4[j]) * k[j][d];
            }
        }
        let sc = |d: usize| tol * (1.0 + y[d].abs().max(y5[d].abs()));
        let e = ((err[0] / sc(0)).powi(2) + (err[1] / sc(1)).powi(2)).sqrt() / 2f64.sqrt();
        if !e.is_finite() {
            h *= 0.2;
            continue;
        }
        if e <= 1.0 {
            t += h;
            y = y5;
            if t >= stride_t || y[0] > 1e6 {
                samples.push(ode_sample(t, y[0]));
                stride_t = t * 1.001;
            }
        }
        h *= (0.9 * e.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
    }
    Ok(KatoOutcome::Bounded { t_end: t, f_end: y[0] })
}

fn ode_sample(t: f64, f: f64) -> Sample {
    Sample {
        t,
        f,
        f1: f64::NAN,
        support_radius: f64::NAN,
        max_norm: f.abs(),
        source: f64::NAN,
        mass_radius: f64::NAN,
        support_measure: f64::NAN,
        abs_p_integral: f64::NAN,
    }
}

/// Result of the `F₁ ≥ C t^k (Λ₁ ∫a u₀φ + ∫a u₁φ)` check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Check {
    /// Samples violating the bound anywhere in the run.
    pub violations: usize,
    /// First sample time after which the bound holds up to the horizon;
    /// `None` when the last sample violates it.
    pub t_onset: Option<f64>,
    /// `min F₁/(t^k H)` over samples from `t_onset` on.
    pub fitted_constant: f64,
    /// `Λ₁(k) ∫a u₀φ + ∫a u₁φ`.
    pub hypothesis: f64,
}

/// Checks `F₁(t) ≥ constant · t^k · H` on a Cauchy-start trace.
pub fn f1_lower_bound_check(trace: &FunctionalTrace, k: f64, constant: f64) -> Result<F1Check> {
    if trace.params.start != Start::CauchyAtOne {
        return domain("the F₁ bound concerns Cauchy data at t = 1");
    }
    let hyp = lambda1(k)? * trace.moment0 + trace.moment1;
    if !(hyp > 0.0) {
        return domain(format!("hypothesis Λ₁∫a u₀φ + ∫a u₁φ > 0 fails ({hyp})"));
    }
    let ok: Vec<bool> = trace
        .samples
        .iter()
        .map(|s| s.f1 >= constant * s.t.powf(k) * hyp)
        .collect();
    let violations = ok.iter().filter(|b| !**b).count();
    let onset_idx = match ok.iter().rposition(|b| !*b) {
        None => Some(0),
        Some(i) if i + 1 < ok.len() => Some(i + 1),
        Some(_) => None,
    };
    let fitted_constant = onset_idx.map_or(f64::NAN, |i| {
        trace.samples[i..]
            .iter()
            .map(|s| s.f1 / (s.t.powf(k) * hyp))
            .fold(f64::INFINITY, f64::min)
    });
    Ok(F1Check {
        violations,
        t_onset: onset_idx.map(|i| trace.samples[i].t),
        fitted_constant,
        hypothesis: hyp,
    })
}

/// Outcome of [`cone_check`] with the worst sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub passed: bool,
    /// Largest `mass_radius − cone radius` over samples.
    pub worst_excess: f64,
}

/// True iff at every sample less than `1e−8` of `∫a|u|` lies outside
/// `R₀ + (φ(t) − φ(t₀)) max(s_A, √s_A) + tol`.
pub fn cone_check(trace: &FunctionalTrace, a: &EllipticOperator, grid: &GridSpec, tol: f64) -> ConeReport {
    let speed = s_a(a, grid).conservative();
    let k = trace.params.k;
    let tau0 = characteristic_time(k, trace.t0);
    let worst_excess = trace
        .samples
        .iter()
        .filter(|s| s.max_norm > 0.0)
        .map(|s| {
            let cone = trace.initial_support + (characteristic_time(k, s.t) - tau0).abs() * speed + tol;
            s.mass_radius - cone
        })
        .fold(f64::NEG_INFINITY, f64::max);
    ConeReport {
        passed: !(worst_excess > 0.0),
        worst_excess: worst_excess.max(-f64::MAX),
    }
}

/// Largest `|F|^p / (μ^(p−1) ∫a|u|^p) − 1` over samples, `μ` the
/// `a`-measure of the support ball. Hölder's inequality makes it `≤ 0`.
pub fn holder_excess(trace: &FunctionalTrace) -> f64 {
    let p = trace.params.p;
    trace
        .samples
        .iter()
        .filter(|s| s.abs_p_integral > 0.0)
        .map(|s| s.f.abs().powf(p) / (s.support_measure.powf(p - 1.0) * s.abs_p_integral) - 1.0)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Whether `F` accelerates over the last decade of its growth
/// (at least 90% positive second differences, three points minimum).
pub fn accelerating(samples: &[Sample]) -> bool {
    let Some(last) = samples.last() else {
        return false;
    };
    if !(last.f > 0.0) {
        return false;
    }
    let start = samples.iter().position(|s| s.f >= last.f / 10.0).unwrap_or(0).max(1);
    if samples.len() < start + 3 {
        return false;
    }
    let d2: Vec<f64> = (start..samples.len() - 1).map(|i| second_difference(samples, i)).collect();
    let positive = d2.iter().filter(|v| **v > 0.0).count();
    positive as f64 >= 0.9 * d2.len() as f64
}

/// Data shape and discretisation shared by every point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepSetup {
    pub operator: EllipticOperator,
    pub grid: GridSpec,
    /// Radius of the bump `(1 − |x|²/R²)⁴₊`.
    pub bump_radius: f64,
    pub sample_stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Observed {
    Blowup,
    ReachedHorizon,
    StepCollapse,
    /// Cap crossed without acceleration of `F`.
    Inconclusive,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub params: ModelParams,
    pub scale: f64,
    pub observed: Observed,
    pub t_est: Option<f64>,
    pub predicted: Prediction,
    pub error: Option<String>,
}

/// Runs one sweep point with bump data `scale · bump` and zero second datum.
pub fn classify_point(setup: &SweepSetup, params: &ModelParams, scale: f64) -> SweepRow {
    let predicted = match params.nonlinearity {
        Nonlinearity::None => Ok(Prediction::NoPrediction),
        _ => {
            let problem = match params.start {
                Start::SingularAtZero { .. } => Problem::SingularAtZero,
                Start::CauchyAtOne => Problem::CauchyAtOne,
            };
            blowup_predicted(params.n, params.k, params.p, problem)
        }
    };
    let result = (|| -> Result<(Outcome, Vec<Sample>)> {
        let phi0 = GridField::bump(setup.grid, setup.bump_radius, scale);
        let phi1 = GridField::zeros(setup.grid);
        let state = match params.start {
            Start::SingularAtZero { .. } => init_weighted(params, &setup.operator, &phi0, &phi1)?.0,
            Start::CauchyAtOne => init_cauchy(params, &phi0, &phi1)?,
        };
        let options = RunOptions {
            sample_stride: setup.sample_stride,
            ..RunOptions::default()
        };
        let r = run(state, params, &setup.operator, &options)?;
        Ok((r.outcome, r.trace.samples))
    })();
    let (observed, t_est, error) = match result {
        Ok((Outcome::ReachedHorizon, _)) => (Observed::ReachedHorizon, None, None),
        Ok((Outcome::StepCollapse, _)) => (Observed::StepCollapse, None, None),
        Ok((Outcome::BlowupDetected { t_est }, samples)) => {
            if accelerating(&samples) {
                (Observed::Blowup, Some(t_est), None)
            } else {
                (Observed::Inconclusive, Some(t_est), None)
            }
        }
        Err(e) => (Observed::Failed, None, Some(e.to_string())),
    };
    let (predicted, error) = match predicted {
        Ok(p) => (p, error),
        Err(e) => (Prediction::NoPrediction, error.or(Some(e.to_string()))),
    };
    SweepRow {
        params: *params,
        scale,
        observed,
        t_est,
        predicted,
        error,
    }
}

/// Classifies every point in parallel; rows come back in input order.
pub fn classify_sweep(setup: &SweepSetup, params_grid: &[ModelParams], data_scale: f64) -> Vec<SweepRow> {
    params_grid
        .par_iter()
        .map(|p| classify_point(setup, p, data_scale))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::{kato_condition, EDS_K};
    use crate::special::eigenfunction;

    fn run_1d(points: usize, extent: f64, params: &ModelParams, amp: f64, stride: usize, weight: bool) -> (crate::solver::RunResult, GridSpec, EllipticOperator) {
        let g = GridSpec::tensor(1, extent, points).unwrap();
        let a = EllipticOperator::flat(1, 1.0).unwrap();
        let phi0 = GridField::bump(g, 1.0, amp);
        let st = init_cauchy(params, &phi0, &GridField::zeros(g)).unwrap();
        let test_weight = weight.then(|| eigenfunction(&a, &g).unwrap().values);
        let opts = RunOptions {
            sample_stride: stride,
            test_weight,
            ..Default::default()
        };
        (run(st, params, &a, &opts).unwrap(), g, a)
    }

    fn synthetic(ts: &[f64], f: impl Fn(f64) -> f64) -> Vec<Sample> {
        ts.iter()
            .map(|&t| Sample {
                t,
                f: f(t),
                f1: f64::NAN,
                support_radius: 0.0,
                max_norm: f(t).abs(),
                source: 0.0,
                mass_radius: 0.0,
                support_measure: 0.0,
                abs_p_integral: 0.0,
            })
            .collect()
    }

    #[test]
    fn f_of_zero_is_zero_and_matches_trace() {
        let g = GridSpec::tensor(2, 4.0, 41).unwrap();
        let a = EllipticOperator::example1(2, 1.0, 1.0).unwrap();
        let params = ModelParams::new(2, 0.5, 2.0, Nonlinearity::None, 2.0, Start::CauchyAtOne);
        let z = GridField::zeros(g);
        let st = init_cauchy(&params, &z, &z).unwrap();
        assert_eq!(evaluate_f(&st, &a).unwrap(), 0.0);
        let st = init_cauchy(&params, &GridField::bump(g, 1.5, 1.0), &z).unwrap();
        let r = run(st, &params, &a, &RunOptions::default()).unwrap();
        let last = r.trace.samples.last().unwrap();
        assert!((evaluate_f(&r.state, &a).unwrap() - last.f).abs() < 1e-14 * last.f.abs().max(1.0));
    }

    #[test]
    fn f1_of_weighted_start_is_the_data_moment() {
        let g = GridSpec::radial(3, 6.0, 301).unwrap();
        let a = EllipticOperator::flat(3, 1.0).unwrap();
        let phi = eigenfunction(&a, &g).unwrap().values;
        let phi0 = GridField::bump(g, 1.5, 1.0);
        let params = ModelParams::new(3, EDS_K, 2.0, Nonlinearity::None, 1.0, Start::SingularAtZero { eps: 1e-6 });
        let (st, _) = init_weighted(&params, &a, &phi0, &GridField::zeros(g)).unwrap();
        let f1 = evaluate_f1(&st, &a, &phi, params.start, EDS_K).unwrap();
        let moment = a.discretize(&g).unwrap().inner(&phi0.values, &phi.values);
        assert!((f1 / moment - 1.0).abs() < 1e-3, "{f1} {moment}");
    }

    #[test]
    fn blowup_fit_recovers_synthetic_time() {
        for &(p, t_b) in &[(2.0, 7.5), (3.0, 2.0), (1.5, 40.0)] {
            let ts: Vec<f64> = (0..200).map(|i| t_b * (1.0 - 0.9f64.powi(i))).collect();
            let s = synthetic(&ts, |t| (t_b - t).powf(-2.0 / (p - 1.0)));
            let est = fit_blowup_time(&s, p);
            assert!((est - t_b).abs() < 1e-6 * t_b, "p={p}: {est}");
        }
        let flat = synthetic(&[1.0, 2.0, 3.0], |_| 1.0);
        assert_eq!(fit_blowup_time(&flat, 2.0), 3.0);
        assert_eq!(fit_blowup_time(&[], 2.0), 0.0);
    }

    #[test]
    fn f2_identity_converges() {
        let params = ModelParams::new(1, 0.5, 2.0, Nonlinearity::AbsPow, 6.0, Start::CauchyAtOne);
        let res: Vec<f64> = [101, 201, 401]
            .iter()
            .map(|&n| f2_identity_residual(&run_1d(n, 8.0, &params, 0.5, 4, false).0.trace).unwrap())
            .collect();
        assert!(res[0] < 5e-2, "{res:?}");
        assert!(res[0] / res[1] >= 3.0 && res[1] / res[2] >= 3.0, "{res:?}");
    }

    #[test]
    fn f2_identity_linear_is_trivial() {
        let params = ModelParams::new(1, 0.5, 2.0, Nonlinearity::None, 4.0, Start::CauchyAtOne);
        let (r, _, _) = run_1d(201, 8.0, &params, 1.0, 2, false);
        assert!(r.trace.samples.iter().all(|s| s.source == 0.0));
        assert!(f2_identity_residual(&r.trace).unwrap() < 1e-10);
        let mut short = r.trace.clone();
        short.samples.truncate(4);
        assert!(f2_identity_residual(&short).is_err());
    }

    #[test]
    fn kato_examples() {
        assert!(matches!(
            kato_ode_integrate(2.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1e4).unwrap(),
            KatoOutcome::Escape { t_est } if t_est.is_finite() && t_est > 0.0
        ));
        assert!(matches!(
            kato_ode_integrate(2.0, 6.0, 1.0, 1.0, 1.0, 1.0, 1e4).unwrap(),
            KatoOutcome::Bounded { t_end, .. } if t_end >= 1e4
        ));
        assert_eq!(
            kato_ode_integrate(2.0, 2.0, 1.0, 0.0, 0.0, 1.0, 1e4).unwrap(),
            KatoOutcome::Bounded { t_end: 1e4, f_end: 0.0 }
        );
        assert!(kato_ode_integrate(1.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1e4).is_err());
    }

    #[test]
    fn kato_escape_time_matches_closed_form() {
        // q = 0, F0' = √(2/3) F0^(3/2): F = (F0^(−1/2) − t/√6)^(−2)
        let f0: f64 = 1.0;
        let exact = 6f64.sqrt() / f0.sqrt();
        match kato_ode_integrate(2.0, 0.0, 1.0, f0, (2.0f64 / 3.0).sqrt(), 1.0, 10.0).unwrap() {
            KatoOutcome::Escape { t_est } => assert!((t_est - exact).abs() < 1e-4, "{t_est} vs {exact}"),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn kato_frontier_small_data() {
        for &p in &[1.5, 2.0, 2.5, 3.0, 3.5] {
            for &q in &[1.0, 2.0, 3.0, 4.0, 5.0] {
                let margin: f64 = (p - 1.0) - (q - 2.0);
                if margin.abs() < 0.25 {
                    continue;
                }
                let escaped = matches!(kato_ode_integrate(p, q, 1.0, 0.1, 0.1, 1.0, 1e10).unwrap(), KatoOutcome::Escape { .. });
                assert_eq!(escaped, kato_condition(p, q, 1.0), "p={p} q={q}");
            }
        }
    }

    #[test]
    fn f1_bound_holds_after_onset() {
        let params = ModelParams::new(1, 0.5, 2.0, Nonlinearity::AbsPow, 6.0, Start::CauchyAtOne);
        let (r, _, _) = run_1d(201, 8.0, &params, 0.5, 2, true);
        let c = f1_lower_bound_check(&r.trace, 0.5, 1.0 / 16.0).unwrap();
        let onset = c.t_onset.expect("bound never settles");
        assert!(onset < params.horizon);
        assert!(c.fitted_constant >= 1.0 / 16.0 && c.hypothesis > 0.0);
        let after = r.trace.samples.iter().filter(|s| s.t >= onset);
        assert!(after.clone().count() > 10);
        assert!(after.clone().all(|s| s.f1 >= s.t.sqrt() * c.hypothesis / 16.0));
    }

    #[test]
    fn f1_check_rejects_bad_inputs() {
        let params = ModelParams::new(1, 0.5, 2.0, Nonlinearity::AbsPow, 3.0, Start::CauchyAtOne);
        let (r, _, _) = run_1d(101, 8.0, &params, 0.0, 2, true);
        assert!(f1_lower_bound_check(&r.trace, 0.5, 1.0 / 16.0).is_err());
        let mut other = r.trace.clone();
        other.params.start = Start::SingularAtZero { eps: 1e-3 };
        assert!(f1_lower_bound_check(&other, 0.5, 1.0 / 16.0).is_err());
    }

    #[test]
    fn singular_start_f1_grows_like_t_two_thirds() {
        let g = GridSpec::tensor(1, 10.0, 401).unwrap();
        let a = EllipticOperator::flat(1, 1.0).unwrap();
        let phi = eigenfunction(&a, &g).unwrap().values;
        let phi1 = GridField::bump(g, 1.0, 0.2);
        let params = ModelParams::new(1, EDS_K, 3.0, Nonlinearity::AbsPow, 20.0, Start::SingularAtZero { eps: 1e-4 });
        let (st, _) = init_weighted(&params, &a, &GridField::zeros(g), &phi1).unwrap();
        let opts = RunOptions {
            test_weight: Some(phi.clone()),
            sample_stride: 4,
            ..Default::default()
        };
        let r = run(st, &params, &a, &opts).unwrap();
        let m1 = a.discretize(&g).unwrap().inner(&phi1.values, &phi.values);
        let ratios: Vec<f64> = r
            .trace
            .samples
            .iter()
            .filter(|s| s.t > 1.5)
            .map(|s| s.f1 / ((9.0 * s.t.powf(2.0 / 3.0) - 1.0) * m1))
            .collect();
        assert!(ratios.len() > 10);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(lo > 0.0, "{lo}");
    }

    #[test]
    fn cone_contains_linear_and_semilinear_runs() {
        for (nl, p) in [(Nonlinearity::None, 2.0), (Nonlinearity::AbsPow, 2.0)] {
            let params = ModelParams::new(1, EDS_K, p, nl, 20.0, Start::CauchyAtOne);
            let (r, g, a) = run_1d(401, 10.0, &params, 0.5, 5, false);
            let rep = cone_check(&r.trace, &a, &g, 16.0 * g.spacing);
            assert!(rep.passed, "{nl:?}: {rep:?}");
        }
        let params = ModelParams::new(1, EDS_K, 2.0, Nonlinearity::AbsPow, 5.0, Start::CauchyAtOne);
        let (r, g, a) = run_1d(101, 10.0, &params, 0.0, 5, false);
        assert!(cone_check(&r.trace, &a, &g, 0.0).passed);
    }

    #[test]
    fn cone_radius_follows_characteristic_time() {
        let params = ModelParams::new(1, EDS_K, 2.0, Nonlinearity::None, 8.0, Start::CauchyAtOne);
        let (r, g, a) = run_1d(401, 10.0, &params, 1.0, 5, false);
        // a cone narrower than 3(t^(1/3) − 1) by a few cells must be violated
        let mut narrow = r.trace.clone();
        narrow.params.k = 0.9;
        assert!(!cone_check(&narrow, &a, &g, 0.0).passed);
        assert!(cone_check(&r.trace, &a, &g, 16.0 * g.spacing).passed);
    }

    #[test]
    fn mass_stays_above_the_linear_bound() {
        let params = ModelParams::new(1, EDS_K, 2.0, Nonlinearity::AbsPow, 10.0, Start::CauchyAtOne);
        let (r, _, _) = run_1d(201, 10.0, &params, 0.3, 3, false);
        let tr = &r.trace;
        assert!(tr.c0 > 0.0 && tr.c1 >= 0.0);
        for s in &tr.samples {
            assert!(s.f >= tr.c0 + tr.c1 * (s.t - tr.t0) - 1e-8, "t={} F={}", s.t, s.f);
        }
        assert!(holder_excess(tr) <= 1e-12);
    }

    #[test]
    fn acceleration_detector() {
        let ts: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        assert!(accelerating(&synthetic(&ts, |t| (2.0 * t).exp())));
        assert!(!accelerating(&synthetic(&ts, |t| 1.0 + t)));
        assert!(!accelerating(&synthetic(&ts, |t| 10.0 - t * t)));
        assert!(!accelerating(&[]));
    }

    fn sweep_setup() -> SweepSetup {
        SweepSetup {
            operator: EllipticOperator::flat(1, 1.0).unwrap(),
            grid: GridSpec::tensor(1, 10.0, 201).unwrap(),
            bump_radius: 1.0,
            sample_stride: 5,
        }
    }

    #[test]
    fn sweep_rows_keep_input_order() {
        let setup = sweep_setup();
        let grid: Vec<ModelParams> = [1.5, 2.0, 8.0, 1.5]
            .iter()
            .map(|&p| ModelParams::new(1, EDS_K, p, Nonlinearity::AbsPow, 50.0, Start::CauchyAtOne))
            .collect();
        let rows = classify_sweep(&setup, &grid, 0.5);
        assert_eq!(rows.len(), 4);
        for (row, p) in rows.iter().zip(&grid) {
            assert_eq!(row.params, *p);
        }
        assert_eq!(rows[0].observed, Observed::Blowup);
        assert_eq!(rows[2].observed, Observed::ReachedHorizon);
        assert_eq!(rows[0], rows[3]);
        assert_eq!(rows[0].predicted, Prediction::Blowup);
    }

    #[test]
    fn linear_sweep_rows_reach_horizon() {
        let setup = sweep_setup();
        let grid: Vec<ModelParams> = [0.3, 0.5, EDS_K]
            .iter()
            .map(|&k| ModelParams::new(1, k, 2.0, Nonlinearity::None, 10.0, Start::CauchyAtOne))
            .collect();
        for row in classify_sweep(&setup, &grid, 1.0) {
            assert_eq!(row.observed, Observed::ReachedHorizon);
            assert_eq!(row.predicted, Prediction::NoPrediction);
        }
    }

    #[test]
    fn longer_horizon_keeps_blowup() {
        let setup = sweep_setup();
        let base = ModelParams::new(1, EDS_K, 2.0, Nonlinearity::AbsPow, 30.0, Start::CauchyAtOne);
        let twice = ModelParams { horizon: 60.0, ..base };
        let rows = classify_sweep(&setup, &[base, twice], 0.5);
        assert_eq!(rows[0].observed, Observed::Blowup);
        assert_eq!(rows[1].observed, Observed::Blowup);
    }

    #[test]
    fn failed_points_are_recorded() {
        let setup = sweep_setup();
        let bad = ModelParams::new(2, EDS_K, 2.0, Nonlinearity::AbsPow, 10.0, Start::CauchyAtOne);
        let row = classify_point(&setup, &bad, 0.5);
        assert_eq!(row.observed, Observed::Failed);
        assert!(row.error.is_some());
    }
}
