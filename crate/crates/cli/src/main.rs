//! `edes-lab`: exponent tables, special functions, simulations, sweeps,
//! Picard iteration and the built-in check battery.

mod config;
mod error;
mod output;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use edes_lab::exponents::{p0_singular, singular_ratio, ExponentReport, EDS_K};
use edes_lab::operators::s_a;
use edes_lab::solver::{init_cauchy, init_weighted, picard_local_solve, run, Outcome, RunOptions, Start};
use edes_lab::special::testfn::characteristic_time;
use edes_lab::special::{eigenfunction, lambda1, lambda_tilde, lambda_tilde_residual};
use edes_lab::verify::{run_check, CHECKS};

use config::{build_data, build_grid, build_operator, check_command, load, validate_params, Command, RunConfig};
use error::CliError;
use output::{csv_text, emit, num, to_json};

#[derive(Parser)]
#[command(name = "edes-lab", version, about = "Numerical laboratory for semilinear waves with degenerate speed")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Critical exponents for one (n, k) as JSON, or a CSV table over n.
    Exponents {
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, default_value_t = EDS_K)]
        k: f64,
        /// CSV of (n, p0_singular, 1+6/n, ratio) for n in NMIN..=NMAX.
        #[arg(long, num_args = 2, value_names = ["NMIN", "NMAX"])]
        table: Option<Vec<u32>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test-function tables as CSV.
    Special {
        /// CSV of (t, lambda_tilde, residual) on [1, TMAX].
        #[arg(long, num_args = 2, value_names = ["K", "TMAX"], allow_negative_numbers = true)]
        lambda_tilde: Option<Vec<f64>>,
        /// CSV of (k, Lambda1(k)) for k = 0, step, 2·step, … < 1.
        #[arg(long = "Lambda1-sweep", alias = "lambda1-sweep")]
        lambda1_sweep: bool,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs one simulation: CSV trace and JSON outcome record.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.csv`.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Overrides `output.json`; stdout when neither is set.
        #[arg(long)]
        outcome: Option<PathBuf>,
    },
    /// Classifies a grid of (k, p, scale) points; resumable.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Picard iteration for the integral equation; JSON distances.
    Picard {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.json`; stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the built-in check battery and prints PASS/FAIL per check.
    Verify {
        /// Run only these check ids.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("EDES_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Validation(format!("EDES_LAB_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("cannot configure {n} threads: {e}")))
}

fn exponents(n: Option<u32>, k: f64, table: Option<Vec<u32>>, out: Option<&Path>) -> Result<(), CliError> {
    if let Some(range) = table {
        let (lo, hi) = (range[0], range[1]);
        if lo < 1 || hi < lo {
            return Err(CliError::Validation(format!("--table needs 1 ≤ NMIN ≤ NMAX, got {lo} {hi}")));
        }
        let rows = (lo..=hi)
            .map(|n| {
                let nf = f64::from(n);
                Ok(vec![n.to_string(), num(p0_singular(n)?), num(1.0 + 6.0 / nf), num(singular_ratio(nf))])
            })
            .collect::<Result<Vec<_>, edes_lab::Error>>()?;
        emit(out, &csv_text(&["n", "p0_singular", "one_plus_6_over_n", "ratio"], rows)?)?;
        return Ok(());
    }
    let n = n.ok_or_else(|| CliError::Validation("exponents needs --n (or --table NMIN NMAX)".into()))?;
    emit(out, &to_json(&ExponentReport::new(n, k)?))?;
    Ok(())
}

fn special(
    lambda_tilde_args: Option<Vec<f64>>,
    lambda1_sweep: bool,
    points: usize,
    step: f64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    match (lambda_tilde_args, lambda1_sweep) {
        (Some(args), false) => {
            let (k, tmax) = (args[0], args[1]);
            if !(tmax > 1.0) || points < 2 {
                return Err(CliError::Validation("--lambda-tilde needs TMAX > 1 and --points ≥ 2".into()));
            }
            let rows = (0..points)
                .map(|i| {
                    let t = 1.0 + (tmax - 1.0) * i as f64 / (points - 1) as f64;
                    let value = lambda_tilde(k, t)?;
                    // the difference stencil is undefined right next to t = 1
                    let residual = lambda_tilde_residual(k, t).unwrap_or(f64::NAN);
                    Ok(vec![num(t), num(value), num(residual)])
                })
                .collect::<Result<Vec<_>, edes_lab::Error>>()?;
            emit(out, &csv_text(&["t", "lambda_tilde", "residual"], rows)?)?;
        }
        (None, true) => {
            if !(step > 0.0 && step < 1.0) {
                return Err(CliError::Validation("--step must lie in (0, 1)".into()));
            }
            let rows = (0..)
                .map(|i| f64::from(i) * step)
                .take_while(|k| *k < 1.0 - 1e-12)
                .map(|k| Ok(vec![num(k), num(lambda1(k)?)]))
                .collect::<Result<Vec<_>, edes_lab::Error>>()?;
            emit(out, &csv_text(&["k", "Lambda1"], rows)?)?;
        }
        _ => {
            return Err(CliError::Validation(
                "special needs exactly one of --lambda-tilde K TMAX and --Lambda1-sweep".into(),
            ))
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct OutcomeRecord {
    outcome: Outcome,
    t_end: f64,
    steps: u64,
    samples: usize,
    initial_support: f64,
    params: edes_lab::solver::ModelParams,
}

fn simulate(config: &Path, trace: Option<PathBuf>, outcome: Option<PathBuf>) -> Result<(), CliError> {
    let cfg: RunConfig = load(config)?;
    check_command(cfg.command, Command::Simulate)?;
    validate_params(&cfg.params)?;
    if cfg.sample_stride == 0 {
        return Err(CliError::Validation("config key `sample_stride`: must be positive".into()));
    }
    let grid = build_grid(&cfg.grid, cfg.params.n)?;
    let a = build_operator(&cfg.operator, &grid)?;
    let (phi0, phi1) = build_data(&cfg.data, &grid, cfg.seed)?;
    let state = match cfg.params.start {
        Start::SingularAtZero { .. } => {
            let (state, unreliable) = init_weighted(&cfg.params, &a, &phi0, &phi1)?;
            if unreliable {
                eprintln!("warning: ε^(2/3)‖Aφ₀‖ exceeds 0.1‖φ₀‖; the asymptotic start is unreliable");
            }
            state
        }
        Start::CauchyAtOne => init_cauchy(&cfg.params, &phi0, &phi1)?,
    };
    let k = cfg.params.k;
    let reach = phi0.support_radius(1e-12).max(phi1.support_radius(1e-12))
        + (characteristic_time(k, cfg.params.horizon) - characteristic_time(k, state.t)) * s_a(&a, &grid).conservative();
    if reach > grid.extent {
        eprintln!(
            "warning: the light cone reaches radius {reach:.3} by the horizon, beyond the grid extent {}",
            grid.extent
        );
    }
    let options = RunOptions {
        sample_stride: cfg.sample_stride,
        test_weight: if cfg.track_f1 { Some(eigenfunction(&a, &grid)?.values) } else { None },
        ..RunOptions::default()
    };
    let r = run(state, &cfg.params, &a, &options)?;
    let trace_path = trace.or(cfg.output.csv);
    if let Some(path) = &trace_path {
        let rows = r.trace.samples.iter().map(|s| {
            vec![num(s.t), num(s.f), num(s.f1), num(s.support_radius), num(s.max_norm)]
        });
        emit(Some(path), &csv_text(&["t", "F", "F1", "support_radius", "max_norm"], rows)?)?;
    }
    let record = OutcomeRecord {
        outcome: r.outcome,
        t_end: r.state.t,
        steps: r.state.steps as u64,
        samples: r.trace.samples.len(),
        initial_support: r.trace.initial_support,
        params: cfg.params,
    };
    emit(outcome.or(cfg.output.json).as_deref(), &to_json(&record))?;
    if r.outcome == Outcome::StepCollapse {
        return Err(CliError::Numerical("time step collapsed before the horizon".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct PicardRecord {
    alpha: f64,
    iterations: usize,
    distances: Vec<f64>,
    contraction_estimates: Vec<f64>,
    diverged: bool,
}

fn picard(config: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg: RunConfig = load(config)?;
    check_command(cfg.command, Command::Picard)?;
    validate_params(&cfg.params)?;
    if !(1..=100).contains(&cfg.iterations) {
        return Err(CliError::Validation("config key `iterations`: must lie in 1..=100".into()));
    }
    let grid = build_grid(&cfg.grid, cfg.params.n)?;
    let a = build_operator(&cfg.operator, &grid)?;
    let (phi0, phi1) = build_data(&cfg.data, &grid, cfg.seed)?;
    let r = picard_local_solve(&cfg.params, &a, &phi0, &phi1, cfg.iterations)?;
    let record = PicardRecord {
        alpha: cfg.params.p - 1.0,
        iterations: cfg.iterations,
        distances: r.distances,
        contraction_estimates: r.contraction_estimates,
        diverged: r.diverged,
    };
    emit(out.or(cfg.output.json).as_deref(), &to_json(&record))?;
    if record.diverged {
        return Err(CliError::Numerical("Picard iteration diverged".into()));
    }
    Ok(())
}

fn sweep(config: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg: config::SweepConfig = load(config)?;
    check_command(cfg.command, Command::Sweep)?;
    let out = out
        .or_else(|| cfg.output.csv.clone())
        .ok_or_else(|| CliError::Validation("sweep needs --out or `output.csv`".into()))?;
    let s = sweep::run_sweep(&cfg, &out)?;
    eprintln!(
        "{} points, {} computed this run, {} failed; table in {}",
        s.total,
        s.computed,
        s.failed,
        out.display()
    );
    Ok(())
}

fn verify(only: Vec<u8>, json: Option<PathBuf>) -> Result<(), CliError> {
    let ids: Vec<u8> = if only.is_empty() { CHECKS.iter().map(|(id, _)| *id).collect() } else { only };
    if let Some(bad) = ids.iter().find(|id| !CHECKS.iter().any(|(c, _)| c == *id)) {
        return Err(CliError::Validation(format!("unknown check id {bad}; ids run from 1 to {}", CHECKS.len())));
    }
    let mut report = Vec::new();
    for id in ids {
        let c = run_check(id);
        println!("{} {:>2} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name, c.detail);
        report.push(c);
    }
    let failed = report.iter().filter(|c| !c.passed).count();
    println!("{} of {} checks passed", report.len() - failed, report.len());
    if let Some(path) = json {
        output::write_atomic(&path, to_json(&report).as_bytes())?;
    }
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} check(s) failed")));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Cmd::Exponents { n, k, table, out } => exponents(n, k, table, out.as_deref()),
        Cmd::Special {
            lambda_tilde,
            lambda1_sweep,
            points,
            step,
            out,
        } => special(lambda_tilde, lambda1_sweep, points, step, out.as_deref()),
        Cmd::Simulate { config, trace, outcome } => simulate(&config, trace, outcome),
        Cmd::Sweep { config, out } => sweep(&config, out),
        Cmd::Picard { config, out } => picard(&config, out),
        Cmd::Verify { only, json } => verify(only, json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
