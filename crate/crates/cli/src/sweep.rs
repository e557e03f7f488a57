//! Resumable parameter sweeps.
//!
//! Finished rows are appended to `<out>.partial` by a single writer thread
//! as workers complete them. A rerun skips every point whose row is already
//! present in `<out>` or `<out>.partial`. When all points are done, the
//! table is written to `<out>` in input order and the partial file removed.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;

use edes_lab::functionals::{classify_point, Observed, SweepRow, SweepSetup};
use edes_lab::solver::ModelParams;

use crate::config::{build_grid, build_operator, validate_params, SweepConfig};
use crate::error::CliError;
use crate::output::{num, write_atomic};

pub const HEADER: [&str; 7] = ["n", "k", "p", "scale", "outcome", "T_est", "predicted"];

/// Identifies a sweep point in the CSV table.
type Key = (String, String, String, String);

fn key(n: u32, k: f64, p: f64, scale: f64) -> Key {
    (n.to_string(), num(k), num(p), num(scale))
}

fn observed_name(o: Observed) -> &'static str {
    match o {
        Observed::Blowup => "Blowup",
        Observed::ReachedHorizon => "ReachedHorizon",
        Observed::StepCollapse => "StepCollapse",
        Observed::Inconclusive => "Inconclusive",
        Observed::Failed => "Failed",
    }
}

fn row_cells(row: &SweepRow) -> Vec<String> {
    vec![
        row.params.n.to_string(),
        num(row.params.k),
        num(row.params.p),
        num(row.scale),
        observed_name(row.observed).to_string(),
        row.t_est.map_or_else(String::new, num),
        format!("{:?}", row.predicted),
    ]
}

pub fn partial_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Rows already on disk, keyed by point. Incomplete trailing lines are dropped.
fn finished_rows(path: &Path) -> Result<HashMap<Key, Vec<String>>, CliError> {
    let mut rows = HashMap::new();
    if !path.exists() {
        return Ok(rows);
    }
    let text = std::fs::read_to_string(path)?;
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(complete.as_bytes());
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        if record.len() != HEADER.len() {
            continue;
        }
        let cells: Vec<String> = record.iter().map(str::to_string).collect();
        rows.insert(
            (cells[0].clone(), cells[1].clone(), cells[2].clone(), cells[3].clone()),
            cells,
        );
    }
    Ok(rows)
}

/// Summary of a sweep invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepSummary {
    pub total: usize,
    pub computed: usize,
    pub failed: usize,
}

pub fn run_sweep(cfg: &SweepConfig, out: &Path) -> Result<SweepSummary, CliError> {
    let grid = build_grid(&cfg.grid, cfg.params.n)?;
    let operator = build_operator(&cfg.operator, &grid)?;
    if !(cfg.bump_radius > 0.0 && cfg.bump_radius < grid.extent) {
        return Err(CliError::Validation("config key `bump_radius`: must lie in (0, grid extent)".into()));
    }
    if cfg.sample_stride == 0 {
        return Err(CliError::Validation("config key `sample_stride`: must be positive".into()));
    }
    if cfg.p.is_empty() || cfg.scales.is_empty() {
        return Err(CliError::Validation("config keys `p` and `scales` must be non-empty".into()));
    }
    let ks = if cfg.k.is_empty() { vec![cfg.params.k] } else { cfg.k.clone() };
    let mut points: Vec<(ModelParams, f64)> = Vec::new();
    for &k in &ks {
        for &p in &cfg.p {
            for &scale in &cfg.scales {
                if !scale.is_finite() {
                    return Err(CliError::Validation("config key `scales`: entries must be finite".into()));
                }
                let params = ModelParams { k, p, ..cfg.params };
                validate_params(&params)?;
                points.push((params, scale));
            }
        }
    }
    let setup = SweepSetup {
        operator,
        grid,
        bump_radius: cfg.bump_radius,
        sample_stride: cfg.sample_stride,
    };

    let partial = partial_path(out);
    let mut done = finished_rows(out)?;
    done.extend(finished_rows(&partial)?);
    let pending: Vec<&(ModelParams, f64)> = points
        .iter()
        .filter(|(pr, s)| !done.contains_key(&key(pr.n, pr.k, pr.p, *s)))
        .collect();

    // rewrite the partial file with the rows kept so far, then append
    let kept: Vec<Vec<String>> = points
        .iter()
        .filter_map(|(pr, s)| done.get(&key(pr.n, pr.k, pr.p, *s)).cloned())
        .collect();
    write_atomic(&partial, crate::output::csv_text(&HEADER, kept)?.as_bytes())?;

    let (tx, rx) = mpsc::channel::<Vec<String>>();
    let writer = {
        let partial = partial.clone();
        std::thread::spawn(move || -> std::io::Result<()> {
            let mut file = OpenOptions::new().append(true).open(&partial)?;
            for cells in rx {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&cells)?;
                file.write_all(&w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?)?;
                file.flush()?;
            }
            file.sync_all()
        })
    };
    let failed = pending
        .par_iter()
        .map_with(tx, |tx, (params, scale)| {
            let row = classify_point(&setup, params, *scale);
            if let Some(e) = &row.error {
                eprintln!("sweep point k={} p={} scale={}: {e}", params.k, params.p, scale);
            }
            let failed = row.observed == Observed::Failed;
            // a closed channel means the writer died; its error is reported below
            let _ = tx.send(row_cells(&row));
            usize::from(failed)
        })
        .sum::<usize>();
    writer
        .join()
        .map_err(|_| CliError::Numerical("sweep writer thread panicked".into()))??;

    let mut all = finished_rows(&partial)?;
    let rows = points
        .iter()
        .map(|(pr, s)| {
            all.remove(&key(pr.n, pr.k, pr.p, *s))
                .ok_or_else(|| CliError::Numerical(format!("missing sweep row for k={} p={} scale={s}", pr.k, pr.p)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    write_atomic(out, crate::output::csv_text(&HEADER, rows)?.as_bytes())?;
    std::fs::remove_file(&partial)?;
    Ok(SweepSummary {
        total: points.len(),
        computed: pending.len(),
        failed,
    })
}
