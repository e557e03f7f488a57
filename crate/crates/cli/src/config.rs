//! JSON configuration files and their translation into solver inputs.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use edes_lab::grid::{GridField, GridSpec};
use edes_lab::operators::EllipticOperator;
use edes_lab::solver::ModelParams;

use crate::error::CliError;

/// Largest number of grid nodes a config may request.
pub const MAX_NODES: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Exponents,
    Simulate,
    Sweep,
    Picard,
    Verify,
    Special,
}

/// Elliptic part. The dimension comes from `params.n`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorConfig {
    Flat {
        #[serde(default = "one")]
        c: f64,
    },
    Example1 {
        beta: f64,
        r_a: f64,
    },
    Example2 {
        beta: f64,
        r_a: f64,
    },
}

/// Grid layout. A radial grid is posed in `R^n`; a tensor grid has `n` axes.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridConfig {
    Radial { extent: f64, points: usize },
    Tensor { extent: f64, points: usize },
}

/// Initial data: `amplitude·b(x)` and `velocity_amplitude·b(x)` with the bump
/// `b(x) = (1 − |x − center|²/radius²)⁴₊`, each multiplied by
/// `1 + noise·U(−1, 1)` drawn per node from the seeded generator.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default)]
    pub center: [f64; 3],
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub velocity_amplitude: f64,
    #[serde(default)]
    pub noise: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            center: [0.0; 3],
            radius: 1.0,
            amplitude: 1.0,
            velocity_amplitude: 0.0,
            noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// CSV trace (`simulate`) or sweep table (`sweep`).
    pub csv: Option<PathBuf>,
    /// JSON result record.
    pub json: Option<PathBuf>,
}

/// Configuration of `simulate` and `picard`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub params: ModelParams,
    pub operator: OperatorConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_usize")]
    pub sample_stride: usize,
    /// Record `F₁` against the eigenfunction test weight.
    #[serde(default)]
    pub track_f1: bool,
    /// Picard iterations.
    #[serde(default = "eight")]
    pub iterations: usize,
}

/// Configuration of `sweep`: the product `k × p × scales` around `params`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub command: Option<Command>,
    pub params: ModelParams,
    pub operator: OperatorConfig,
    pub grid: GridConfig,
    #[serde(default = "one")]
    pub bump_radius: f64,
    #[serde(default = "ten")]
    pub sample_stride: usize,
    /// Defaults to `[params.k]`.
    #[serde(default)]
    pub k: Vec<f64>,
    pub p: Vec<f64>,
    pub scales: Vec<f64>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn eight() -> usize {
    8
}

fn ten() -> usize {
    10
}

/// Parses JSON, naming the offending key on failure.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            CliError::Validation(format!("config: {inner}"))
        } else {
            CliError::Validation(format!("config key `{path}`: {inner}"))
        }
    })?;
    de.end()
        .map_err(|e| CliError::Validation(format!("config: trailing content: {e}")))?;
    Ok(value)
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn check_command(found: Option<Command>, expected: Command) -> Result<(), CliError> {
    match found {
        Some(c) if c != expected => Err(CliError::Validation(format!(
            "config key `command`: config is for {c:?}, not {expected:?}"
        ))),
        _ => Ok(()),
    }
}

fn invalid(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("config key `{key}`: {msg}"))
}

pub fn build_grid(grid: &GridConfig, n: u32) -> Result<GridSpec, CliError> {
    let spec = match *grid {
        GridConfig::Radial { extent, points } => GridSpec::radial(n, extent, points),
        GridConfig::Tensor { extent, points } => {
            if !(1..=3).contains(&n) {
                return Err(invalid("grid.mode", format!("tensor grids need 1 ≤ n ≤ 3, got n = {n}")));
            }
            GridSpec::tensor(n as usize, extent, points)
        }
    }
    .map_err(|e| invalid("grid", e))?;
    if spec.len() > MAX_NODES {
        return Err(invalid("grid.points", format!("{} nodes exceed the limit {MAX_NODES}", spec.len())));
    }
    Ok(spec)
}

pub fn build_operator(op: &OperatorConfig, grid: &GridSpec) -> Result<EllipticOperator, CliError> {
    let dim = grid.dim();
    let a = match *op {
        OperatorConfig::Flat { c } => EllipticOperator::flat(dim, c),
        OperatorConfig::Example1 { beta, r_a } => EllipticOperator::example1(dim, beta, r_a),
        OperatorConfig::Example2 { beta, r_a } => EllipticOperator::example2(dim, beta, r_a),
    }
    .map_err(|e| invalid("operator", e))?;
    a.validate(grid).map_err(|e| invalid("operator", e))?;
    Ok(a)
}

pub fn build_data(data: &DataConfig, grid: &GridSpec, seed: u64) -> Result<(GridField, GridField), CliError> {
    if !(data.radius > 0.0 && data.radius < grid.extent) {
        return Err(invalid("data.radius", "must lie in (0, grid extent)"));
    }
    if !(0.0..=1.0).contains(&data.noise) {
        return Err(invalid("data.noise", "must lie in [0, 1]"));
    }
    if !data.amplitude.is_finite() || !data.velocity_amplitude.is_finite() {
        return Err(invalid("data.amplitude", "must be finite"));
    }
    if !data.center.iter().all(|c| c.is_finite()) {
        return Err(invalid("data.center", "must be finite"));
    }
    let radial = matches!(grid.mode, edes_lab::grid::GridMode::Radial(_));
    if radial && data.center != [0.0; 3] {
        return Err(invalid("data.center", "radial grids need data centred at the origin"));
    }
    for j in grid.dim()..3 {
        if data.center[j] != 0.0 {
            return Err(invalid("data.center", format!("component {j} exceeds the grid dimension")));
        }
    }
    let (c, r) = (data.center, data.radius);
    let shape = GridField::from_fn(*grid, move |x| {
        let s: f64 = (0..3).map(|j| (x[j] - c[j]).powi(2)).sum::<f64>() / (r * r);
        if s < 1.0 {
            (1.0 - s).powi(4)
        } else {
            0.0
        }
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = |amp: f64| {
        let mut f = shape.scaled(amp);
        if data.noise > 0.0 {
            for v in &mut f.values {
                *v *= 1.0 + data.noise * rng.gen_range(-1.0..1.0);
            }
        }
        f
    };
    let phi0 = field(data.amplitude);
    let phi1 = field(data.velocity_amplitude);
    Ok((phi0, phi1))
}

pub fn validate_params(params: &ModelParams) -> Result<(), CliError> {
    params.validate().map_err(|e| invalid("params", e))
}
