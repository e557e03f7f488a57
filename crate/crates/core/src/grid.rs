//! Spatial grids and sampled fields.
//!
//! Two layouts are supported: a radial line `r_i = i·h` carrying the
//! dimension used in the radial Laplacian, and a centred tensor grid
//! `x_i = −L + i·h` in one to three dimensions.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special::gamma::gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridMode {
    /// Radially symmetric functions in `R^n`, sampled on `[0, L]`.
    Radial(u32),
    /// Full tensor grid on `[−L, L]^dim`.
    Tensor(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub mode: GridMode,
    pub extent: f64,
    pub spacing: f64,
    /// Nodes per axis.
    pub points: usize,
}

/// Surface measure of the unit sphere `S^(n−1)`.
pub fn sphere_area(n: u32) -> f64 {
    let half = f64::from(n) / 2.0;
    2.0 * std::f64::consts::PI.powf(half) / gamma(half)
}

/// `∫_lo^hi r^(n−1) dr`.
pub(crate) fn shell_volume(n: u32, lo: f64, hi: f64) -> f64 {
    let nf = f64::from(n);
    (hi.powf(nf) - lo.powf(nf)) / nf
}

impl GridSpec {
    /// Radial grid on `[0, extent]` with `points` nodes.
    pub fn radial(n: u32, extent: f64, points: usize) -> Result<Self> {
        if n < 1 {
            return domain("radial grid needs n ≥ 1");
        }
        if !(extent > 0.0) || points < 3 {
            return domain("radial grid needs a positive extent and at least 3 nodes");
        }
        Ok(Self {
            mode: GridMode::Radial(n),
            extent,
            spacing: extent / (points - 1) as f64,
            points,
        })
    }

    /// Tensor grid on `[−extent, extent]^dim` with `points` nodes per axis.
    pub fn tensor(dim: usize, extent: f64, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return domain(format!("tensor grids support 1 to 3 dimensions, got {dim}"));
        }
        if !(extent > 0.0) || points < 3 {
            return domain("tensor grid needs a positive extent and at least 3 nodes per axis");
        }
        Ok(Self {
            mode: GridMode::Tensor(dim),
            extent,
            spacing: 2.0 * extent / (points - 1) as f64,
            points,
        })
    }

    /// Grid reaching at least `extent` with spacing at most `h`.
    pub fn with_spacing(mode: GridMode, extent: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !(extent > 0.0) {
            return domain("spacing and extent must be positive");
        }
        match mode {
            GridMode::Radial(n) => {
                let cells = (extent / h).ceil().max(2.0) as usize;
                Self::radial(n, cells as f64 * h, cells + 1)
            }
            GridMode::Tensor(d) => {
                let half = (extent / h).ceil().max(1.0) as usize;
                Self::tensor(d, half as f64 * h, 2 * half + 1)
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self.mode {
            GridMode::Radial(_) => 1,
            GridMode::Tensor(d) => d,
        }
    }

    /// Spatial dimension of the physical problem (`n` for radial grids).
    pub fn space_dim(&self) -> u32 {
        match self.mode {
            GridMode::Radial(n) => n,
            GridMode::Tensor(d) => d as u32,
        }
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multi-index of a flat index (last axis fastest).
    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut m = [0; 3];
        for axis in (0..self.dim()).rev() {
            m[axis] = idx % self.points;
            idx /= self.points;
        }
        m
    }

    pub fn flat_index(&self, m: &[usize; 3]) -> usize {
        (0..self.dim()).fold(0, |acc, axis| acc * self.points + m[axis])
    }

    /// Stride of the flat index along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.points.pow((self.dim() - 1 - axis) as u32)
    }

    /// Coordinates of a node; unused axes are zero. Radial grids return `[r, 0, 0]`.
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let mut x = [0.0; 3];
        let origin = match self.mode {
            GridMode::Radial(_) => 0.0,
            GridMode::Tensor(_) => -self.extent,
        };
        for axis in 0..self.dim() {
            x[axis] = origin + m[axis] as f64 * self.spacing;
        }
        x
    }

    /// Distance of a node from the origin.
    pub fn radius(&self, idx: usize) -> f64 {
        let x = self.coords(idx);
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    /// Whether a node sits on the outer boundary, where Dirichlet data live.
    pub fn is_boundary(&self, idx: usize) -> bool {
        let m = self.multi_index(idx);
        match self.mode {
            GridMode::Radial(_) => m[0] == self.points - 1,
            GridMode::Tensor(d) => (0..d).any(|a| m[a] == 0 || m[a] == self.points - 1),
        }
    }

    /// Quadrature weights: product trapezoid on tensor grids; on radial grids
    /// the volume of the shell `r_{i−1/2} ≤ |x| ≤ r_{i+1/2}` around each node.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing;
        match self.mode {
            GridMode::Radial(n) => {
                let area = sphere_area(n);
                let last = self.points - 1;
                (0..self.points)
                    .map(|i| {
                        let lo = if i == 0 { 0.0 } else { (i as f64 - 0.5) * h };
                        let hi = if i == last { i as f64 * h } else { (i as f64 + 0.5) * h };
                        area * shell_volume(n, lo, hi)
                    })
                    .collect()
            }
            GridMode::Tensor(d) => (0..self.len())
                .map(|idx| {
                    let m = self.multi_index(idx);
                    (0..d).fold(1.0, |acc, a| {
                        let edge = m[a] == 0 || m[a] == self.points - 1;
                        acc * if edge { 0.5 * h } else { h }
                    })
                })
                .collect(),
        }
    }
}

/// Scalar field sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![0.0; spec.len()],
        }
    }

    pub fn from_fn<F: Fn(&[f64; 3]) -> f64>(spec: GridSpec, f: F) -> Self {
        let values = (0..spec.len()).map(|i| f(&spec.coords(i))).collect();
        Self { spec, values }
    }

    /// `amplitude · (1 − |x|²/R²)⁴` inside the ball of radius `R`, zero outside.
    pub fn bump(spec: GridSpec, radius: f64, amplitude: f64) -> Self {
        Self::from_fn(spec, |x| {
            let s = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (radius * radius);
            if s < 1.0 {
                amplitude * (1.0 - s).powi(4)
            } else {
                0.0
            }
        })
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                spec.len()
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn check_same_grid(&self, other: &GridField) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &GridField) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            spec: self.spec,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect(),
        })
    }

    /// Plain quadrature `Σ w_i f_i`.
    pub fn integral(&self) -> f64 {
        self.spec.weights().iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }

    /// Smallest origin-centred ball containing every node with
    /// `|u| > rel · max|u|`; zero for the zero field.
    pub fn support_radius(&self, rel: f64) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        let cut = rel * m;
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > cut)
            .fold(0.0, |r, (i, _)| r.max(self.spec.radius(i)))
    }
}
