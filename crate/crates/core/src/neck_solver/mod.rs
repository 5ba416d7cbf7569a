//! Per-mode solves on the flattened neck.
//!
//! A single mode `u = U(r, x_n) Y_{k,i}(ξ)` of the insulated problem solves
//!
//! ```text
//! U_rr + (n-2)/r U_r + U_nn - k(k+n-3)/r² U = 0
//! ```
//!
//! in the physical neck with zero normal derivative on the two curved walls.
//! In the flattened chart `(ρ, y_n) ∈ (0, 1) × (-ε, ε)` this becomes the
//! divergence-form problem
//!
//! ```text
//! -∂_ρ(ρ^m (g W_ρ + α W_n)) - ∂_n(ρ^m (α W_ρ + β W_n)) + ρ^m λ g W / ρ² = 0
//! ```
//!
//! with `m = n - 2` and the conormal flux `α W_ρ + β W_n` vanishing on the
//! flat faces `y_n = ±ε`. It is discretised with bilinear elements on the
//! tensor grid, which keeps the system symmetric positive definite and makes
//! the wall condition a natural one.

mod export;
mod fem;
mod post;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Neck, ProblemConfig};
use crate::harmonics::sphere_measure;
use crate::radial::{GradingParams, RadialGrid};

pub use export::{read_field_binary, write_field_binary, write_field_csv, FieldHeader, CSV_SCHEMA_VERSION};
pub use fem::{assemble_and_solve_mode, solve_mode, Forcing, ModeSolution};
pub use post::{
    derivative_bounds, derivatives, flux_and_sources, gradient_field, physical_gradient, vertical_average,
    DerivativeBounds, Derivatives, FluxSources,
};

/// Fewest vertical intervals accepted across the gap.
pub const MIN_VERTICAL_INTERVALS: usize = 16;

/// Radial grading plus the number of vertical intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridParams {
    pub radial: GradingParams,
    pub vertical_intervals: usize,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            radial: GradingParams::default(),
            vertical_intervals: 32,
        }
    }
}

impl GridParams {
    /// One level finer in both directions: every radial segment and the
    /// vertical spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            radial: GradingParams {
                refine: self.radial.refine + 1,
                ..self.radial
            },
            vertical_intervals: 2 * self.vertical_intervals,
        }
    }
}

/// Tensor grid on `[0, 1] × [-ε, ε]` in the flattened chart. Radial node 0
/// is the axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    radial: Vec<f64>,
    vertical: Vec<f64>,
    neck: Neck,
    r0: f64,
}

impl Grid2D {
    pub fn new(neck: Neck, radial: &RadialGrid, vertical_intervals: usize) -> Result<Self> {
        if vertical_intervals < MIN_VERTICAL_INTERVALS {
            return Err(Error::Resolution(format!(
                "{vertical_intervals} vertical intervals do not resolve the gap (need {MIN_VERTICAL_INTERVALS})"
            )));
        }
        if radial.len() < 3 {
            return Err(Error::Resolution("radial grid needs at least three nodes".into()));
        }
        let eps = neck.epsilon;
        let m = vertical_intervals;
        let vertical = (0..=m)
            .map(|j| {
                if 2 * j == m {
                    0.0
                } else {
                    eps * (2.0 * j as f64 / m as f64 - 1.0)
                }
            })
            .collect();
        let mut nodes = vec![0.0];
        nodes.extend_from_slice(radial.nodes());
        Ok(Self {
            radial: nodes,
            vertical,
            neck,
            r0: radial.r0(),
        })
    }

    pub fn from_config(cfg: &ProblemConfig, params: &GridParams) -> Result<Self> {
        cfg.validate()?;
        let radial = RadialGrid::graded(cfg.r0, cfg.epsilon, &params.radial)?;
        Self::new(Neck::from_config(cfg), &radial, params.vertical_intervals)
    }

    /// Radial nodes, starting with the axis `ρ = 0` and ending at `1`.
    pub fn radial(&self) -> &[f64] {
        &self.radial
    }

    /// Uniform vertical nodes from `-ε` to `ε`.
    pub fn vertical(&self) -> &[f64] {
        &self.vertical
    }

    pub fn neck(&self) -> &Neck {
        &self.neck
    }

    pub fn epsilon(&self) -> f64 {
        self.neck.epsilon
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn nr(&self) -> usize {
        self.radial.len()
    }

    pub fn nz(&self) -> usize {
        self.vertical.len()
    }

    pub fn len(&self) -> usize {
        self.nr() * self.nz()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn vertical_spacing(&self) -> f64 {
        2.0 * self.epsilon() / (self.nz() - 1) as f64
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nz() + j
    }

    /// Flattened coordinates `(ρ, y_n)` of node `(i, j)`.
    pub fn flat(&self, i: usize, j: usize) -> (f64, f64) {
        (self.radial[i], self.vertical[j])
    }

    /// Physical coordinates `(r, x_n)` of node `(i, j)`.
    pub fn physical(&self, i: usize, j: usize) -> (f64, f64) {
        let (rho, yn) = self.flat(i, j);
        (rho, self.neck.physical_height(rho, yn))
    }

    /// Breakpoints where radial derivatives are taken one-sided.
    pub(crate) fn breaks(&self) -> Vec<f64> {
        if self.r0 > 0.0 {
            vec![self.r0]
        } else {
            Vec::new()
        }
    }
}

/// Nodal values of a scalar on a [`Grid2D`], stored radial-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    grid: Arc<Grid2D>,
    name: String,
    values: Vec<f64>,
}

impl Field2D {
    pub fn new(grid: Arc<Grid2D>, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        let name = name.into();
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Solver(format!("field '{name}' is not finite at node {p}")));
        }
        Ok(Self { grid, name, values })
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: Arc<Grid2D>, name: impl Into<String>, f: F) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nr() {
            for j in 0..grid.nz() {
                let (rho, yn) = grid.flat(i, j);
                values.push(f(rho, yn));
            }
        }
        Self::new(grid, name, values)
    }

    pub fn grid(&self) -> &Arc<Grid2D> {
        &self.grid
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Condition imposed on the axis `ρ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisCondition {
    /// `U = 0`, required for every mode of degree `k ≥ 1`.
    Dirichlet,
    /// Zero radial flux, the symmetry condition of the zero mode.
    Natural,
}

/// Mode coefficient `f̂(1, x_n)` of the boundary data on the lateral face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LateralData {
    Zero,
    Constant { value: f64 },
    /// Coefficient of `φ = x_1` in the degree-one mode.
    X1,
    /// Coefficient of `φ = x_n` in the zero mode.
    Xn,
    /// `Σ c r^p x_n^q` over the listed `[c, p, q]` triples.
    Polynomial { terms: Vec<[f64; 3]> },
}

impl LateralData {
    /// `f̂(r, x_n)` for dimension `n`.
    pub fn value(&self, n: usize, r: f64, xn: f64) -> f64 {
        match self {
            LateralData::Zero => 0.0,
            LateralData::Constant { value } => *value,
            LateralData::X1 => r * (sphere_measure(n) / (n as f64 - 1.0)).sqrt(),
            LateralData::Xn => xn * sphere_measure(n).sqrt(),
            LateralData::Polynomial { terms } => terms
                .iter()
                .map(|t| t[0] * r.powi(t[1] as i32) * xn.powi(t[2] as i32))
                .sum(),
        }
    }
}

/// Lateral Dirichlet data together with the axis condition of the mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub lateral: LateralData,
    pub axis: AxisCondition,
}

impl BoundaryData {
    /// Pairs the lateral data with the axis condition dictated by the mode.
    pub fn for_mode(cfg: &ProblemConfig, lateral: LateralData) -> Result<Self> {
        let axis = if cfg.mode_k == 0 {
            AxisCondition::Natural
        } else {
            AxisCondition::Dirichlet
        };
        let bc = Self { lateral, axis };
        bc.check(cfg)?;
        Ok(bc)
    }

    /// The mode coefficient of `x_1` (for `k = 1`) or `x_n` (for `k = 0`).
    pub fn coordinate(cfg: &ProblemConfig) -> Result<Self> {
        match cfg.mode_k {
            0 => Self::for_mode(cfg, LateralData::Xn),
            1 => Self::for_mode(cfg, LateralData::X1),
            k => Err(Error::Config(format!("no coordinate function has degree {k}"))),
        }
    }

    pub fn zero(cfg: &ProblemConfig) -> Self {
        Self::for_mode(cfg, LateralData::Zero).expect("zero data fits every mode")
    }

    pub fn check(&self, cfg: &ProblemConfig) -> Result<()> {
        let want = if cfg.mode_k == 0 {
            AxisCondition::Natural
        } else {
            AxisCondition::Dirichlet
        };
        if self.axis != want {
            return Err(Error::Config(format!(
                "axis condition {:?} is inconsistent with degree {}",
                self.axis, cfg.mode_k
            )));
        }
        match (&self.lateral, cfg.mode_k) {
            (LateralData::X1, k) if k != 1 => {
                Err(Error::Config(format!("x_1 data belongs to degree 1, not {k}")))
            }
            (LateralData::Xn, k) if k != 0 => {
                Err(Error::Config(format!("x_n data belongs to degree 0, not {k}")))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests;
