use serde::Serialize;

use super::Field2D;
use crate::error::Result;
use crate::geometry::ProblemConfig;
use crate::radial::{nodal_derivatives, RadialFunction};

/// Trapezoidal average over `y_n ∈ (-ε, ε)` at every radial node.
pub fn vertical_average(field: &Field2D) -> RadialFunction {
    let grid = field.grid();
    let nz = grid.nz();
    let intervals = (nz - 1) as f64;
    let values = (0..grid.nr())
        .map(|i| {
            let inner: f64 = (1..nz - 1).map(|j| field.at(i, j)).sum();
            (inner + 0.5 * (field.at(i, 0) + field.at(i, nz - 1))) / intervals
        })
        .collect();
    RadialFunction::from_values(grid.radial().to_vec(), values, &grid.breaks())
}

/// Nodal partial derivatives `W_ρ` and `W_n` in the flattened chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub d_rho: Vec<f64>,
    pub d_n: Vec<f64>,
}

/// Second-order nodal derivatives, one-sided at the grid boundary and
/// averaged from both sides at `r0`.
pub fn derivatives(field: &Field2D) -> Derivatives {
    let grid = field.grid();
    let (nr, nz) = (grid.nr(), grid.nz());
    let breaks = grid.breaks();
    let mut d_rho = vec![0.0; grid.len()];
    let mut d_n = vec![0.0; grid.len()];
    let mut row = vec![0.0; nr];
    for j in 0..nz {
        for (i, v) in row.iter_mut().enumerate() {
            *v = field.at(i, j);
        }
        let (left, right) = nodal_derivatives(grid.radial(), &row, &breaks);
        for i in 0..nr {
            d_rho[grid.index(i, j)] = 0.5 * (left[i] + right[i]);
        }
    }
    let h = grid.vertical_spacing();
    for i in 0..nr {
        let f = |j: usize| field.at(i, j);
        for j in 0..nz {
            let d = if j == 0 {
                (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
            } else if j == nz - 1 {
                (3.0 * f(j) - 4.0 * f(j - 1) + f(j - 2)) / (2.0 * h)
            } else {
                (f(j + 1) - f(j - 1)) / (2.0 * h)
            };
            d_n[grid.index(i, j)] = d;
        }
    }
    Derivatives { d_rho, d_n }
}

/// Physical `(U_r, U_n)` from flattened derivatives at `(ρ, y_n)`.
#[inline]
pub(crate) fn chain_rule(field: &Field2D, rho: f64, yn: f64, w_rho: f64, w_n: f64) -> (f64, f64) {
    let neck = field.grid().neck();
    (w_rho + w_n * neck.flat_height_dr(rho, yn), w_n * neck.flat_height_dxn(rho))
}

/// Angular `L²` norm of `Du` for `u = U Y_{k,i}`:
/// `(U_r² + U_n² + λ U²/r²)^{1/2}`, with `U/r → U_r` on the axis.
pub fn physical_gradient(cfg: &ProblemConfig, u: f64, u_r: f64, u_n: f64, r: f64) -> f64 {
    let lambda = cfg.eigenvalue();
    let angular = if lambda == 0.0 {
        0.0
    } else if r > 0.0 {
        u / r
    } else {
        u_r
    };
    (u_r * u_r + u_n * u_n + lambda * angular * angular).sqrt()
}

/// Nodal `|Du|` in physical coordinates.
pub fn gradient_field(cfg: &ProblemConfig, field: &Field2D) -> Result<Field2D> {
    let grid = field.grid();
    let d = derivatives(field);
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.nr() {
        for j in 0..grid.nz() {
            let (rho, yn) = grid.flat(i, j);
            let idx = grid.index(i, j);
            let (ur, un) = chain_rule(field, rho, yn, d.d_rho[idx], d.d_n[idx]);
            values.push(physical_gradient(cfg, field.values()[idx], ur, un, rho));
        }
    }
    Field2D::new(grid.clone(), "|Du|", values)
}

/// Mode coefficients of the averaged-equation flux and the two pieces of
/// the radial source `H = A' + B`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxSources {
    /// Vertical average `V`.
    pub average: RadialFunction,
    /// Radial flux `F_r = avg(a^{in} W_n) + e V'`.
    pub flux: RadialFunction,
    /// Angular flux coefficient `e V / ρ`.
    pub angular_flux: RadialFunction,
    pub a: RadialFunction,
    pub b: RadialFunction,
}

/// Vertical flux averages and the sources `A = -F_r/σ` and
/// `B = -2(ρ-r0)₊F_r/σ² - (n-2)F_r/(ρσ) + λ F_ξ/(ρσ)`, `σ = ε + (ρ-r0)₊²`,
/// so that `V'' + bV' - λV/ρ² = A' + B`.
pub fn flux_and_sources(cfg: &ProblemConfig, field: &Field2D) -> FluxSources {
    let grid = field.grid();
    let neck = grid.neck();
    let (nr, nz) = (grid.nr(), grid.nz());
    let breaks = grid.breaks();
    let average = vertical_average(field);
    let d = derivatives(field);
    let m = cfg.n as f64 - 2.0;
    let lambda = cfg.eigenvalue();
    let vprime = nodal_derivatives(grid.radial(), average.values(), &breaks);
    let mut flux = vec![0.0; nr];
    let mut angular = vec![0.0; nr];
    let mut a = vec![0.0; nr];
    let mut b = vec![0.0; nr];
    for i in 0..nr {
        let rho = grid.radial()[i];
        let mut acc = 0.0;
        for j in 0..nz {
            let w = if j == 0 || j == nz - 1 { 0.5 } else { 1.0 };
            let c = neck.radial_coefficients(rho, grid.vertical()[j]);
            acc += w * c.alpha * d.d_n[grid.index(i, j)];
        }
        let e = neck.profile.correction(rho);
        let dv = 0.5 * (vprime.0[i] + vprime.1[i]);
        flux[i] = acc / (nz - 1) as f64 + e * dv;
        angular[i] = if rho > 0.0 { e * average.values()[i] / rho } else { 0.0 };
        let p = neck.profile.excess(rho);
        let sigma = neck.averaged_coefficient(rho);
        a[i] = -flux[i] / sigma;
        b[i] = if rho > 0.0 {
            -2.0 * p * flux[i] / (sigma * sigma) - m * flux[i] / (rho * sigma)
                + lambda * angular[i] / (rho * sigma)
        } else {
            0.0
        };
    }
    let nodes = grid.radial().to_vec();
    FluxSources {
        flux: RadialFunction::from_values(nodes.clone(), flux, &breaks),
        angular_flux: RadialFunction::from_values(nodes.clone(), angular, &breaks),
        a: RadialFunction::from_values(nodes.clone(), a, &breaks),
        b: RadialFunction::from_values(nodes, b, &breaks),
        average,
    }
}

/// Weighted derivative maxima whose boundedness in `ε` mirrors the
/// pointwise bounds on `D_{y'} v` and `D_n v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeBounds {
    /// `max |W_ρ| (ε + (ρ-r0)₊²)^{1/2}`.
    pub lateral: f64,
    /// `max |W_n| ε / (ε + (ρ-r0)₊²)`.
    pub vertical: f64,
}

/// Maxima over nodes with `ρ ≤ rmax`.
pub fn derivative_bounds(field: &Field2D, rmax: f64) -> DerivativeBounds {
    let grid = field.grid();
    let neck = grid.neck();
    let d = derivatives(field);
    let eps = grid.epsilon();
    let mut out = DerivativeBounds {
        lateral: 0.0,
        vertical: 0.0,
    };
    for i in 0..grid.nr() {
        let rho = grid.radial()[i];
        if rho > rmax {
            break;
        }
        let sigma = neck.averaged_coefficient(rho);
        for j in 0..grid.nz() {
            let idx = grid.index(i, j);
            out.lateral = out.lateral.max(d.d_rho[idx].abs() * sigma.sqrt());
            out.vertical = out.vertical.max(d.d_n[idx].abs() * eps / sigma);
        }
    }
    out
}
