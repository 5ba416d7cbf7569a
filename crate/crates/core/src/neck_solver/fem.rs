use std::sync::Arc;

use super::{AxisCondition, BoundaryData, Field2D, Grid2D};
use crate::error::{Error, Result};
use crate::geometry::ProblemConfig;
use crate::linalg::{solve_spd, CsrMatrix, SolveStats, TripletBuilder};

/// Relative residual demanded of every mode solve.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

const G3_X: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
const G3_W: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
const G2_X: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];
const G2_W: [f64; 2] = [0.5, 0.5];

type PlaneFn<'a> = &'a (dyn Fn(f64, f64) -> f64 + Sync);
type EdgeFn<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

/// Extra data for manufactured problems. Every function takes flattened
/// coordinates.
#[derive(Clone, Copy, Default)]
pub struct Forcing<'a> {
    /// Right-hand side `s(ρ, y_n)` of the mode equation.
    pub source: Option<PlaneFn<'a>>,
    /// Outward conormal flux on `y_n = ε`, as a function of `ρ`.
    pub top: Option<EdgeFn<'a>>,
    /// Outward conormal flux on `y_n = -ε`.
    pub bottom: Option<EdgeFn<'a>>,
    /// Dirichlet values `(ρ, y_n) ↦ W` on the lateral face and, for
    /// `k ≥ 1`, on the axis; replaces the boundary data when set.
    pub dirichlet: Option<PlaneFn<'a>>,
}

/// A solved mode with its solver diagnostics.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    pub field: Field2D,
    pub stats: SolveStats,
    /// Mismatch between the boundary reactions and the volume balance,
    /// relative to the size of the terms being balanced.
    pub flux_defect: f64,
    pub unknowns: usize,
}

/// Solves the mode problem with the given boundary data and no forcing.
pub fn assemble_and_solve_mode(cfg: &ProblemConfig, grid: &Arc<Grid2D>, bc: &BoundaryData) -> Result<ModeSolution> {
    solve_mode(cfg, grid, bc, &Forcing::default())
}

struct Assembled {
    matrix: CsrMatrix,
    load: Vec<f64>,
    /// `∫ ρ^{m-2} λ g φ_i`, the image of the constant function under the
    /// zero-order part, with the sum over test functions already taken.
    mass_weight: Vec<f64>,
}

#[inline]
fn weight(m: i32, rho: f64) -> f64 {
    if m == 0 {
        1.0
    } else {
        rho.powi(m)
    }
}

fn assemble(cfg: &ProblemConfig, grid: &Grid2D, forcing: &Forcing) -> Assembled {
    let nr = grid.nr();
    let nz = grid.nz();
    let neck = grid.neck();
    let m = cfg.n as i32 - 2;
    let lambda = cfg.eigenvalue();
    let mut tb = TripletBuilder::with_capacity(grid.len(), 16 * grid.len());
    let mut load = vec![0.0; grid.len()];
    let mut mass_weight = vec![0.0; grid.len()];
    let rho = grid.radial();
    let z = grid.vertical();
    for i in 0..nr - 1 {
        let hr = rho[i + 1] - rho[i];
        for j in 0..nz - 1 {
            let hz = z[j + 1] - z[j];
            let ids = [
                grid.index(i, j),
                grid.index(i + 1, j),
                grid.index(i, j + 1),
                grid.index(i + 1, j + 1),
            ];
            let mut ke = [[0.0; 4]; 4];
            let mut fe = [0.0; 4];
            let mut me = [0.0; 4];
            for (&xi, &wx) in G3_X.iter().zip(&G3_W) {
                let r = rho[i] + xi * hr;
                let wr = weight(m, r);
                for (&eta, &wz) in G2_X.iter().zip(&G2_W) {
                    let yn = z[j] + eta * hz;
                    let c = neck.radial_coefficients(r, yn);
                    let jw = wx * wz * hr * hz * wr;
                    let shape = [(1.0 - xi) * (1.0 - eta), xi * (1.0 - eta), (1.0 - xi) * eta, xi * eta];
                    let dr = [-(1.0 - eta) / hr, (1.0 - eta) / hr, -eta / hr, eta / hr];
                    let dz = [-(1.0 - xi) / hz, -xi / hz, (1.0 - xi) / hz, xi / hz];
                    let react = if lambda != 0.0 { lambda * c.g / (r * r) } else { 0.0 };
                    let s = forcing.source.map_or(0.0, |f| f(r, yn));
                    for a in 0..4 {
                        for b in 0..4 {
                            let grad = c.g * dr[a] * dr[b]
                                + c.alpha * (dr[a] * dz[b] + dz[a] * dr[b])
                                + c.beta * dz[a] * dz[b];
                            ke[a][b] += jw * (grad + react * shape[a] * shape[b]);
                        }
                        fe[a] += jw * s * shape[a];
                        me[a] += jw * react * shape[a];
                    }
                }
            }
            for a in 0..4 {
                for b in 0..4 {
                    tb.add(ids[a], ids[b], ke[a][b]);
                }
                load[ids[a]] += fe[a];
                mass_weight[ids[a]] += me[a];
            }
        }
        for (edge, j) in [(forcing.top, nz - 1), (forcing.bottom, 0)] {
            let Some(q) = edge else { continue };
            for (&xi, &wx) in G3_X.iter().zip(&G3_W) {
                let r = rho[i] + xi * hr;
                let flux = wx * hr * weight(m, r) * q(r);
                load[grid.index(i, j)] += flux * (1.0 - xi);
                load[grid.index(i + 1, j)] += flux * xi;
            }
        }
    }
    Assembled {
        matrix: tb.build(),
        load,
        mass_weight,
    }
}

/// Solves the mode problem with optional manufactured forcing.
pub fn solve_mode(
    cfg: &ProblemConfig,
    grid: &Arc<Grid2D>,
    bc: &BoundaryData,
    forcing: &Forcing,
) -> Result<ModeSolution> {
    cfg.validate()?;
    bc.check(cfg)?;
    if cfg.epsilon != grid.epsilon() || cfg.r0 != grid.r0() {
        return Err(Error::Config("grid was built for a different configuration".into()));
    }
    let nr = grid.nr();
    let nz = grid.nz();
    let axis_fixed = bc.axis == AxisCondition::Dirichlet;
    let mut fixed = vec![false; grid.len()];
    let mut values = vec![0.0; grid.len()];
    for j in 0..nz {
        let (rho, yn) = grid.flat(nr - 1, j);
        let idx = grid.index(nr - 1, j);
        fixed[idx] = true;
        values[idx] = match forcing.dirichlet {
            Some(f) => f(rho, yn),
            None => {
                let (r, xn) = grid.physical(nr - 1, j);
                bc.lateral.value(cfg.n, r, xn)
            }
        };
        if axis_fixed {
            let idx = grid.index(0, j);
            fixed[idx] = true;
            values[idx] = forcing.dirichlet.map_or(0.0, |f| f(0.0, yn));
        }
    }

    let sys = assemble(cfg, grid, forcing);
    let mut map = vec![usize::MAX; grid.len()];
    let mut free = Vec::new();
    for (idx, &is_fixed) in fixed.iter().enumerate() {
        if !is_fixed {
            map[idx] = free.len();
            free.push(idx);
        }
    }
    let mut tb = TripletBuilder::with_capacity(free.len(), 9 * free.len());
    let mut rhs = vec![0.0; free.len()];
    for (row, &idx) in free.iter().enumerate() {
        rhs[row] = sys.load[idx];
        for (col, v) in sys.matrix.row(idx) {
            if fixed[col] {
                rhs[row] -= v * values[col];
            } else {
                tb.add(row, map[col], v);
            }
        }
    }
    let reduced = tb.build();
    let (x, stats) = solve_spd(&reduced, &rhs, SOLVE_TOLERANCE)?;
    for (row, &idx) in free.iter().enumerate() {
        values[idx] = x[row];
    }

    // reactions at the Dirichlet nodes against the volume balance
    let applied = sys.matrix.mul(&values);
    let mut reaction = 0.0;
    let mut scale = 0.0;
    for (idx, &is_fixed) in fixed.iter().enumerate() {
        if is_fixed {
            reaction += applied[idx] - sys.load[idx];
            scale += sys.matrix.row(idx).map(|(c, v)| (v * values[c]).abs()).sum::<f64>() + sys.load[idx].abs();
        }
    }
    let volume: f64 = sys.mass_weight.iter().zip(&values).map(|(w, v)| w * v).sum::<f64>()
        - sys.load.iter().sum::<f64>();
    let flux_defect = if scale > 0.0 {
        (reaction - volume).abs() / (scale + volume.abs())
    } else {
        0.0
    };
    let field = Field2D::new(grid.clone(), "U", values)?;
    Ok(ModeSolution {
        field,
        stats,
        flux_defect,
        unknowns: free.len(),
    })
}
