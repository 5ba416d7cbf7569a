//! Manufactured solutions for the mode problem and the radial two-point
//! problem, with their errors under grid refinement.

use std::sync::Arc;

use crate::error::Result;
use crate::geometry::ProblemConfig;
use crate::neck_solver::{solve_mode, BoundaryData, Forcing, Grid2D, GridParams};
use crate::radial::{GradingParams, RadialFunction, RadialGrid};
use crate::reduced_ode::{drift, reduce_order_vprime, solve_homogeneous, solve_radial_bvp, Anchor};

/// Parity of the manufactured mode solution in `r`; odd for `k ≥ 1`, even
/// for the zero mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn for_mode(k: usize) -> Self {
        if k == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// `(U, U_r, U_rr, U_x, U_xx)` at physical `(r, x_n)`.
    fn eval(self, r: f64, x: f64) -> [f64; 5] {
        match self {
            Parity::Odd => [
                r * (1.0 + 0.5 * x) + r.powi(3) * x.sin(),
                1.0 + 0.5 * x + 3.0 * r * r * x.sin(),
                6.0 * r * x.sin(),
                0.5 * r + r.powi(3) * x.cos(),
                -r.powi(3) * x.sin(),
            ],
            Parity::Even => {
                let (s, c) = (2.0 * r).sin_cos();
                [c * (1.0 + x) + x * x, -2.0 * s * (1.0 + x), -4.0 * c * (1.0 + x), c + 2.0 * x, 2.0]
            }
        }
    }
}

/// Max nodal error of the mode solve against the manufactured solution,
/// together with the discrete flux defect.
pub fn mode_pde_error(cfg: &ProblemConfig, params: &GridParams) -> Result<(f64, f64)> {
    let parity = Parity::for_mode(cfg.mode_k);
    let g = Arc::new(Grid2D::from_config(cfg, params)?);
    let neck = *g.neck();
    let m = cfg.n as f64 - 2.0;
    let lambda = cfg.eigenvalue();
    let eps = cfg.epsilon;
    let source = move |rho: f64, yn: f64| {
        let x = neck.physical_height(rho, yn);
        let [u, ur, urr, _, uxx] = parity.eval(rho, x);
        -neck.gap(rho).unwrap_or(f64::NAN) * (urr + uxx + m * ur / rho - lambda * u / (rho * rho))
    };
    let top = move |rho: f64| {
        let [_, ur, _, ux, _] = parity.eval(rho, neck.top(rho));
        2.0 * eps * (ux - neck.profile.dh1(rho) * ur)
    };
    let bottom = move |rho: f64| {
        let [_, ur, _, ux, _] = parity.eval(rho, neck.bottom(rho));
        -2.0 * eps * (ux - neck.profile.dh2(rho) * ur)
    };
    let dirichlet = move |rho: f64, yn: f64| parity.eval(rho, neck.physical_height(rho, yn))[0];
    let forcing = Forcing {
        source: Some(&source),
        top: Some(&top),
        bottom: Some(&bottom),
        dirichlet: Some(&dirichlet),
    };
    let sol = solve_mode(cfg, &g, &BoundaryData::zero(cfg), &forcing)?;
    let mut err: f64 = 0.0;
    for i in 0..g.nr() {
        for j in 0..g.nz() {
            let (r, x) = g.physical(i, j);
            err = err.max((sol.field.at(i, j) - parity.eval(r, x)[0]).abs());
        }
    }
    Ok((err, sol.flux_defect))
}

/// A coarse grid for convergence studies.
pub fn coarse_grid() -> GridParams {
    GridParams {
        radial: GradingParams {
            max_spacing: 0.05,
            ..GradingParams::default()
        },
        vertical_intervals: 16,
    }
}

/// Mode-problem errors on `levels` successively halved grids.
pub fn mode_pde_convergence(cfg: &ProblemConfig, levels: usize) -> Result<Vec<f64>> {
    let mut params = coarse_grid();
    let mut out = Vec::with_capacity(levels);
    for _ in 0..levels {
        out.push(mode_pde_error(cfg, &params)?.0);
        params = params.refined();
    }
    Ok(out)
}

/// Errors of the two-point solver for `V* = r^k + (r - r0)₊³` on `[r0/2, 1]`
/// (on `[1/8, 1]` when `r0 = 0`).
pub fn radial_bvp_convergence(cfg: &ProblemConfig, levels: usize) -> Result<Vec<f64>> {
    let r0 = cfg.r0;
    let k = cfg.mode_k as i32;
    let lambda = cfg.eigenvalue();
    let start = if r0 > 0.0 { 0.5 * r0 } else { 0.125 };
    let p = |r: f64| (r - r0).max(0.0);
    let vstar = |r: f64| r.powi(k) + p(r).powi(3);
    let dv = |r: f64| if k == 0 { 0.0 } else { k as f64 * r.powi(k - 1) } + 3.0 * p(r).powi(2);
    let d2v = |r: f64| {
        let base = if k >= 2 { (k * (k - 1)) as f64 * r.powi(k - 2) } else { 0.0 };
        base + 6.0 * p(r)
    };
    let src = |r: f64| d2v(r) + drift(cfg, r).unwrap_or(f64::NAN) * dv(r) - lambda * vstar(r) / (r * r);
    let mut out = Vec::with_capacity(levels);
    for level in 0..levels {
        let params = GradingParams {
            refine: level as u32,
            ..GradingParams::default()
        };
        let grid = RadialGrid::graded(r0, cfg.epsilon, &params)?;
        let mut nodes: Vec<f64> = grid.nodes().iter().copied().filter(|&x| x > start).collect();
        nodes.insert(0, start);
        let sol = solve_radial_bvp(cfg, &nodes, src, vstar(start), vstar(1.0))?;
        out.push(nodes.iter().zip(&sol).map(|(&x, &v)| (v - vstar(x)).abs()).fold(0.0, f64::max));
    }
    Ok(out)
}

/// Errors of the reduction-of-order recovery of `V*' ` for
/// `V* = (r - r0)₊²`, with `A = 2(r-r0)₊ + (r-r0)₊³` and `B = H* - A'`.
pub fn reduce_order_convergence(cfg: &ProblemConfig, levels: usize) -> Result<Vec<f64>> {
    let r0 = cfg.r0;
    let lambda = cfg.eigenvalue();
    let p = |r: f64| (r - r0).max(0.0);
    let hstar = |r: f64| {
        let q = p(r);
        let d2 = if r > r0 { 2.0 } else { 0.0 };
        d2 + drift(cfg, r).unwrap_or(f64::NAN) * 2.0 * q - lambda * q * q / (r * r)
    };
    let mut out = Vec::with_capacity(levels);
    for level in 0..levels {
        let params = GradingParams {
            refine: level as u32,
            ..GradingParams::ode()
        };
        let grid = RadialGrid::graded(r0, cfg.epsilon, &params)?;
        let nodes = grid.nodes().to_vec();
        let h = if cfg.mode_k == 0 {
            crate::reduced_ode::HomogeneousSolution::constant(nodes.clone())
        } else {
            solve_homogeneous(cfg, &grid, None)?
        };
        let av = nodes.iter().map(|&r| 2.0 * p(r) + p(r).powi(3)).collect();
        let bv = nodes
            .iter()
            .map(|&r| {
                let step = if r > r0 { 2.0 } else { 0.0 };
                hstar(r) - step - 3.0 * p(r).powi(2)
            })
            .collect();
        let a = RadialFunction::from_values(nodes.clone(), av, &[r0]);
        let b = RadialFunction::from_values(nodes.clone(), bv, &[r0]);
        let vp = reduce_order_vprime(cfg, &h, &a, &b, Anchor { value: 0.0, slope: 0.0 })?;
        out.push(
            vp.nodes()
                .iter()
                .zip(vp.values())
                .map(|(&x, &v)| (v - 2.0 * p(x)).abs())
                .fold(0.0, f64::max),
        );
    }
    Ok(out)
}

/// Smallest ratio of successive errors.
pub fn min_ratio(errors: &[f64]) -> f64 {
    errors.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min)
}
