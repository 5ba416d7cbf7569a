//! ε-sweeps of the mode solve, gradient maxima, local oscillation ratios and
//! log-log exponent fits.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ProblemConfig;
use crate::harmonics::{circle_harmonic, circle_harmonic_dtheta, ModeIndex};
use crate::neck_solver::{
    assemble_and_solve_mode, derivative_bounds, derivatives, flux_and_sources, gradient_field, vertical_average,
    BoundaryData, Field2D, Grid2D, GridParams, LateralData, CSV_SCHEMA_VERSION,
};
use crate::radial::{locate, nodal_derivatives, GradingParams, RadialFunction, RadialGrid};
use crate::reduced_ode::{reduce_order, solve_homogeneous, Anchor, HomogeneousSolution};

/// Largest radius over which gradient maxima are taken.
pub const SUP_RADIUS: f64 = 0.75;

/// One ε of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub epsilon: f64,
    pub sup_grad: f64,
    pub r_star: f64,
    pub xn_star: f64,
    pub osc_ratio: f64,
    pub residual: f64,
    pub flux_defect: f64,
    pub unknowns: usize,
    /// `max |W_ρ| (ε + (ρ-r0)₊²)^{1/2}` over `ρ ≤ 3/4`.
    pub lateral_bound: f64,
    /// `max |W_n| ε / (ε + (ρ-r0)₊²)` over `ρ ≤ 3/4`.
    pub vertical_bound: f64,
    /// Zero unless timing was requested.
    pub wall_ms: u64,
}

/// Least-squares line `log sup_grad = intercept + s log(1/ε)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

/// Maximum of a gradient field over nodes with `ρ ≤ 3/4`, with its
/// physical location `(r, x_n)`.
pub fn sup_gradient(grad: &Field2D) -> (f64, (f64, f64)) {
    let grid = grad.grid();
    let mut best = (f64::NEG_INFINITY, (0.0, 0.0));
    for i in 0..grid.nr() {
        if grid.radial()[i] > SUP_RADIUS {
            break;
        }
        for j in 0..grid.nz() {
            let v = grad.at(i, j);
            if v > best.0 {
                best = (v, grid.physical(i, j));
            }
        }
    }
    best
}

/// A probe point on the midline `y_n = 0` at radius `rho` and angle `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub rho: f64,
    pub theta: f64,
}

const PROBE_ANGLE: f64 = PI / 8.0;

/// 32 probes log-spaced in `(ρ - r0)₊` from `√ε` to `1/2` plus 8 on the flat
/// cap. With a seed, the probe angles are jittered reproducibly.
pub fn probe_set(cfg: &ProblemConfig, seed: Option<u64>) -> Vec<Probe> {
    let lo = cfg.epsilon.sqrt().ln();
    let hi = 0.5f64.ln();
    let mut radii: Vec<f64> = (0..32)
        .map(|j| cfg.r0 + (lo + (hi - lo) * j as f64 / 31.0).exp())
        .collect();
    if cfg.r0 > 0.0 {
        radii.extend((0..8).map(|j| cfg.r0 * (j as f64 + 0.5) / 8.0));
    }
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);
    radii
        .into_iter()
        .map(|rho| {
            let theta = match rng.as_mut() {
                Some(r) => r.gen_range(0.0..2.0 * PI),
                None => PROBE_ANGLE,
            };
            Probe { rho, theta }
        })
        .collect()
}

/// Outcome of [`oscillation_ratio`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationReport {
    pub max_ratio: f64,
    /// Ratio per evaluated probe, `None` where the cylinder left the grid.
    pub ratios: Vec<Option<f64>>,
    pub skipped: usize,
}

/// Values of the angular factor and its derivative on `S^{n-2}` at `theta`
/// (for `n = 2`, `theta` selects the sign of `x_1`).
fn angular(cfg: &ProblemConfig, theta: f64) -> Result<(f64, f64)> {
    let mode = ModeIndex::new(cfg.mode_k, cfg.mode_i);
    match cfg.n {
        3 => Ok((circle_harmonic(mode, theta), circle_harmonic_dtheta(mode, theta))),
        2 => {
            let sign = if theta.cos() >= 0.0 { 1.0 } else { -1.0 };
            let y = if cfg.mode_k == 0 { 1.0 } else { sign };
            Ok((y / 2f64.sqrt(), 0.0))
        }
        n => Err(Error::UnsupportedDimension(n)),
    }
}

fn interp_row(grid: &Grid2D, values: &[f64], j: usize, rho: f64) -> f64 {
    let nodes = grid.radial();
    let i = locate(nodes, rho);
    let t = (rho - nodes[i]) / (nodes[i + 1] - nodes[i]);
    (1.0 - t) * values[grid.index(i, j)] + t * values[grid.index(i + 1, j)]
}

const DISK_RINGS: usize = 8;
const RING_POINTS: usize = 32;

/// `max_p |Du(p)| (ε + (ρ_p - r0)₊²)^{1/2} / osc_{C_p} u` over the probes,
/// where `C_p` is the cylinder of radius `(ε + (ρ_p - r0)₊²)^{1/2}/4` about
/// `p` spanning the whole gap. A probe whose cylinder leaves `|y'| ≤ 1` is
/// skipped.
pub fn oscillation_ratio(field: &Field2D, cfg: &ProblemConfig, probes: &[Probe]) -> Result<OscillationReport> {
    let grid = field.grid();
    let neck = grid.neck();
    let d = derivatives(field);
    let mid = grid.nz() / 2;
    let mut ratios = Vec::with_capacity(probes.len());
    let mut skipped = 0;
    let mut max_ratio: f64 = 0.0;
    for p in probes {
        let sigma = neck.averaged_coefficient(p.rho);
        let eta = 0.25 * sigma.sqrt();
        if p.rho + eta > 1.0 || p.rho <= 0.0 {
            skipped += 1;
            ratios.push(None);
            continue;
        }
        // sample points of the disk (or interval) as (ρ, θ)
        let mut points = Vec::new();
        if cfg.n == 2 {
            let x0 = p.rho * if p.theta.cos() >= 0.0 { 1.0 } else { -1.0 };
            for a in 0..=2 * DISK_RINGS * 4 {
                let x = x0 + eta * (a as f64 / (4 * DISK_RINGS) as f64 - 1.0);
                points.push((x.abs(), if x >= 0.0 { 0.0 } else { PI }));
            }
        } else {
            let (cx, cy) = (p.rho * p.theta.cos(), p.rho * p.theta.sin());
            points.push((p.rho, p.theta));
            for a in 1..=DISK_RINGS {
                let s = eta * a as f64 / DISK_RINGS as f64;
                for b in 0..RING_POINTS {
                    let phi = 2.0 * PI * b as f64 / RING_POINTS as f64;
                    let (x, y) = (cx + s * phi.cos(), cy + s * phi.sin());
                    points.push(((x * x + y * y).sqrt(), y.atan2(x)));
                }
            }
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &(rho, theta) in &points {
            let (y, _) = angular(cfg, theta)?;
            for j in 0..grid.nz() {
                let u = interp_row(grid, field.values(), j, rho) * y;
                lo = lo.min(u);
                hi = hi.max(u);
            }
        }
        let osc = hi - lo;
        let w = interp_row(grid, field.values(), mid, p.rho);
        let w_rho = interp_row(grid, &d.d_rho, mid, p.rho);
        let w_n = interp_row(grid, &d.d_n, mid, p.rho);
        let u_r = w_rho + w_n * neck.flat_height_dr(p.rho, 0.0);
        let u_n = w_n * neck.flat_height_dxn(p.rho);
        let (y, dy) = angular(cfg, p.theta)?;
        let grad = ((u_r * u_r + u_n * u_n) * y * y + (w * dy / p.rho).powi(2)).sqrt();
        let ratio = if osc < 1e-14 && grad < 1e-14 {
            0.0
        } else {
            grad * sigma.sqrt() / osc
        };
        max_ratio = max_ratio.max(ratio);
        ratios.push(Some(ratio));
    }
    Ok(OscillationReport {
        max_ratio,
        ratios,
        skipped,
    })
}

/// Everything needed to run a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabConfig {
    pub problem: ProblemConfig,
    pub grid: GridParams,
    pub lateral: LateralData,
    /// Seed for probe-angle jitter; `None` keeps every probe at `θ = π/8`.
    pub seed: Option<u64>,
    /// Record wall-clock times (breaks byte-for-byte reproducibility).
    pub timing: bool,
}

impl LabConfig {
    /// The coordinate data of the configured mode on the default grid.
    pub fn new(problem: ProblemConfig) -> Result<Self> {
        let lateral = BoundaryData::coordinate(&problem)?.lateral;
        Ok(Self {
            problem,
            grid: GridParams::default(),
            lateral,
            seed: None,
            timing: false,
        })
    }
}

/// A solve together with its derived quantities.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub record: SweepRecord,
    pub field: Field2D,
    pub gradient: Field2D,
    pub oscillation: OscillationReport,
}

/// Solves one configuration and measures it.
pub fn run_single(lab: &LabConfig) -> Result<SolveReport> {
    let start = Instant::now();
    let cfg = &lab.problem;
    cfg.validate()?;
    let grid = Arc::new(Grid2D::from_config(cfg, &lab.grid)?);
    let bc = BoundaryData::for_mode(cfg, lab.lateral.clone())?;
    let sol = assemble_and_solve_mode(cfg, &grid, &bc)?;
    let gradient = gradient_field(cfg, &sol.field)?;
    let (sup_grad, (r_star, xn_star)) = sup_gradient(&gradient);
    let oscillation = match cfg.n {
        2 | 3 => oscillation_ratio(&sol.field, cfg, &probe_set(cfg, lab.seed))?,
        _ => OscillationReport {
            max_ratio: f64::NAN,
            ratios: Vec::new(),
            skipped: 0,
        },
    };
    let bounds = derivative_bounds(&sol.field, SUP_RADIUS);
    let wall_ms = if lab.timing { start.elapsed().as_millis() as u64 } else { 0 };
    Ok(SolveReport {
        record: SweepRecord {
            epsilon: cfg.epsilon,
            sup_grad,
            r_star,
            xn_star,
            osc_ratio: oscillation.max_ratio,
            residual: sol.stats.residual,
            flux_defect: sol.flux_defect,
            unknowns: sol.unknowns,
            lateral_bound: bounds.lateral,
            vertical_bound: bounds.vertical,
            wall_ms,
        },
        field: sol.field,
        gradient,
        oscillation,
    })
}

/// A sweep stopped by a failed solve; `completed` holds the records that
/// succeeded, in input order.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("sweep failed at epsilon = {epsilon}: {error}")]
pub struct SweepFailure {
    pub epsilon: f64,
    pub error: Error,
    pub completed: Vec<SweepRecord>,
}

/// Checks that the list is nonempty, strictly decreasing and inside `(0, 1/4)`.
pub fn check_epsilons(epsilons: &[f64]) -> Result<()> {
    if epsilons.is_empty() {
        return Err(Error::Config("epsilon list is empty".into()));
    }
    for &e in epsilons {
        if !(e > 0.0 && e < 0.25) {
            return Err(Error::Config(format!("epsilon must be < 1/4 and positive, got {e}")));
        }
    }
    for w in epsilons.windows(2) {
        if w[1] == w[0] {
            return Err(Error::Config(format!("duplicate epsilon {}", w[0])));
        }
        if w[1] > w[0] {
            return Err(Error::Config("epsilon values must be strictly decreasing".into()));
        }
    }
    Ok(())
}

/// Runs every ε in parallel; records come back in input order.
pub fn sweep(template: &LabConfig, epsilons: &[f64]) -> std::result::Result<Vec<SweepRecord>, SweepFailure> {
    if let Err(error) = check_epsilons(epsilons) {
        return Err(SweepFailure {
            epsilon: f64::NAN,
            error,
            completed: Vec::new(),
        });
    }
    let results: Vec<Result<SweepRecord>> = epsilons
        .par_iter()
        .map(|&eps| {
            let lab = LabConfig {
                problem: template.problem.with_epsilon(eps),
                ..template.clone()
            };
            run_single(&lab).map(|r| r.record)
        })
        .collect();
    let mut completed = Vec::new();
    let mut failure = None;
    for (res, &eps) in results.into_iter().zip(epsilons) {
        match res {
            Ok(r) => completed.push(r),
            Err(e) if failure.is_none() => failure = Some((eps, e)),
            Err(_) => {}
        }
    }
    match failure {
        None => Ok(completed),
        Some((epsilon, error)) => Err(SweepFailure {
            epsilon,
            error,
            completed,
        }),
    }
}

/// Ordinary least squares of `log sup_grad` against `log(1/ε)`.
pub fn fit_exponent(records: &[SweepRecord]) -> Result<FitResult> {
    if records.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 records, got {}", records.len())));
    }
    if let Some(r) = records.iter().find(|r| !(r.sup_grad > 0.0)) {
        return Err(Error::Fit(format!("sup_grad {} at epsilon {} is not positive", r.sup_grad, r.epsilon)));
    }
    let xs: Vec<f64> = records.iter().map(|r| -r.epsilon.ln()).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.sup_grad.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 1e-24 * (1.0 + mx * mx) {
        return Err(Error::Fit("all epsilon values are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - intercept - exponent * x).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(FitResult {
        exponent,
        intercept,
        r_squared,
        residuals,
    })
}

/// `(max - min) / min` of the sup-gradient values.
pub fn spread(records: &[SweepRecord]) -> f64 {
    let hi = records.iter().map(|r| r.sup_grad).fold(f64::NEG_INFINITY, f64::max);
    let lo = records.iter().map(|r| r.sup_grad).fold(f64::INFINITY, f64::min);
    (hi - lo) / lo
}

/// Comparison of `V'` from the averaged PDE solution with the reduction of
/// order driven by the measured sources.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheck {
    /// `max |V'_ode - V'_pde| / max |V'_pde|` over `[r0/2, 3/4]`.
    pub relative_error: f64,
    pub nodes: Vec<f64>,
    pub vprime_pde: Vec<f64>,
    pub vprime_ode: Vec<f64>,
    pub anchor: Anchor,
}

/// Homogeneous solution on the fine radial grid, or `h ≡ 1` for `k = 0`.
pub fn homogeneous_for(cfg: &ProblemConfig) -> Result<HomogeneousSolution> {
    let grid = RadialGrid::graded(cfg.r0, cfg.epsilon, &GradingParams::ode())?;
    if cfg.mode_k == 0 {
        Ok(HomogeneousSolution::constant(grid.nodes().to_vec()))
    } else {
        solve_homogeneous(cfg, &grid, None)
    }
}

/// Cross-validates the radial ODE path against a solved mode field.
pub fn cross_validate(cfg: &ProblemConfig, field: &Field2D) -> Result<CrossCheck> {
    if !(cfg.r0 > 0.0) {
        return Err(Error::Domain("the cross-check is anchored at r0/2 > 0".into()));
    }
    let grid = field.grid();
    let sources = flux_and_sources(cfg, field);
    let average = vertical_average(field);
    let (left, right) = nodal_derivatives(grid.radial(), average.values(), &grid.breaks());
    let dv: Vec<f64> = left.iter().zip(&right).map(|(a, b)| 0.5 * (a + b)).collect();
    let half = 0.5 * cfg.r0;
    let i0 = grid
        .radial()
        .iter()
        .position(|&r| r == half)
        .ok_or_else(|| Error::Domain("grid lacks r0/2".into()))?;
    let anchor = Anchor {
        value: average.values()[i0],
        slope: dv[i0],
    };
    let h = homogeneous_for(cfg)?;
    let nodes = grid.radial()[1..].to_vec();
    let restrict = |f: &RadialFunction| RadialFunction::from_values(nodes.clone(), f.values()[1..].to_vec(), &grid.breaks());
    let ode = reduce_order(cfg, &h, &restrict(&sources.a), &restrict(&sources.b), anchor)?;
    let mut out_nodes = Vec::new();
    let mut pde = Vec::new();
    let mut odev = Vec::new();
    for (j, &r) in ode.nodes.iter().enumerate() {
        if r > SUP_RADIUS {
            break;
        }
        out_nodes.push(r);
        pde.push(dv[i0 + j]);
        odev.push(ode.vprime[j]);
    }
    let scale = pde.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = pde.iter().zip(&odev).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(CrossCheck {
        relative_error: if scale > 0.0 { diff / scale } else { diff },
        nodes: out_nodes,
        vprime_pde: pde,
        vprime_ode: odev,
        anchor,
    })
}

/// Header of [`write_sweep_csv`].
pub const SWEEP_CSV_HEADER: &str = "schema_version,epsilon,sup_grad,r_star,xn_star,osc_ratio,residual,wall_ms,\
flux_defect,unknowns,lateral_bound,vertical_bound";

/// Writes one row per record, floats with 17 significant digits.
pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], mut out: W) -> Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{CSV_SCHEMA_VERSION},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{},{:.16e},{:.16e}",
            r.epsilon,
            r.sup_grad,
            r.r_star,
            r.xn_star,
            r.osc_ratio,
            r.residual,
            r.wall_ms,
            r.flux_defect,
            r.unknowns,
            r.lateral_bound,
            r.vertical_bound
        )?;
    }
    Ok(())
}
