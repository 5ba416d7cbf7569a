//! Acceptance criteria for the lab, one PASS/FAIL line each.
//!
//! Runs with a plain `main` so every criterion is reported even when an
//! earlier one fails; the process exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use necklab::blowup_lab::{cross_validate, fit_exponent, run_single, spread, sweep, LabConfig, SweepRecord};
use necklab::geometry::ProblemConfig;
use necklab::harmonics::ModeIndex;
use necklab::manufactured::{min_ratio, mode_pde_convergence, radial_bvp_convergence};
use necklab::neck_solver::{assemble_and_solve_mode, BoundaryData, Grid2D, GridParams, LateralData};
use necklab::oracle3d::{default_oracle_config, single_mode_check, x1_data, OracleParams};
use necklab::radial::{GradingParams, RadialGrid};
use necklab::reduced_ode::{drift, log_integrating_factor, solve_homogeneous};
use necklab::verify::{integrating_factor_mismatch, jacobian_errors};

const SWEEP: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];

type Outcome = Result<(bool, String), String>;

fn config(n: usize, r0: f64, k: usize) -> ProblemConfig {
    ProblemConfig {
        n,
        r0,
        mode_k: k,
        ..ProblemConfig::default()
    }
}

/// About 10⁵ unknowns at ε = 10⁻³.
fn fine_grid() -> GridParams {
    GridParams::default().refined().refined()
}

fn run_sweep(lab: &LabConfig) -> Result<Vec<SweepRecord>, String> {
    sweep(lab, &SWEEP).map_err(|e| e.to_string())
}

fn sup_list(records: &[SweepRecord]) -> String {
    records.iter().map(|r| format!("{:.4}", r.sup_grad)).collect::<Vec<_>>().join(" ")
}

fn flat_sweep() -> &'static Result<Vec<SweepRecord>, String> {
    static FLAT: OnceLock<Result<Vec<SweepRecord>, String>> = OnceLock::new();
    FLAT.get_or_init(run_flat_sweep)
}

fn run_flat_sweep() -> Result<Vec<SweepRecord>, String> {
    let mut lab = LabConfig::new(config(3, 0.25, 1)).map_err(|e| e.to_string())?;
    lab.grid = fine_grid();
    run_sweep(&lab)
}

fn flat_boundedness(records: &[SweepRecord]) -> Outcome {
    let fit = fit_exponent(records).map_err(|e| e.to_string())?;
    let sp = spread(records);
    Ok((
        fit.exponent.abs() <= 0.05 && sp < 0.25,
        format!("s = {:.4}, spread {:.1}%, sup_grad {}", fit.exponent, 100.0 * sp, sup_list(records)),
    ))
}

fn convex_control() -> Outcome {
    let mut lab = LabConfig::new(config(2, 0.0, 1)).map_err(|e| e.to_string())?;
    lab.grid = fine_grid();
    let records = run_sweep(&lab)?;
    let fit = fit_exponent(&records).map_err(|e| e.to_string())?;
    Ok((
        (fit.exponent - 0.5).abs() <= 0.05,
        format!("s = {:.4}, sup_grad {}", fit.exponent, sup_list(&records)),
    ))
}

fn zero_mode() -> Outcome {
    let mut lab = LabConfig::new(config(3, 0.25, 0)).map_err(|e| e.to_string())?;
    lab.grid = fine_grid();
    lab.lateral = LateralData::Polynomial {
        terms: vec![[2.5, 0.0, 1.0], [1.0, 2.0, 0.0]],
    };
    let records = run_sweep(&lab)?;
    let fit = fit_exponent(&records).map_err(|e| e.to_string())?;
    Ok((
        fit.exponent.abs() <= 0.05,
        format!("s = {:.4}, sup_grad {}", fit.exponent, sup_list(&records)),
    ))
}

fn homogeneous_bounds() -> Outcome {
    let mut slack = f64::INFINITY;
    let mut inner: f64 = 0.0;
    let mut ratio: f64 = 1.0;
    for &(n, k) in &[(3usize, 1usize), (3, 2), (2, 1)] {
        let mut quotients = Vec::new();
        for &eps in &[1e-2, 1e-3, 1e-4] {
            let c = config(n, 0.25, k).with_epsilon(eps);
            let grid = RadialGrid::graded(0.25, eps, &GradingParams::ode()).map_err(|e| e.to_string())?;
            let h = solve_homogeneous(&c, &grid, None).map_err(|e| e.to_string())?;
            let mut lower = f64::INFINITY;
            for (&r, &v) in h.h.nodes().iter().zip(h.h.values()) {
                lower = lower.min((v - r.powi(k as i32)).min(1.0 - v));
            }
            slack = slack.min(lower);
            inner = inner.max(h.inner_ratio_spread(0.25));
            quotients.push(h.max_difference_quotient());
        }
        let hi = quotients.iter().copied().fold(0.0, f64::max);
        let lo = quotients.iter().copied().fold(f64::INFINITY, f64::min);
        ratio = ratio.max(hi / lo);
    }
    Ok((
        slack >= -1e-8 && inner <= 1e-8 && ratio < 2.0,
        format!("slack {slack:.2e}, inner ratio spread {inner:.1e}, difference quotient ratio {ratio:.3}"),
    ))
}

fn integrating_factor() -> Outcome {
    let worst = integrating_factor_mismatch(drift, 100, 17).map_err(|e| e.to_string())?;
    let c = config(3, 0.25, 1).with_epsilon(0.01);
    let value = log_integrating_factor(&c, 0.5).map_err(|e| e.to_string())?.exp();
    Ok((
        worst <= 1e-8 && (value / 29.0 - 1.0).abs() <= 1e-6,
        format!("max relative mismatch {worst:.2e}, exp at t = 0.5 is {value:.12}"),
    ))
}

fn jacobian() -> Outcome {
    let (det, _) = jacobian_errors(10_000, 23).map_err(|e| e.to_string())?;
    Ok((det <= 1e-12, format!("max relative error {det:.2e} over 10000 points")))
}

fn single_mode() -> Outcome {
    let rep = single_mode_check(&default_oracle_config(), &OracleParams::default(), ModeIndex::new(1, 1), x1_data)
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for &(n, k) in &[(3usize, 0usize), (3, 1), (3, 2), (2, 1), (4, 1)] {
        let c = config(n, 0.25, k).with_epsilon(1e-3);
        let grid = Arc::new(Grid2D::from_config(&c, &GridParams::default()).map_err(|e| e.to_string())?);
        let sol = assemble_and_solve_mode(&c, &grid, &BoundaryData::zero(&c)).map_err(|e| e.to_string())?;
        worst = worst.max(sol.field.max_abs());
    }
    Ok((
        rep.fraction >= 0.999 && worst <= 1e-10,
        format!(
            "energy fraction {:.6} on {}^3 nodes, zero-data max |U| {worst:.1e}",
            rep.fraction,
            OracleParams::default().nodes
        ),
    ))
}

fn oscillation(records: &[SweepRecord]) -> Outcome {
    let picked: Vec<&SweepRecord> = records.iter().filter(|r| [1e-2, 1e-3, 1e-4].contains(&r.epsilon)).collect();
    if picked.len() != 3 || picked.iter().any(|r| !(r.osc_ratio > 0.0)) {
        return Err("missing oscillation ratios".into());
    }
    let hi = picked.iter().map(|r| r.osc_ratio).fold(0.0, f64::max);
    let lo = picked.iter().map(|r| r.osc_ratio).fold(f64::INFINITY, f64::min);
    let list: Vec<String> = picked.iter().map(|r| format!("{:.3}", r.osc_ratio)).collect();
    Ok((hi / lo < 2.0, format!("ratios {}, variation {:.3}x", list.join(" "), hi / lo)))
}

fn cross_check() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for &eps in &[1e-2, 1e-3, 1e-4] {
        let mut lab = LabConfig::new(config(3, 0.25, 1).with_epsilon(eps)).map_err(|e| e.to_string())?;
        lab.grid = fine_grid();
        let rep = run_single(&lab).map_err(|e| e.to_string())?;
        let cc = cross_validate(&lab.problem, &rep.field).map_err(|e| e.to_string())?;
        worst = worst.max(cc.relative_error);
        parts.push(format!("{:.2e}", cc.relative_error));
    }
    Ok((worst <= 0.05, format!("relative V' error {} at eps 1e-2 1e-3 1e-4", parts.join(" "))))
}

fn manufactured() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut parts = Vec::new();
    for &(n, k) in &[(3usize, 1usize), (3, 0), (2, 1), (3, 2)] {
        let c = config(n, 0.25, k);
        let pde = min_ratio(&mode_pde_convergence(&c, 2).map_err(|e| e.to_string())?);
        let ode = min_ratio(&radial_bvp_convergence(&c, 3).map_err(|e| e.to_string())?);
        worst = worst.min(pde).min(ode);
        parts.push(format!("({n},{k}) {pde:.2}/{ode:.2}"));
    }
    Ok((worst >= 3.5, format!("error ratios pde/radial {}", parts.join(", "))))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let flat_ref = |f: fn(&[SweepRecord]) -> Outcome| -> Outcome {
        match flat_sweep() {
            Ok(records) => f(records),
            Err(e) => Err(e.clone()),
        }
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("flat-case boundedness", Box::new(|| flat_ref(flat_boundedness))),
        ("convex control blow-up", Box::new(convex_control)),
        ("zero-mode flat case", Box::new(zero_mode)),
        ("homogeneous-solution bounds", Box::new(homogeneous_bounds)),
        ("closed-form integrating factor", Box::new(integrating_factor)),
        ("jacobian identity", Box::new(jacobian)),
        ("single-mode preservation", Box::new(single_mode)),
        ("oscillation-bound stability", Box::new(|| flat_ref(oscillation))),
        ("ODE/PDE cross-validation", Box::new(cross_check)),
        ("manufactured-solution convergence", Box::new(manufactured)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (passed, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !passed {
            failed += 1;
        }
        let status = if passed { "PASS" } else { "FAIL" };
        println!("{status} criterion {:>2} {name}: {detail} [{:.1}s]", i + 1, t.elapsed().as_secs_f64());
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
