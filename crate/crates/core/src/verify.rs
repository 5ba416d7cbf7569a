//! The invariant suite behind `necklab verify`: exact identities, solution
//! bounds, quadrature agreement, orthonormality, manufactured solutions and
//! zero-data solves.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::{Neck, ProblemConfig};
use crate::harmonics::{circle_harmonic, circle_modes, project, SphereSamples};
use crate::manufactured::{min_ratio, mode_pde_convergence, radial_bvp_convergence};
use crate::neck_solver::{assemble_and_solve_mode, BoundaryData, Grid2D, GridParams};
use crate::radial::{GradingParams, RadialFunction, RadialGrid};
use crate::reduced_ode::{
    drift, log_integrating_factor, quadrature_log_integrating_factor, reduce_order_vprime, solve_homogeneous,
    Anchor, DriftFn,
};

const SEED: u64 = 0x6e65_636b;

/// Outcome of one invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// All invariant outcomes, in a fixed order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }

    /// Plain-text table, identical across runs.
    pub fn render(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{status}  {:width$}  {}", c.name, c.detail);
        }
        let failed = self.failures().len();
        let _ = writeln!(out, "{} checks, {} failed", self.checks.len(), failed);
        out
    }
}

/// Knobs of the suite; the drift is replaceable so that a corrupted drift
/// can be shown to be caught.
#[derive(Clone, Copy)]
pub struct VerifyOptions {
    pub drift: DriftFn,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { drift }
    }
}

/// The drift with the sign of its second term flipped, used as a mutation
/// fixture.
pub fn sign_flipped_drift(cfg: &ProblemConfig, r: f64) -> Result<f64> {
    let p = (r - cfg.r0).max(0.0);
    let geometric = drift(cfg, r)? - 2.0 * p / (cfg.epsilon + p * p);
    Ok(geometric - 2.0 * p / (cfg.epsilon + p * p))
}

fn outcome(name: &'static str, res: Result<(bool, String)>) -> Check {
    match res {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn config(n: usize, eps: f64, r0: f64, k: usize) -> ProblemConfig {
    ProblemConfig {
        n,
        epsilon: eps,
        r0,
        mode_k: k,
        ..ProblemConfig::default()
    }
}

/// A random point strictly inside the neck, in `n` dimensions.
pub fn random_neck_point(rng: &mut ChaCha8Rng, neck: &Neck, n: usize) -> Vec<f64> {
    let r = 0.999 * rng.gen::<f64>().sqrt();
    let mut dir: Vec<f64> = (0..n - 1).map(|_| rng.gen::<f64>() - 0.5).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    dir.iter_mut().for_each(|v| *v *= r / norm);
    let (lo, hi) = (neck.bottom(r), neck.top(r));
    dir.push(lo + (hi - lo) * rng.gen_range(0.001..0.999));
    dir
}

/// `max |det(D_x y)(ε + h1 - h2) / (2ε) - 1|` and the round-trip error over
/// random points.
pub fn jacobian_errors(count: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut det_err: f64 = 0.0;
    let mut trip_err: f64 = 0.0;
    let cases = [(3, 1e-2, 0.25), (3, 1e-4, 0.25), (2, 1e-3, 0.25), (4, 1e-3, 0.1), (3, 1e-3, 0.0)];
    for j in 0..count {
        let (n, eps, r0) = cases[j % cases.len()];
        let neck = Neck::from_config(&config(n, eps, r0, 1));
        let x = random_neck_point(&mut rng, &neck, n);
        let r = x[..n - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
        let det = neck.jacobian_det(&x)?;
        det_err = det_err.max((det * neck.gap(r)? / (2.0 * eps) - 1.0).abs());
        let back = neck.unflatten(&neck.flatten(&x)?)?;
        let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let diff = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        trip_err = trip_err.max(diff / scale);
    }
    Ok((det_err, trip_err))
}

fn check_coefficients() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut min_eig = f64::INFINITY;
    let mut asym: f64 = 0.0;
    let mut flat_offdiag: f64 = 0.0;
    for &eps in &[1e-5, 1e-4, 1e-3, 1e-2, 1e-1] {
        let neck = Neck::from_config(&config(3, eps, 0.25, 1));
        for _ in 0..200 {
            let x = random_neck_point(&mut rng, &neck, 3);
            let y = neck.flatten(&x)?;
            let c = neck.coefficients(&y)?;
            min_eig = min_eig.min(c.min_eigenvalue() / eps);
            asym = asym.max(c.max_asymmetry());
            if (y[0] * y[0] + y[1] * y[1]).sqrt() <= 0.25 {
                for i in 0..3 {
                    for k in 0..3 {
                        if i != k {
                            flat_offdiag = flat_offdiag.max(c.entry(i, k).abs());
                        }
                    }
                }
            }
        }
    }
    Ok((
        min_eig > 0.0 && asym == 0.0 && flat_offdiag == 0.0,
        format!("min eigenvalue/eps {min_eig:.3e}, asymmetry {asym:.1e}, flat off-diagonal {flat_offdiag:.1e}"),
    ))
}

fn check_h_bounds() -> Result<(bool, String)> {
    let mut worst_slack = f64::INFINITY;
    let mut worst_inner: f64 = 0.0;
    let mut worst_spread: f64 = 1.0;
    for &(n, k) in &[(3usize, 1usize), (3, 2), (2, 1)] {
        let mut quotients = Vec::new();
        for &eps in &[1e-2, 1e-3, 1e-4] {
            let c = config(n, eps, 0.25, k);
            let grid = RadialGrid::graded(0.25, eps, &GradingParams::ode())?;
            let h = solve_homogeneous(&c, &grid, None)?;
            worst_slack = worst_slack.min(h.bounds_slack.min(-h.comparison_excess));
            worst_inner = worst_inner.max(h.inner_ratio_spread(0.25));
            quotients.push(h.max_difference_quotient());
        }
        let hi = quotients.iter().cloned().fold(0.0, f64::max);
        let lo = quotients.iter().cloned().fold(f64::INFINITY, f64::min);
        worst_spread = worst_spread.max(hi / lo);
    }
    Ok((
        worst_slack >= -1e-8 && worst_inner <= 1e-8 && worst_spread < 2.0,
        format!("slack {worst_slack:.2e}, inner ratio spread {worst_inner:.1e}, h' ratio {worst_spread:.3}"),
    ))
}

/// Largest relative mismatch between the closed-form and quadrature
/// integrating factor at random `t ∈ [r0/2, 1]`.
pub fn integrating_factor_mismatch(drift_fn: DriftFn, count: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for &(n, eps, r0) in &[(3, 1e-2, 0.25), (3, 1e-4, 0.25), (2, 1e-3, 0.25), (4, 1e-3, 0.4), (2, 1e-2, 0.0)] {
        let c = config(n, eps, r0, 1);
        for _ in 0..count {
            let t = rng.gen_range((0.5 * r0).max(1e-3)..=1.0);
            let closed = log_integrating_factor(&c, t)?;
            let quad = quadrature_log_integrating_factor(&c, t, drift_fn)?;
            let scale = closed.abs().max(1e-12);
            worst = worst.max((closed - quad).abs() / scale);
        }
    }
    Ok(worst)
}

fn check_integrating_factor(opts: &VerifyOptions) -> Result<(bool, String)> {
    let worst = integrating_factor_mismatch(opts.drift, 100, SEED + 2)?;
    let twenty_nine = log_integrating_factor(&config(3, 0.01, 0.25, 1), 0.5)?.exp();
    Ok((
        worst <= 1e-8 && (twenty_nine / 29.0 - 1.0).abs() <= 1e-6,
        format!("closed form vs quadrature {worst:.2e}, exp at t=0.5 {twenty_nine:.12}"),
    ))
}

fn check_orthonormality() -> Result<(bool, String)> {
    let grid = SphereSamples::uniform(64);
    let modes = circle_modes(4);
    let mut worst: f64 = 0.0;
    for &a in &modes {
        let field = grid.clone().with_values(|t| circle_harmonic(a, t));
        for &b in &modes {
            let g = project(&field, b)?;
            worst = worst.max((g - if a == b { 1.0 } else { 0.0 }).abs());
        }
    }
    Ok((worst <= 1e-10, format!("Gram deviation {worst:.1e}")))
}

fn check_mode_mms() -> Result<(bool, String)> {
    let errs = mode_pde_convergence(&config(3, 1e-2, 0.25, 1), 2)?;
    let ratio = min_ratio(&errs);
    Ok((ratio >= 3.5, format!("errors {:.3e} -> {:.3e}, ratio {ratio:.2}", errs[0], errs[1])))
}

fn check_radial_mms() -> Result<(bool, String)> {
    let errs = radial_bvp_convergence(&config(3, 1e-3, 0.25, 2), 3)?;
    let ratio = min_ratio(&errs);
    Ok((ratio >= 3.5, format!("errors {:.3e} -> {:.3e}, ratio {ratio:.2}", errs[0], errs[2])))
}

fn check_zero_data() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for &(n, k) in &[(3usize, 0usize), (3, 1), (3, 2), (2, 1)] {
        let c = config(n, 1e-3, 0.25, k);
        let grid = Arc::new(Grid2D::from_config(&c, &GridParams::default())?);
        let sol = assemble_and_solve_mode(&c, &grid, &BoundaryData::zero(&c))?;
        worst = worst.max(sol.field.max_abs());
    }
    let c = config(3, 1e-3, 0.25, 1);
    let grid = RadialGrid::graded(0.25, 1e-3, &GradingParams::ode())?;
    let h = solve_homogeneous(&c, &grid, None)?;
    let z = RadialFunction::zeros(grid.nodes().to_vec());
    let vp = reduce_order_vprime(&c, &h, &z, &z, Anchor { value: 0.0, slope: 0.0 })?;
    let ode = vp.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok((
        worst <= 1e-10 && ode == 0.0,
        format!("max |U| {worst:.1e}, max |V'| {ode:.1e}"),
    ))
}

/// Runs every invariant.
pub fn run_verify(opts: &VerifyOptions) -> VerifyReport {
    let jac = jacobian_errors(10_000, SEED);
    let checks = vec![
        outcome(
            "jacobian_identity",
            jac.clone().map(|(d, _)| (d <= 1e-12, format!("max relative error {d:.2e}"))),
        ),
        outcome(
            "flatten_roundtrip",
            jac.map(|(_, t)| (t <= 1e-12, format!("max relative error {t:.2e}"))),
        ),
        outcome("coefficient_spd", check_coefficients()),
        outcome("homogeneous_bounds", check_h_bounds()),
        outcome("integrating_factor", check_integrating_factor(opts)),
        outcome("orthonormality", check_orthonormality()),
        outcome("mode_pde_mms", check_mode_mms()),
        outcome("radial_bvp_mms", check_radial_mms()),
        outcome("zero_data", check_zero_data()),
    ];
    VerifyReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_suite_passes_and_is_deterministic() {
        let a = run_verify(&VerifyOptions::default());
        assert!(a.all_passed(), "{}", a.render());
        let b = run_verify(&VerifyOptions::default());
        assert_eq!(a.render(), b.render());
    }

    #[test]
    fn flipped_drift_is_caught() {
        let rep = run_verify(&VerifyOptions {
            drift: sign_flipped_drift,
        });
        assert_eq!(rep.failures(), vec!["integrating_factor"]);
    }
}
