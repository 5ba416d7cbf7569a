use necklab::blowup_lab::{fit_exponent, SweepRecord};
use necklab::geometry::{Neck, ProblemConfig};
use necklab::radial::{GradingParams, RadialGrid};
use necklab::reduced_ode::{drift, log_integrating_factor, quadrature_log_integrating_factor, solve_homogeneous};
use proptest::prelude::*;

fn cfg(n: usize, eps: f64, r0: f64, k: usize) -> ProblemConfig {
    ProblemConfig {
        n,
        epsilon: eps,
        r0,
        mode_k: k,
        ..ProblemConfig::default()
    }
}

/// A point of the neck from unit-cube coordinates.
fn neck_point(neck: &Neck, n: usize, radius: f64, angle: f64, height: f64) -> Vec<f64> {
    let mut x = vec![0.0; n];
    if n == 2 {
        x[0] = if angle < std::f64::consts::PI { radius } else { -radius };
    } else {
        x[0] = radius * angle.cos();
        x[1] = radius * angle.sin();
    }
    let (lo, hi) = (neck.bottom(radius), neck.top(radius));
    x[n - 1] = lo + (hi - lo) * height;
    x
}

fn record(epsilon: f64, sup_grad: f64) -> SweepRecord {
    SweepRecord {
        epsilon,
        sup_grad,
        r_star: 0.0,
        xn_star: 0.0,
        osc_ratio: 0.0,
        residual: 0.0,
        flux_defect: 0.0,
        unknowns: 0,
        lateral_bound: 0.0,
        vertical_bound: 0.0,
        wall_ms: 0,
    }
}

proptest! {
    #[test]
    fn jacobian_identity_and_round_trip(
        n in 2usize..=3,
        log_eps in -5.0f64..-1.0,
        r0 in 0.0f64..0.5,
        radius in 0.0f64..0.999,
        angle in 0.0f64..std::f64::consts::TAU,
        height in 0.0f64..=1.0,
    ) {
        let eps = 10f64.powf(log_eps).min(0.24);
        let neck = Neck::from_config(&cfg(n, eps, r0, 1));
        let x = neck_point(&neck, n, radius, angle, height);
        let det = neck.jacobian_det(&x).unwrap();
        let r = x[..n - 1].iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((det * neck.gap(r).unwrap() / (2.0 * eps) - 1.0).abs() <= 1e-12);
        let back = neck.unflatten(&neck.flatten(&x).unwrap()).unwrap();
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn coefficients_are_symmetric_positive_and_diagonal_on_the_cap(
        log_eps in -5.0f64..-1.0,
        radius in 0.0f64..0.999,
        angle in 0.0f64..std::f64::consts::TAU,
        height in 0.0f64..=1.0,
    ) {
        let eps = 10f64.powf(log_eps);
        let neck = Neck::from_config(&cfg(3, eps, 0.25, 1));
        let y = neck.flatten(&neck_point(&neck, 3, radius, angle, height)).unwrap();
        let c = neck.coefficients(&y).unwrap();
        prop_assert_eq!(c.max_asymmetry(), 0.0);
        prop_assert!(c.min_eigenvalue() > 0.0);
        if radius <= 0.25 {
            for i in 0..3 {
                for k in (0..3).filter(|&k| k != i) {
                    prop_assert_eq!(c.entry(i, k), 0.0);
                }
            }
        }
    }

    #[test]
    fn closed_form_integrating_factor_matches_quadrature(
        n in 2usize..=4,
        log_eps in -4.0f64..-1.0,
        r0 in 0.05f64..0.5,
        frac in 0.0f64..=1.0,
    ) {
        let c = cfg(n, 10f64.powf(log_eps), r0, 1);
        let t = 0.5 * r0 + frac * (1.0 - 0.5 * r0);
        let closed = log_integrating_factor(&c, t).unwrap();
        let quad = quadrature_log_integrating_factor(&c, t, drift).unwrap();
        prop_assert!((closed - quad).abs() <= 1e-8 * closed.abs().max(1e-12));
    }

    #[test]
    fn integrating_factor_decay_shape_is_epsilon_free(log_eps in -6.0f64..-1.0, frac in 0.0f64..=1.0) {
        let c = cfg(3, 10f64.powf(log_eps), 0.25, 1);
        let t = 0.125 + frac * 0.875;
        let p = (t - 0.25f64).max(0.0);
        let shape = (-log_integrating_factor(&c, t).unwrap()).exp() * (c.epsilon + p * p) / c.epsilon;
        prop_assert!((shape * t / 0.125 - 1.0).abs() <= 1e-12);
        prop_assert!((0.125 - 1e-12..=1.0 + 1e-12).contains(&shape));
    }

    #[test]
    fn fit_is_invariant_under_scaling(
        s in -1.0f64..1.0,
        scale in 0.01f64..100.0,
        noise in proptest::collection::vec(-0.05f64..0.05, 5),
    ) {
        let eps = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
        let base: Vec<SweepRecord> = eps
            .iter()
            .zip(&noise)
            .map(|(&e, z)| record(e, e.powf(-s) * z.exp()))
            .collect();
        let scaled: Vec<SweepRecord> = base.iter().map(|r| record(r.epsilon, scale * r.sup_grad)).collect();
        let a = fit_exponent(&base).unwrap();
        let b = fit_exponent(&scaled).unwrap();
        prop_assert!((a.exponent - b.exponent).abs() <= 1e-10);
        prop_assert!((a.intercept + scale.ln() - b.intercept).abs() <= 1e-9);
    }
}

#[test]
fn exact_power_law_is_recovered() {
    let eps = [1e-2, 1e-3, 1e-4];
    let recs: Vec<SweepRecord> = eps.iter().map(|&e| record(e, 3.0 * e.powf(-0.5))).collect();
    let fit = fit_exponent(&recs).unwrap();
    assert!((fit.exponent - 0.5).abs() < 1e-12);
    assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
    assert!((fit.r_squared - 1.0).abs() < 1e-12);
}

#[test]
fn homogeneous_solution_bounds_and_inner_comparison() {
    for &(n, k) in &[(3usize, 1usize), (3, 2), (2, 1), (4, 1)] {
        for &eps in &[1e-2, 1e-3, 1e-4] {
            let c = cfg(n, eps, 0.25, k);
            let grid = RadialGrid::graded(0.25, eps, &GradingParams::ode()).unwrap();
            let h = solve_homogeneous(&c, &grid, None).unwrap();
            for (&r, &v) in h.h.nodes().iter().zip(h.h.values()) {
                let lower = r.powi(k as i32);
                assert!(v >= lower - 1e-8 && v <= 1.0 + 1e-8, "{n} {k} {eps}: h({r}) = {v}");
                if r > 0.0 && r < 1.0 {
                    assert!(v > lower && v < 1.0, "{n} {k} {eps}: h({r}) = {v}");
                }
                if r > h.a_cut && r < 0.25 {
                    assert!(v <= (r / 0.25).powi(k as i32) * (1.0 + 1e-10), "{n} {k} {eps}: h({r}) = {v}");
                }
            }
        }
    }
}
