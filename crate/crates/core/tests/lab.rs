use necklab::blowup_lab::{check_epsilons, fit_exponent, run_single, sweep, LabConfig, SweepRecord};
use necklab::geometry::ProblemConfig;
use necklab::neck_solver::{flux_and_sources, GridParams, LateralData};
use necklab::reduced_ode::solve_radial_bvp;

const SWEEP: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];

fn flat(k: usize) -> ProblemConfig {
    ProblemConfig {
        n: 3,
        r0: 0.25,
        mode_k: k,
        ..ProblemConfig::default()
    }
}

fn lab_for(k: usize) -> LabConfig {
    let lateral = match k {
        0 => LateralData::Polynomial {
            terms: vec![[2.5, 0.0, 1.0], [1.0, 2.0, 0.0]],
        },
        1 => LateralData::X1,
        _ => LateralData::Polynomial {
            terms: vec![[1.0, k as f64, 0.0]],
        },
    };
    LabConfig {
        problem: flat(k),
        grid: GridParams::default(),
        lateral,
        seed: None,
        timing: false,
    }
}

fn flat_fit(k: usize) -> (f64, Vec<SweepRecord>) {
    let records = sweep(&lab_for(k), &SWEEP).unwrap();
    (fit_exponent(&records).unwrap().exponent, records)
}

#[test]
fn flat_zero_mode_is_bounded() {
    let (s, records) = flat_fit(0);
    assert!(s.abs() <= 0.05, "s = {s}, {records:?}");
}

#[test]
fn flat_first_mode_is_bounded() {
    let (s, records) = flat_fit(1);
    assert!(s.abs() <= 0.05, "s = {s}, {records:?}");
}

#[test]
fn flat_second_mode_is_bounded() {
    let (s, records) = flat_fit(2);
    assert!(s.abs() <= 0.05, "s = {s}, {records:?}");
}

#[test]
fn derivative_bounds_are_epsilon_stable() {
    for k in [0, 1, 2] {
        let records = sweep(&lab_for(k), &SWEEP).unwrap();
        for pick in [|r: &SweepRecord| r.lateral_bound, |r: &SweepRecord| r.vertical_bound] {
            let hi = records.iter().map(pick).fold(0.0, f64::max);
            let lo = records.iter().map(pick).fold(f64::INFINITY, f64::min);
            assert!(lo > 0.0 && hi / lo < 2.0, "k = {k}: {records:?}");
        }
    }
}

#[test]
fn sweep_is_deterministic_and_ordered() {
    let lab = lab_for(1);
    let eps = [1e-2, 1e-3, 1e-4];
    let a = sweep(&lab, &eps).unwrap();
    let b = sweep(&lab, &eps).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.iter().map(|r| r.epsilon).collect::<Vec<_>>(), eps);
    assert!(a.iter().all(|r| r.wall_ms == 0));
}

#[test]
fn seeded_probes_are_reproducible() {
    let lab = LabConfig {
        seed: Some(11),
        ..lab_for(1)
    };
    let a = run_single(&lab).unwrap();
    let b = run_single(&lab).unwrap();
    assert_eq!(a.record, b.record);
    assert_eq!(a.oscillation, b.oscillation);
}

#[test]
fn epsilon_list_validation() {
    assert!(check_epsilons(&[1e-2, 1e-3]).is_ok());
    assert!(check_epsilons(&[0.3]).is_err());
    assert!(check_epsilons(&[1e-2, 1e-2]).is_err());
    assert!(check_epsilons(&[1e-3, 1e-2]).is_err());
    assert!(check_epsilons(&[]).is_err());
    let failure = sweep(&lab_for(1), &[0.3, 1e-2]).unwrap_err();
    assert!(failure.completed.is_empty());
}

/// `V` from the vertical average solves the averaged radial equation with
/// the measured sources, up to an error that shrinks with the grid.
#[test]
fn averaged_equation_residual_shrinks_under_refinement() {
    let cfg = flat(1).with_epsilon(1e-3);
    let mut errors = Vec::new();
    let mut params = GridParams::default();
    for _ in 0..2 {
        let lab = LabConfig {
            problem: cfg,
            grid: params,
            ..lab_for(1)
        };
        let rep = run_single(&lab).unwrap();
        let fs = flux_and_sources(&cfg, &rep.field);
        let nodes: Vec<f64> = fs
            .average
            .nodes()
            .iter()
            .copied()
            .filter(|&r| (0.125..=0.75).contains(&r))
            .collect();
        let v = |r: f64| fs.average.eval(r);
        let src = |r: f64| fs.a.deriv(r) + fs.b.eval(r);
        let sol = solve_radial_bvp(&cfg, &nodes, src, v(nodes[0]), v(*nodes.last().unwrap())).unwrap();
        let scale = nodes.iter().map(|&r| v(r).abs()).fold(0.0, f64::max);
        let err = nodes.iter().zip(&sol).map(|(&r, &s)| (s - v(r)).abs()).fold(0.0, f64::max);
        errors.push(err / scale);
        params = params.refined();
    }
    assert!(errors[0] < 1e-2 && errors[1] < 0.5 * errors[0], "{errors:?}");
}
