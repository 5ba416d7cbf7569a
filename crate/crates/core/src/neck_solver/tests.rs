use std::f64::consts::PI;
use std::sync::Arc;

use super::*;
use crate::geometry::Profile;

fn cfg(n: usize, eps: f64, r0: f64, k: usize) -> ProblemConfig {
    ProblemConfig {
        n,
        epsilon: eps,
        r0,
        mode_k: k,
        ..ProblemConfig::default()
    }
}

fn grid(c: &ProblemConfig) -> Arc<Grid2D> {
    Arc::new(Grid2D::from_config(c, &GridParams::default()).unwrap())
}

#[test]
fn grid_layout() {
    let c = cfg(3, 1e-2, 0.25, 1);
    let g = grid(&c);
    assert_eq!(g.radial()[0], 0.0);
    assert_eq!(*g.radial().last().unwrap(), 1.0);
    assert_eq!(g.vertical()[0], -0.01);
    assert_eq!(*g.vertical().last().unwrap(), 0.01);
    assert_eq!(g.vertical()[16], 0.0);
    let (r, xn) = g.physical(g.nr() - 1, g.nz() - 1);
    assert_eq!(r, 1.0);
    assert!((xn - (0.005 + 0.5625)).abs() < 1e-14);
    let coarse = GridParams {
        vertical_intervals: 8,
        ..GridParams::default()
    };
    assert!(matches!(Grid2D::from_config(&c, &coarse), Err(Error::Resolution(_))));
}

#[test]
fn constant_data_gives_constant_zero_mode() {
    let c = cfg(3, 1e-3, 0.25, 0);
    let bc = BoundaryData::for_mode(&c, LateralData::Constant { value: 2.5 }).unwrap();
    let sol = assemble_and_solve_mode(&c, &grid(&c), &bc).unwrap();
    for v in sol.field.values() {
        assert!((v - 2.5).abs() < 2.5e-9, "{v}");
    }
}

#[test]
fn zero_data_gives_zero_field() {
    for &(n, k) in &[(3usize, 0usize), (3, 1), (3, 2), (2, 1), (4, 1)] {
        let c = cfg(n, 1e-3, 0.25, k);
        let sol = assemble_and_solve_mode(&c, &grid(&c), &BoundaryData::zero(&c)).unwrap();
        assert!(sol.field.max_abs() <= 1e-10);
    }
}

#[test]
fn x1_mode_obeys_maximum_principle() {
    let c = cfg(3, 1e-3, 0.25, 1);
    let bc = BoundaryData::coordinate(&c).unwrap();
    let sol = assemble_and_solve_mode(&c, &grid(&c), &bc).unwrap();
    let f = &sol.field;
    for j in 0..f.grid().nz() {
        assert_eq!(f.at(0, j), 0.0);
        assert!((f.at(f.grid().nr() - 1, j) - PI.sqrt()).abs() < 1e-14);
    }
    assert!(f.max_abs() <= PI.sqrt() * (1.0 + 1e-12));
    assert!(f.values().iter().all(|&v| v >= -1e-12));
    assert!(sol.stats.residual <= 1e-10);
    assert!(sol.flux_defect <= 1e-8, "{}", sol.flux_defect);
}

#[test]
fn boundary_data_consistency() {
    let c1 = cfg(3, 1e-3, 0.25, 1);
    let c0 = cfg(3, 1e-3, 0.25, 0);
    assert!(BoundaryData::for_mode(&c1, LateralData::Xn).is_err());
    assert!(BoundaryData::for_mode(&c0, LateralData::X1).is_err());
    let bad = BoundaryData {
        lateral: LateralData::Zero,
        axis: AxisCondition::Natural,
    };
    assert!(bad.check(&c1).is_err());
    assert!((LateralData::X1.value(3, 1.0, 0.0) - PI.sqrt()).abs() < 1e-15);
    assert!((LateralData::X1.value(2, 1.0, 0.0) - 2f64.sqrt()).abs() < 1e-15);
    assert!((LateralData::Xn.value(3, 0.3, 1.0) - (2.0 * PI).sqrt()).abs() < 1e-15);
    let poly = LateralData::Polynomial {
        terms: vec![[2.0, 1.0, 0.0], [1.0, 0.0, 2.0]],
    };
    assert_eq!(poly.value(3, 0.5, 3.0), 10.0);
}

#[test]
fn vertical_average_examples() {
    let c = cfg(3, 1e-2, 0.25, 0);
    let g = grid(&c);
    let constant = Field2D::from_fn(g.clone(), "c", |_, _| 1.5).unwrap();
    assert!(vertical_average(&constant).values().iter().all(|&v| (v - 1.5).abs() < 1e-15));
    let odd = Field2D::from_fn(g.clone(), "y", |_, y| y).unwrap();
    assert!(vertical_average(&odd).values().iter().all(|&v| v.abs() < 1e-17));
    let eps = c.epsilon;
    let q = |r: f64| 1.0 + r * r;
    let quad = Field2D::from_fn(g.clone(), "q", |r, y| q(r) * (1.0 + y * y / (eps * eps))).unwrap();
    let dz = g.vertical_spacing();
    let avg = vertical_average(&quad);
    for (&r, &v) in avg.nodes().iter().zip(avg.values()) {
        let expect = q(r) * (1.0 + 1.0 / 3.0 + dz * dz / (6.0 * eps * eps));
        assert!((v - expect).abs() < 1e-13, "{r}: {v} {expect}");
        assert!((v - q(r) * 4.0 / 3.0).abs() < 2e-3 * q(r));
    }
}

#[test]
fn flux_vanishes_on_flat_zone_and_for_vertically_constant_fields() {
    let c = cfg(3, 1e-2, 0.25, 1);
    let g = grid(&c);
    let bc = BoundaryData::coordinate(&c).unwrap();
    let sol = assemble_and_solve_mode(&c, &g, &bc).unwrap();
    let fs = flux_and_sources(&c, &sol.field);
    for (i, &r) in g.radial().iter().enumerate() {
        if r <= 0.25 {
            assert_eq!(fs.flux.values()[i], 0.0);
            assert_eq!(fs.a.values()[i], 0.0);
            assert_eq!(fs.b.values()[i], 0.0);
        }
    }
    assert!(fs.flux.values().iter().any(|&f| f != 0.0));
    let radial_only = Field2D::from_fn(g.clone(), "ramp", |r, _| r * r).unwrap();
    let fs = flux_and_sources(&c, &radial_only);
    assert!(fs.flux.values().iter().all(|&f| f.abs() < 1e-12));
}

#[test]
fn gradient_of_constant_vanishes() {
    let c = cfg(3, 1e-2, 0.25, 0);
    let g = grid(&c);
    let f = Field2D::from_fn(g, "c", |_, _| 3.0).unwrap();
    assert!(gradient_field(&c, &f).unwrap().max_abs() < 1e-12);
}

#[test]
fn linear_vertical_field_on_slab_has_unit_gradient() {
    let eps = 1e-2;
    let c = cfg(3, eps, 0.25, 0);
    let radial = RadialGrid::graded(0.25, eps, &GradingParams::default()).unwrap();
    let g = Arc::new(Grid2D::new(Neck::new(Profile::slab(), eps), &radial, 16).unwrap());
    let top = |_: f64| 2.0 * eps;
    let bottom = |_: f64| -2.0 * eps;
    let forcing = Forcing {
        top: Some(&top),
        bottom: Some(&bottom),
        ..Forcing::default()
    };
    let bc = BoundaryData::for_mode(&c, LateralData::Polynomial { terms: vec![[1.0, 0.0, 1.0]] }).unwrap();
    let sol = solve_mode(&c, &g, &bc, &forcing).unwrap();
    for (i, j) in (0..g.nr()).flat_map(|i| (0..g.nz()).map(move |j| (i, j))) {
        let (_, xn) = g.physical(i, j);
        assert!((sol.field.at(i, j) - xn).abs() < 1e-10);
    }
    let grad = gradient_field(&c, &sol.field).unwrap();
    assert!(grad.values().iter().all(|&v| (v - 1.0).abs() < 1e-8));
}

#[test]
fn axis_gradient_is_bounded_under_refinement() {
    let c = cfg(3, 1e-2, 0.25, 1);
    let bc = BoundaryData::coordinate(&c).unwrap();
    let mut axis = Vec::new();
    let mut params = GridParams::default();
    for _ in 0..2 {
        let g = Arc::new(Grid2D::from_config(&c, &params).unwrap());
        let sol = assemble_and_solve_mode(&c, &g, &bc).unwrap();
        let grad = gradient_field(&c, &sol.field).unwrap();
        let mid = g.nz() / 2;
        axis.push((grad.at(0, mid), grad.at(1, mid)));
        params = params.refined();
    }
    for &(a, b) in &axis {
        assert!(a.is_finite() && (a - b).abs() < 0.05 * a, "{axis:?}");
    }
    assert!((axis[0].0 - axis[1].0).abs() < 0.01 * axis[1].0, "{axis:?}");
}

#[test]
fn snapshots_round_trip() {
    let c = cfg(3, 1e-2, 0.25, 1);
    let g = grid(&c);
    let f = Field2D::from_fn(g.clone(), "test field", |r, y| r.sin() + y / 3.0).unwrap();
    let mut buf = Vec::new();
    write_field_binary(&f, &mut buf).unwrap();
    let back = read_field_binary(&buf[..]).unwrap();
    assert_eq!(back.name, "test field");
    assert_eq!(back.epsilon, 1e-2);
    assert_eq!(back.radial, g.radial());
    assert_eq!(back.vertical, g.vertical());
    assert_eq!(back.values, f.values());
    assert!(read_field_binary(&b"garbage\n"[..]).is_err());

    let mut csv = Vec::new();
    write_field_csv(&f, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("schema_version,r,x_n,y_n,value"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), g.len());
    let last: Vec<f64> = rows.last().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(last[0], 1.0);
    assert_eq!(last[4], *f.values().last().unwrap());
}
