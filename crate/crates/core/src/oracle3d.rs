//! Coarse three-dimensional check that a single-mode boundary datum keeps
//! its solution in that mode.
//!
//! The neck with `n = 3` is embedded in the box `[-1, 1]² × [bottom, top]`
//! and discretised by the seven-point Laplacian on a uniform node grid.
//! Nodes between the two walls with `|x'| < 1` are unknowns, nodes with
//! `|x'| ≥ 1` carry the Dirichlet datum, and faces leading out through a
//! wall are dropped, which imposes the insulating condition in staircase
//! form. The solution is then sampled on circles and projected onto the
//! circle harmonics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Neck, ProblemConfig};
use crate::harmonics::{circle_modes, project, ModeIndex, SphereSamples};
use crate::linalg::{pcg, TripletBuilder};

/// Settings of the embedded solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleParams {
    /// Nodes per direction.
    pub nodes: usize,
    /// Angular samples per circle.
    pub angles: usize,
    /// Highest degree included in the energy budget.
    pub kmax: usize,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            nodes: 33,
            angles: 64,
            kmax: 4,
        }
    }
}

/// Mode energies of the embedded solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    /// Fraction of the projected energy in the target mode.
    pub fraction: f64,
    /// Energy per mode, summed over the sampling circles.
    pub energies: Vec<(ModeIndex, f64)>,
    pub radii: Vec<f64>,
    pub unknowns: usize,
    pub iterations: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Node {
    Free(usize),
    Fixed,
    Outside,
}

/// Solves the embedded problem with Dirichlet data `f(x, y, z)` on
/// `|x'| ≥ 1` and measures how much of the solution lies in `target`.
pub fn single_mode_check<F: Fn(f64, f64, f64) -> f64>(
    cfg: &ProblemConfig,
    params: &OracleParams,
    target: ModeIndex,
    data: F,
) -> Result<OracleReport> {
    if cfg.n != 3 {
        return Err(Error::UnsupportedDimension(cfg.n));
    }
    cfg.validate()?;
    let neck = Neck::from_config(cfg);
    let m = params.nodes;
    if m < 9 {
        return Err(Error::Resolution(format!("{m} nodes per direction is too coarse")));
    }
    let zlo = neck.bottom(1.0).min(neck.bottom(0.0));
    let zhi = neck.top(1.0).max(neck.top(0.0));
    let hx = 2.0 / (m - 1) as f64;
    let hz = (zhi - zlo) / (m - 1) as f64;
    let coord = |p: usize| -1.0 + p as f64 * hx;
    let zcoord = |s: usize| zlo + s as f64 * hz;
    let id = |p: usize, q: usize, s: usize| (p * m + q) * m + s;

    let mut kind = vec![Node::Outside; m * m * m];
    let mut count = 0;
    for p in 0..m {
        for q in 0..m {
            let (x, y) = (coord(p), coord(q));
            let r = (x * x + y * y).sqrt();
            for s in 0..m {
                let z = zcoord(s);
                kind[id(p, q, s)] = if r >= 1.0 - 1e-12 {
                    Node::Fixed
                } else if z >= neck.bottom(r) && z <= neck.top(r) {
                    count += 1;
                    Node::Free(count - 1)
                } else {
                    Node::Outside
                };
            }
        }
    }
    let value = |p: usize, q: usize, s: usize| data(coord(p), coord(q), zcoord(s));
    let (wx, wz) = (1.0 / (hx * hx), 1.0 / (hz * hz));
    let mut tb = TripletBuilder::with_capacity(count, 7 * count);
    let mut rhs = vec![0.0; count];
    for p in 0..m {
        for q in 0..m {
            for s in 0..m {
                let Node::Free(row) = kind[id(p, q, s)] else { continue };
                let mut diag = 0.0;
                let neighbours = [
                    (p.wrapping_sub(1), q, s, wx),
                    (p + 1, q, s, wx),
                    (p, q.wrapping_sub(1), s, wx),
                    (p, q + 1, s, wx),
                    (p, q, s.wrapping_sub(1), wz),
                    (p, q, s + 1, wz),
                ];
                for (a, b, c, w) in neighbours {
                    if a >= m || b >= m || c >= m {
                        continue;
                    }
                    match kind[id(a, b, c)] {
                        Node::Free(col) => {
                            diag += w;
                            tb.add(row, col, -w);
                        }
                        Node::Fixed => {
                            diag += w;
                            rhs[row] += w * value(a, b, c);
                        }
                        Node::Outside => {}
                    }
                }
                tb.add(row, row, diag);
            }
        }
    }
    let matrix = tb.build();
    let (sol, iterations) = pcg(&matrix, &rhs, 1e-12, 20 * count)?;

    let sample = |x: f64, y: f64, z: f64| -> Result<f64> {
        let fp = (x + 1.0) / hx;
        let fq = (y + 1.0) / hx;
        let fs = (z - zlo) / hz;
        let (p0, q0, s0) = (fp.floor() as usize, fq.floor() as usize, fs.floor() as usize);
        let (tx, ty, tz) = (fp - p0 as f64, fq - q0 as f64, fs - s0 as f64);
        let mut acc = 0.0;
        for (dp, wxp) in [(0, 1.0 - tx), (1, tx)] {
            for (dq, wyq) in [(0, 1.0 - ty), (1, ty)] {
                for (ds, wzs) in [(0, 1.0 - tz), (1, tz)] {
                    let (a, b, c) = (p0 + dp, q0 + dq, s0 + ds);
                    let v = match kind[id(a, b, c)] {
                        Node::Free(j) => sol[j],
                        Node::Fixed => value(a, b, c),
                        Node::Outside => {
                            return Err(Error::Resolution(format!(
                                "sample ({x}, {y}, {z}) touches a node outside the neck"
                            )))
                        }
                    };
                    acc += wxp * wyq * wzs * v;
                }
            }
        }
        Ok(acc)
    };

    let modes = circle_modes(params.kmax);
    let mut energies = vec![0.0; modes.len()];
    let radii: Vec<f64> = (0..7).map(|j| 0.15 + 0.1 * j as f64).collect();
    for &r in &radii {
        let z = 0.5 * (neck.top(r) + neck.bottom(r));
        let mut samples = SphereSamples::uniform(params.angles);
        for (v, &t) in samples.values.iter_mut().zip(&samples.angles) {
            *v = sample(r * t.cos(), r * t.sin(), z)?;
        }
        for (e, &mode) in energies.iter_mut().zip(&modes) {
            *e += project(&samples, mode)?.powi(2);
        }
    }
    let total: f64 = energies.iter().sum();
    let on_target = modes
        .iter()
        .zip(&energies)
        .find(|(m, _)| **m == target)
        .map(|(_, e)| *e)
        .ok_or_else(|| Error::Config(format!("target mode {target:?} above kmax")))?;
    Ok(OracleReport {
        fraction: if total > 0.0 { on_target / total } else { 0.0 },
        energies: modes.into_iter().zip(energies).collect(),
        radii,
        unknowns: count,
        iterations,
    })
}

/// The `x_1` datum: `√π r Y_{1,1}`.
pub fn x1_data(x: f64, _y: f64, _z: f64) -> f64 {
    x
}

/// Default oracle: `n = 3`, `r0 = 0.25`, a gap wide enough to hold several
/// vertical cells on the coarse grid.
pub fn default_oracle_config() -> ProblemConfig {
    ProblemConfig {
        n: 3,
        epsilon: 0.2,
        r0: 0.25,
        mode_k: 1,
        ..ProblemConfig::default()
    }
}
