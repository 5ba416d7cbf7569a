//! Radial machinery for a single mode of the vertically averaged solution.
//!
//! The averaged mode `V(r)` satisfies
//!
//! ```text
//! V'' + b V' - λ V / r² = A' + B,   b(r) = (n-2)/r + 2(r-r0)₊ / (ε + (r-r0)₊²)
//! ```
//!
//! with `λ = k(k+n-3)`. This module provides the drift `b`, its integrating
//! factor in closed form, a second-order solver for the two-point problem,
//! the homogeneous solution `h` with `h(0) = 0`, `h(1) = 1`, and the
//! reduction-of-order formula that recovers `V'` from `h`, `A`, `B` and the
//! data at `r0/2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::ProblemConfig;
use crate::linalg::solve_tridiagonal;
use crate::radial::{adaptive_integrate, cumulative_integral, nodal_derivatives, RadialFunction, RadialGrid};

/// Signature of a drift evaluator; lets tests substitute a mutated drift.
pub type DriftFn = fn(&ProblemConfig, f64) -> Result<f64>;

#[inline]
pub(crate) fn drift_at(cfg: &ProblemConfig, r: f64) -> f64 {
    let p = (r - cfg.r0).max(0.0);
    let geometric = if cfg.n == 2 { 0.0 } else { (cfg.n as f64 - 2.0) / r };
    geometric + 2.0 * p / (cfg.epsilon + p * p)
}

/// `b(r) = (n-2)/r + 2(r-r0)₊ / (ε + (r-r0)₊²)`.
pub fn drift(cfg: &ProblemConfig, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("drift needs r > 0, got {r}")));
    }
    Ok(drift_at(cfg, r))
}

/// `∫_{r0/2}^t b` in closed form:
/// `(n-2)(log t - log(r0/2)) + log((ε + (t-r0)₊²)/ε)`.
pub fn log_integrating_factor(cfg: &ProblemConfig, t: f64) -> Result<f64> {
    let start = 0.5 * cfg.r0;
    if t < start {
        return Err(Error::Domain(format!("t = {t} below r0/2 = {start}")));
    }
    if cfg.n > 2 && cfg.r0 == 0.0 {
        return Err(Error::Domain(
            "the (n-2)/r part of the drift is not integrable from r0/2 = 0".into(),
        ));
    }
    let p = (t - cfg.r0).max(0.0);
    let geometric = if cfg.n == 2 {
        0.0
    } else {
        (cfg.n as f64 - 2.0) * (t.ln() - start.ln())
    };
    Ok(geometric + ((cfg.epsilon + p * p) / cfg.epsilon).ln())
}

#[inline]
fn log_if_at(cfg: &ProblemConfig, t: f64) -> f64 {
    let p = (t - cfg.r0).max(0.0);
    let geometric = if cfg.n == 2 {
        0.0
    } else {
        (cfg.n as f64 - 2.0) * (t.ln() - (0.5 * cfg.r0).ln())
    };
    geometric + ((cfg.epsilon + p * p) / cfg.epsilon).ln()
}

/// The same integral by adaptive quadrature of `drift`, split at `r0`.
pub fn quadrature_log_integrating_factor(cfg: &ProblemConfig, t: f64, drift: DriftFn) -> Result<f64> {
    let start = 0.5 * cfg.r0;
    if t < start || !(t > 0.0) {
        return Err(Error::Domain(format!("t = {t} below r0/2 = {start}")));
    }
    let f = |s: f64| drift(cfg, s).unwrap_or(f64::NAN);
    let tol = 1e-14;
    if t <= cfg.r0 {
        return Ok(adaptive_integrate(&f, start, t, tol));
    }
    Ok(adaptive_integrate(&f, start, cfg.r0, tol) + adaptive_integrate(&f, cfg.r0, t, tol))
}

/// Solves `V'' + b V' - λ V/r² = H` on `nodes` with Dirichlet values at both
/// ends, using second-order three-point differences on the nonuniform grid.
pub fn solve_radial_bvp<F: Fn(f64) -> f64>(
    cfg: &ProblemConfig,
    nodes: &[f64],
    source: F,
    left: f64,
    right: f64,
) -> Result<Vec<f64>> {
    let m = nodes.len();
    if m < 3 {
        return Err(Error::Resolution("radial problem needs at least three nodes".into()));
    }
    if !(nodes[0] > 0.0) {
        return Err(Error::Domain("radial problem must stay away from r = 0".into()));
    }
    let lambda = cfg.eigenvalue();
    let mut sub = vec![0.0; m];
    let mut diag = vec![1.0; m];
    let mut sup = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    rhs[0] = left;
    rhs[m - 1] = right;
    for i in 1..m - 1 {
        let x = nodes[i];
        let hm = x - nodes[i - 1];
        let hp = nodes[i + 1] - x;
        let b = drift_at(cfg, x);
        sub[i] = (2.0 - b * hp) / (hm * (hm + hp));
        sup[i] = (2.0 + b * hm) / (hp * (hm + hp));
        diag[i] = (-2.0 + b * (hp - hm)) / (hm * hp) - lambda / (x * x);
        rhs[i] = source(x);
    }
    solve_tridiagonal(&sub, &diag, &sup, &rhs)
}

/// Default convergence threshold for successive cutoff halvings.
pub const CUTOFF_TOLERANCE: f64 = 1e-6;
const MAX_HALVINGS: usize = 60;

/// The homogeneous solution `h` of `L h = 0` with `h(0) = 0`, `h(1) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousSolution {
    /// `h` on the grid nodes, with derivatives.
    pub h: RadialFunction,
    /// `C1` with `h = C1 r^k` on `(0, r0)`; `None` for the control case.
    pub c1: Option<f64>,
    /// Final cutoff `a` of the approximating problems.
    pub a_cut: f64,
    /// `(a, C1 or probe value)` for every cutoff tried.
    pub cutoff_history: Vec<(f64, f64)>,
    /// Largest excess of the discrete `h_a` over `r^k / r0^k` on `(a, r0)`.
    pub comparison_excess: f64,
    /// `min_nodes min(h - r^k, 1 - h)`; negative values are violations.
    pub bounds_slack: f64,
    /// Whether the bounds hold with slack `≥ -1e-8`.
    pub verified: bool,
    degree: usize,
}

impl HomogeneousSolution {
    /// `h ≡ 1`: the zero mode, for which reduction of order collapses to the
    /// plain integrating factor.
    pub fn constant(nodes: Vec<f64>) -> Self {
        let m = nodes.len();
        Self {
            h: RadialFunction::with_derivatives(nodes, vec![1.0; m], vec![0.0; m]),
            c1: None,
            a_cut: 0.0,
            cutoff_history: Vec::new(),
            comparison_excess: 0.0,
            bounds_slack: 0.0,
            verified: true,
            degree: 0,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Largest nodal difference quotient `|h(x_{j+1}) - h(x_j)| / (x_{j+1} - x_j)`.
    pub fn max_difference_quotient(&self) -> f64 {
        let x = self.h.nodes();
        let v = self.h.values();
        x.windows(2)
            .zip(v.windows(2))
            .map(|(xs, vs)| ((vs[1] - vs[0]) / (xs[1] - xs[0])).abs())
            .fold(0.0, f64::max)
    }

    /// `max_{(a, r0)} |h(r)/r^k - C1|`, over grid nodes of the inner zone.
    pub fn inner_ratio_spread(&self, r0: f64) -> f64 {
        let Some(c1) = self.c1 else { return 0.0 };
        self.h
            .nodes()
            .iter()
            .zip(self.h.values())
            .filter(|(&r, _)| r > self.a_cut && r < r0)
            .map(|(&r, &v)| (v / r.powi(self.degree as i32) - c1).abs())
            .fold(0.0, f64::max)
    }
}

fn working_nodes(grid: &[f64], a: f64) -> Vec<f64> {
    let mut nodes = vec![a];
    let above: Vec<f64> = grid.iter().copied().filter(|&x| x > a).collect();
    let mut skip = 0;
    if above.len() >= 2 && above[0] - a < 0.3 * (above[1] - above[0]) {
        skip = 1;
    }
    nodes.extend_from_slice(&above[skip..]);
    nodes
}

/// Solves `L h = 0` on `(a, 1)` with `h(a) = a^k`, `h(1) = 1`, halving `a`
/// until the inner coefficient `C1 = h(r0)/r0^k` changes by less than
/// [`CUTOFF_TOLERANCE`]. The returned `h` is the limit profile: `C1 r^k` on
/// the flat zone and the discrete solution beyond it.
pub fn solve_homogeneous(
    cfg: &ProblemConfig,
    grid: &RadialGrid,
    a_cut: Option<f64>,
) -> Result<HomogeneousSolution> {
    let k = cfg.mode_k;
    if k == 0 {
        return Err(Error::Config("homogeneous solution is defined for k >= 1".into()));
    }
    let r0 = cfg.r0;
    let kk = k as i32;
    let mut a = a_cut.unwrap_or(if r0 > 0.0 { r0 / 16.0 } else { 1e-4 });
    let upper = if r0 > 0.0 { r0 } else { 1e-3 };
    if !(a > 0.0 && a < upper) {
        return Err(Error::Config(format!("cutoff a = {a} outside (0, {upper})")));
    }
    let probe = |nodes: &[f64], sol: &[f64]| -> f64 {
        if r0 > 0.0 {
            let j = nodes.iter().position(|&x| x == r0).expect("r0 is a node");
            sol[j] / r0.powi(kk)
        } else {
            // value at the first grid node beyond 0.01
            let j = nodes.iter().position(|&x| x >= 0.01).unwrap_or(nodes.len() / 2);
            sol[j]
        }
    };
    let mut history = Vec::new();
    let mut nodes = working_nodes(grid.nodes(), a);
    let mut sol = solve_radial_bvp(cfg, &nodes, |_| 0.0, a.powi(kk), 1.0)?;
    history.push((a, probe(&nodes, &sol)));
    let mut converged = false;
    for _ in 0..MAX_HALVINGS {
        let next_a = 0.5 * a;
        let next_nodes = working_nodes(grid.nodes(), next_a);
        let next_sol = solve_radial_bvp(cfg, &next_nodes, |_| 0.0, next_a.powi(kk), 1.0)?;
        let value = probe(&next_nodes, &next_sol);
        let change = (value - history.last().unwrap().1).abs();
        history.push((next_a, value));
        a = next_a;
        nodes = next_nodes;
        sol = next_sol;
        if change < CUTOFF_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Solver(format!(
            "cutoff halving did not converge below {CUTOFF_TOLERANCE:e}"
        )));
    }

    let c1 = if r0 > 0.0 { Some(history.last().unwrap().1) } else { None };
    let comparison_excess = if r0 > 0.0 {
        nodes
            .iter()
            .zip(&sol)
            .filter(|(&x, _)| x > a && x < r0)
            .map(|(&x, &v)| v - (x / r0).powi(kk))
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        0.0
    };

    let grid_nodes = grid.nodes().to_vec();
    let tail = |x: f64| -> f64 {
        let j = nodes.iter().position(|&y| y == x);
        match j {
            Some(j) => sol[j],
            None => {
                // grid node dropped next to the cutoff, or below it
                let v_a = sol[0];
                if x < a {
                    v_a * (x / a).powi(kk)
                } else {
                    let f = RadialFunction::from_values(nodes.clone(), sol.clone(), &[]);
                    f.eval(x)
                }
            }
        }
    };
    let values: Vec<f64> = grid_nodes
        .iter()
        .map(|&x| match c1 {
            Some(c) if x <= r0 => c * x.powi(kk),
            _ => tail(x),
        })
        .collect();

    let derivs = match c1 {
        Some(c) => homogeneous_derivatives(cfg, &grid_nodes, &values, c),
        None => nodal_derivatives(&grid_nodes, &values, &[]).0,
    };
    let h = RadialFunction::with_derivatives(grid_nodes.clone(), values.clone(), derivs);

    let bounds_slack = grid_nodes
        .iter()
        .zip(&values)
        .map(|(&x, &v)| (v - x.powi(kk)).min(1.0 - v))
        .fold(f64::INFINITY, f64::min);
    let verified = bounds_slack >= -1e-8 && comparison_excess <= 1e-8;
    Ok(HomogeneousSolution {
        h,
        c1,
        a_cut: a,
        cutoff_history: history,
        comparison_excess,
        bounds_slack,
        verified,
        degree: k,
    })
}

/// `h'` from the inner formula `C1 k r^{k-1}` below `r0/2` and from the
/// integrating-factor representation
/// `h'(r) = e^{-∫b} [h'(r0/2) + λ ∫ e^{∫b} h/t² dt]` beyond it.
fn homogeneous_derivatives(cfg: &ProblemConfig, nodes: &[f64], values: &[f64], c1: f64) -> Vec<f64> {
    let k = cfg.mode_k as f64;
    let kk = cfg.mode_k as i32;
    let lambda = cfg.eigenvalue();
    let half = 0.5 * cfg.r0;
    let start = nodes.iter().position(|&x| x == half).expect("r0/2 is a node");
    let h_interp = RadialFunction::from_values(nodes.to_vec(), values.to_vec(), &[cfg.r0]);
    let slope0 = c1 * k * half.powi(kk - 1);
    let integral = cumulative_integral(nodes, start, |t| {
        log_if_at(cfg, t).exp() * h_interp.eval(t) / (t * t)
    });
    nodes
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            if j < start {
                c1 * k * x.powi(kk - 1)
            } else {
                (-log_if_at(cfg, x)).exp() * (slope0 + lambda * integral[j])
            }
        })
        .collect()
}

/// Value and slope of `V` at `r0/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Anchor {
    pub value: f64,
    pub slope: f64,
}

/// Output of the reduction-of-order reconstruction on nodes `≥ r0/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedOrder {
    pub nodes: Vec<f64>,
    pub v: Vec<f64>,
    pub vprime: Vec<f64>,
    pub w: Vec<f64>,
    pub wprime: Vec<f64>,
    /// The three pieces of the integrated-by-parts `A'` term, each already
    /// multiplied by the decaying factor `e^{-Φ}`.
    pub term_i: Vec<f64>,
    pub term_ii: Vec<f64>,
    pub term_iii: Vec<f64>,
    pub term_b: Vec<f64>,
}

/// Recovers `V'` on `[r0/2, 1]` from `V = h w`, with `w'` given by the
/// integrating factor of `w'' + (2h'/h + b) w' = (A' + B)/h`; the `A'`
/// contribution is integrated by parts so that only `A` is sampled.
pub fn reduce_order(
    cfg: &ProblemConfig,
    h: &HomogeneousSolution,
    source_a: &RadialFunction,
    source_b: &RadialFunction,
    anchor: Anchor,
) -> Result<ReducedOrder> {
    let half = 0.5 * cfg.r0;
    if !(cfg.r0 > 0.0) {
        return Err(Error::Domain("reduction of order is anchored at r0/2 > 0".into()));
    }
    let all = source_a.nodes();
    let start = all
        .iter()
        .position(|&x| x == half)
        .ok_or_else(|| Error::Domain("source grid does not contain r0/2".into()))?;
    if *all.last().unwrap() < 1.0 - 1e-12 || source_b.nodes() != all {
        return Err(Error::Domain("sources must share one grid covering [r0/2, 1]".into()));
    }
    let hn = h.h.nodes();
    if hn[0] > half || *hn.last().unwrap() < *all.last().unwrap() {
        return Err(Error::Domain("homogeneous solution does not cover the source grid".into()));
    }
    let nodes: Vec<f64> = all[start..].to_vec();
    let m = nodes.len();

    let hf = &h.h;
    let h0 = hf.eval(half);
    let dh0 = hf.deriv(half);
    let a0 = source_a.eval(half);
    // e^{Φ(t)}, Φ = ∫ (2h'/h + b)
    let growth = |t: f64| -> f64 {
        let ratio = hf.eval(t) / h0;
        ratio * ratio * log_if_at(cfg, t).exp()
    };
    let ii = cumulative_integral(&nodes, 0, |t| {
        let (ht, dht) = (hf.eval(t), hf.deriv(t));
        -growth(t) * source_a.eval(t) / ht * (2.0 * dht / ht + drift_at(cfg, t))
    });
    let iii = cumulative_integral(&nodes, 0, |t| {
        let (ht, dht) = (hf.eval(t), hf.deriv(t));
        growth(t) * source_a.eval(t) * dht / (ht * ht)
    });
    let bint = cumulative_integral(&nodes, 0, |t| growth(t) * source_b.eval(t) / hf.eval(t));

    let w0 = anchor.value / h0;
    let wp0 = anchor.slope / h0 - dh0 * anchor.value / (h0 * h0);

    let mut wprime = vec![0.0; m];
    let mut term_i = vec![0.0; m];
    let mut term_ii = vec![0.0; m];
    let mut term_iii = vec![0.0; m];
    let mut term_b = vec![0.0; m];
    for j in 0..m {
        let x = nodes[j];
        let e = growth(x);
        let hx = hf.eval(x);
        let first = e * source_a.eval(x) / hx - a0 / h0;
        term_i[j] = first / e;
        term_ii[j] = ii[j] / e;
        term_iii[j] = iii[j] / e;
        term_b[j] = bint[j] / e;
        wprime[j] = wp0 / e + term_i[j] + term_ii[j] + term_iii[j] + term_b[j];
    }
    let wp_fn = RadialFunction::from_values(nodes.clone(), wprime.clone(), &[cfg.r0]);
    let mut w = vec![w0; m];
    for j in 1..m {
        w[j] = w[j - 1] + wp_fn.integrate(nodes[j - 1], nodes[j]);
    }
    let v: Vec<f64> = nodes.iter().zip(&w).map(|(&x, &wx)| hf.eval(x) * wx).collect();
    let vprime: Vec<f64> = (0..m)
        .map(|j| hf.deriv(nodes[j]) * w[j] + hf.eval(nodes[j]) * wprime[j])
        .collect();
    Ok(ReducedOrder {
        nodes,
        v,
        vprime,
        w,
        wprime,
        term_i,
        term_ii,
        term_iii,
        term_b,
    })
}

/// `V'` on the nodes `≥ r0/2` of the source grid, see [`reduce_order`].
pub fn reduce_order_vprime(
    cfg: &ProblemConfig,
    h: &HomogeneousSolution,
    source_a: &RadialFunction,
    source_b: &RadialFunction,
    anchor: Anchor,
) -> Result<RadialFunction> {
    let sol = reduce_order(cfg, h, source_a, source_b, anchor)?;
    Ok(RadialFunction::from_values(sol.nodes, sol.vprime, &[cfg.r0]))
}

/// Exponents `s0, (s0 - γ/2)₊, …` ending at the first zero.
pub fn bootstrap_schedule(gamma: f64, s0: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Config(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let mut out = vec![s0];
    let mut j = 1.0;
    loop {
        let s = s0 - j * 0.5 * gamma;
        if s <= 1e-12 {
            out.push(0.0);
            return Ok(out);
        }
        out.push(s);
        j += 1.0;
    }
}
