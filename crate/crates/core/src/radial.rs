//! Graded radial grids and sampled radial functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GAUSS4_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS4_W: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Four-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss4<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GAUSS4_X
        .iter()
        .zip(GAUSS4_W.iter())
        .map(|(&x, &w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Adaptive Gauss quadrature: bisects until the four-point rule agrees with
/// its two halves to `tol` (absolute), or to a few ulps of the local value
/// when `tol` drops below rounding level.
pub fn adaptive_integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = gauss4(a, m, f);
        let right = gauss4(m, b, f);
        let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
        if depth == 0 || !(left + right).is_finite() || (left + right - whole).abs() <= tol.max(floor) {
            return left + right;
        }
        recurse(f, a, m, left, 0.5 * tol, depth - 1) + recurse(f, m, b, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let whole = gauss4(a, b, f);
    recurse(f, a, b, whole, tol, 30)
}

/// Running integral `∫_{nodes[start]}^{nodes[j]} f` for every `j ≥ start`,
/// composite four-point Gauss per interval. Entries before `start` are zero.
pub fn cumulative_integral<F: FnMut(f64) -> f64>(nodes: &[f64], start: usize, mut f: F) -> Vec<f64> {
    let mut out = vec![0.0; nodes.len()];
    for j in start + 1..nodes.len() {
        out[j] = out[j - 1] + gauss4(nodes[j - 1], nodes[j], &mut f);
    }
    out
}

/// Controls for [`RadialGrid::graded`].
///
/// Local spacing follows `1/h(ρ) = 1/h_max + Σ_c 1/(h_c + (q-1)|ρ - c|)`
/// over the cluster points `c ∈ {r0, 0, 1}`, so spacing grows geometrically
/// with ratio about `q` away from each cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradingParams {
    pub max_spacing: f64,
    pub ratio: f64,
    /// Spacing at `r0`; `None` selects `√ε / 8`.
    pub cluster_spacing: Option<f64>,
    pub axis_spacing: f64,
    pub lateral_spacing: f64,
    /// Each level doubles the node count of every segment (nested grids).
    pub refine: u32,
}

impl Default for GradingParams {
    fn default() -> Self {
        Self {
            max_spacing: 1.0 / 100.0,
            ratio: 1.1,
            cluster_spacing: None,
            axis_spacing: 1.0 / 400.0,
            lateral_spacing: 1.0 / 200.0,
            refine: 0,
        }
    }
}

impl GradingParams {
    /// Grading for the one-dimensional radial problems: geometric all the
    /// way into the axis so that the cutoff `a → 0` can be resolved.
    pub fn ode() -> Self {
        Self {
            max_spacing: 1.0 / 200.0,
            axis_spacing: 1e-9,
            ..Self::default()
        }
    }
}

/// Strictly increasing nodes in `(0, 1]`, containing `r0/2`, `r0` and `1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    r0: f64,
}

struct Density {
    h_max: f64,
    slope: f64,
    clusters: Vec<(f64, f64)>,
}

impl Density {
    fn cumulative(&self, rho: f64) -> f64 {
        let mut total = rho / self.h_max;
        for &(c, h) in &self.clusters {
            let d = rho - c;
            total += d.signum() * ((h + self.slope * d.abs()) / h).ln() / self.slope;
        }
        total
    }

    fn invert(&self, target: f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cumulative(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

impl RadialGrid {
    pub fn graded(r0: f64, epsilon: f64, params: &GradingParams) -> Result<Self> {
        if !(0.0..0.5).contains(&r0) {
            return Err(Error::Config(format!("r0 = {r0} outside [0, 1/2)")));
        }
        if !(params.ratio > 1.0) || !(params.max_spacing > 0.0) {
            return Err(Error::Config("grading ratio must exceed 1 and spacing must be positive".into()));
        }
        let cluster = params.cluster_spacing.unwrap_or(epsilon.sqrt() / 8.0);
        let density = Density {
            h_max: params.max_spacing,
            slope: params.ratio - 1.0,
            clusters: vec![
                (r0, cluster),
                (0.0, params.axis_spacing),
                (1.0, params.lateral_spacing),
            ],
        };
        let mut breaks = vec![0.0];
        if r0 > 0.0 {
            breaks.push(0.5 * r0);
            breaks.push(r0);
        }
        breaks.push(1.0);
        let mut nodes = Vec::new();
        for seg in breaks.windows(2) {
            let (p, q) = (seg[0], seg[1]);
            let (fp, fq) = (density.cumulative(p), density.cumulative(q));
            let base = (fq - fp).ceil().max(2.0) as usize;
            let count = base << params.refine;
            for j in 1..=count {
                let node = if j == count {
                    q
                } else {
                    let target = fp + (fq - fp) * j as f64 / count as f64;
                    density.invert(target, p, q)
                };
                nodes.push(node);
            }
        }
        Self::from_nodes(nodes, r0)
    }

    /// Uniform grid of `count` intervals on `(0, 1]`, with `r0/2`, `r0`
    /// inserted when missing.
    pub fn uniform(count: usize, r0: f64) -> Result<Self> {
        let mut nodes: Vec<f64> = (1..=count).map(|j| j as f64 / count as f64).collect();
        if r0 > 0.0 {
            for extra in [0.5 * r0, r0] {
                if !nodes.contains(&extra) {
                    nodes.push(extra);
                }
            }
            nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        Self::from_nodes(nodes, r0)
    }

    pub fn from_nodes(nodes: Vec<f64>, r0: f64) -> Result<Self> {
        if nodes.is_empty() || nodes[0] <= 0.0 {
            return Err(Error::Config("radial nodes must be positive".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("radial nodes must be strictly increasing".into()));
        }
        if *nodes.last().unwrap() != 1.0 {
            return Err(Error::Config("radial grid must end at 1".into()));
        }
        let grid = Self { nodes, r0 };
        if r0 > 0.0 && (grid.index_of(r0).is_none() || grid.index_of(0.5 * r0).is_none()) {
            return Err(Error::Config("radial grid must contain r0/2 and r0 as nodes".into()));
        }
        Ok(grid)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Index of a node equal to `r` (exact comparison).
    pub fn index_of(&self, r: f64) -> Option<usize> {
        self.nodes.binary_search_by(|x| x.partial_cmp(&r).unwrap()).ok()
    }

    /// Smallest spacing between consecutive nodes (the axis gap excluded).
    pub fn min_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Index `j` with `nodes[j] ≤ r ≤ nodes[j+1]`, clamped to valid intervals.
pub(crate) fn locate(nodes: &[f64], r: f64) -> usize {
    let n = nodes.len();
    if r <= nodes[0] {
        return 0;
    }
    if r >= nodes[n - 1] {
        return n - 2;
    }
    match nodes.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
        Ok(j) => j.min(n - 2),
        Err(j) => j - 1,
    }
}

/// Three-point derivative estimate at `nodes[i]` using the nodes `i0, i0+1, i0+2`.
fn three_point(nodes: &[f64], values: &[f64], i0: usize, at: usize) -> f64 {
    let (x0, x1, x2) = (nodes[i0], nodes[i0 + 1], nodes[i0 + 2]);
    let (f0, f1, f2) = (values[i0], values[i0 + 1], values[i0 + 2]);
    let x = nodes[at];
    // derivative of the interpolating quadratic
    let l0 = (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
    let l1 = (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
    let l2 = (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
    f0 * l0 + f1 * l1 + f2 * l2
}

/// Second-order derivative estimates of nodal data; `breaks` are nodes
/// where only one-sided stencils are used. Returns `(left, right)`
/// derivatives per node.
pub fn nodal_derivatives(nodes: &[f64], values: &[f64], breaks: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = nodes.len();
    assert!(n >= 3, "need at least three nodes");
    let is_break = |i: usize| breaks.iter().any(|&b| b == nodes[i]);
    // segment boundaries
    let mut cuts = vec![0];
    for i in 1..n - 1 {
        if is_break(i) {
            cuts.push(i);
        }
    }
    cuts.push(n - 1);
    let mut left = vec![0.0; n];
    let mut right = vec![0.0; n];
    for seg in cuts.windows(2) {
        let (s, e) = (seg[0], seg[1]);
        for i in s..=e {
            let d = if e - s < 2 {
                (values[e] - values[s]) / (nodes[e] - nodes[s])
            } else if i == s {
                three_point(nodes, values, s, i)
            } else if i == e {
                three_point(nodes, values, e - 2, i)
            } else {
                three_point(nodes, values, i - 1, i)
            };
            if i == s {
                right[i] = d;
            }
            if i == e {
                left[i] = d;
            }
            if i != s && i != e {
                left[i] = d;
                right[i] = d;
            }
        }
    }
    left[0] = right[0];
    right[n - 1] = left[n - 1];
    (left, right)
}

/// Values sampled on radial nodes with piecewise cubic Hermite interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
    dleft: Vec<f64>,
    dright: Vec<f64>,
}

impl RadialFunction {
    /// Interpolant with derivatives estimated from the data. Nodes listed in
    /// `breaks` (typically `r0`) get one-sided estimates on each side.
    pub fn from_values(nodes: Vec<f64>, values: Vec<f64>, breaks: &[f64]) -> Self {
        assert_eq!(nodes.len(), values.len());
        let (dleft, dright) = nodal_derivatives(&nodes, &values, breaks);
        Self {
            nodes,
            values,
            dleft,
            dright,
        }
    }

    pub fn with_derivatives(nodes: Vec<f64>, values: Vec<f64>, derivs: Vec<f64>) -> Self {
        assert_eq!(nodes.len(), values.len());
        assert_eq!(nodes.len(), derivs.len());
        Self {
            nodes,
            values,
            dleft: derivs.clone(),
            dright: derivs,
        }
    }

    pub fn from_fn<F: Fn(f64) -> f64, D: Fn(f64) -> f64>(nodes: Vec<f64>, f: F, df: D) -> Self {
        let values = nodes.iter().map(|&r| f(r)).collect();
        let derivs = nodes.iter().map(|&r| df(r)).collect();
        Self::with_derivatives(nodes, values, derivs)
    }

    pub fn zeros(nodes: Vec<f64>) -> Self {
        let n = nodes.len();
        Self::with_derivatives(nodes, vec![0.0; n], vec![0.0; n])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored derivative at each node (left-sided at break nodes).
    pub fn derivatives(&self) -> &[f64] {
        &self.dleft
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn hermite(&self, r: f64) -> (f64, f64) {
        let j = locate(&self.nodes, r);
        let (x0, x1) = (self.nodes[j], self.nodes[j + 1]);
        let h = x1 - x0;
        let t = (r - x0) / h;
        let (f0, f1) = (self.values[j], self.values[j + 1]);
        let (d0, d1) = (self.dright[j] * h, self.dleft[j + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * f0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * f1
            + (t3 - t2) * d1;
        let dv = (6.0 * t2 - 6.0 * t) * f0
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * f1
            + (3.0 * t2 - 2.0 * t) * d1;
        (v, dv / h)
    }

    pub fn eval(&self, r: f64) -> f64 {
        if let Ok(j) = self.nodes.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            return self.values[j];
        }
        self.hermite(r).0
    }

    pub fn deriv(&self, r: f64) -> f64 {
        self.hermite(r).1
    }

    /// `∫_a^b f`, composite Gauss over the node intervals.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        let mut breaks: Vec<f64> = self.nodes.iter().copied().filter(|&x| x > a && x < b).collect();
        breaks.insert(0, a);
        breaks.push(b);
        breaks.windows(2).map(|w| gauss4(w[0], w[1], |r| self.eval(r))).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_grid_contains_breakpoints() {
        let g = RadialGrid::graded(0.25, 1e-4, &GradingParams::default()).unwrap();
        assert!(g.index_of(0.125).is_some());
        assert!(g.index_of(0.25).is_some());
        assert_eq!(*g.nodes().last().unwrap(), 1.0);
        assert!(g.nodes()[0] > 0.0);
        // fine spacing at r0 close to sqrt(eps)/8
        let i = g.index_of(0.25).unwrap();
        let h = g.nodes()[i + 1] - g.nodes()[i];
        assert!(h < 2.0 * 1e-2 / 8.0, "{h}");
        // spacing ratio bounded
        let n = g.nodes();
        for w in n.windows(3) {
            let q = (w[2] - w[1]) / (w[1] - w[0]);
            assert!(q < 1.25 && q > 0.8, "{q}");
        }
    }

    #[test]
    fn refinement_is_nested() {
        let p = GradingParams::default();
        let g0 = RadialGrid::graded(0.25, 1e-3, &p).unwrap();
        let g1 = RadialGrid::graded(0.25, 1e-3, &GradingParams { refine: 1, ..p }).unwrap();
        assert_eq!(g1.len(), 2 * g0.len());
        for (j, &x) in g0.nodes().iter().enumerate() {
            assert!((g1.nodes()[2 * j + 1] - x).abs() < 1e-14);
        }
    }

    #[test]
    fn control_grid_clusters_at_axis() {
        let g = RadialGrid::graded(0.0, 1e-4, &GradingParams::default()).unwrap();
        assert!(g.nodes()[0] < 2e-3);
        assert!(g.index_of(1.0).is_some());
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(RadialGrid::from_nodes(vec![0.5, 0.4, 1.0], 0.0).is_err());
        assert!(RadialGrid::from_nodes(vec![0.0, 0.5, 1.0], 0.0).is_err());
        assert!(RadialGrid::from_nodes(vec![0.2, 0.5, 1.0], 0.3).is_err());
    }

    #[test]
    fn interpolation_reproduces_nodes_and_cubics() {
        let nodes: Vec<f64> = (1..=20).map(|j| (j as f64 / 20.0).powf(1.3)).collect();
        let f = |r: f64| 1.0 + r - 2.0 * r * r + 0.5 * r * r * r;
        let df = |r: f64| 1.0 - 4.0 * r + 1.5 * r * r;
        let rf = RadialFunction::from_fn(nodes.clone(), f, df);
        for &x in &nodes {
            assert_eq!(rf.eval(x), f(x));
        }
        for x in [0.11, 0.37, 0.5, 0.93] {
            assert!((rf.eval(x) - f(x)).abs() < 1e-14);
            assert!((rf.deriv(x) - df(x)).abs() < 1e-13);
        }
        let exact = |r: f64| r + 0.5 * r * r - 2.0 / 3.0 * r.powi(3) + 0.125 * r.powi(4);
        let lo = nodes[0];
        assert!((rf.integrate(lo, 1.0) - (exact(1.0) - exact(lo))).abs() < 1e-14);
        let est = RadialFunction::from_values(nodes.clone(), nodes.iter().map(|&r| f(r)).collect(), &[]);
        for &x in &nodes {
            assert_eq!(est.eval(x), f(x));
        }
        assert!((est.eval(0.5) - f(0.5)).abs() < 1e-4);
    }

    #[test]
    fn break_nodes_use_one_sided_derivatives() {
        let nodes: Vec<f64> = (1..=40).map(|j| j as f64 / 40.0).collect();
        let kink = |r: f64| (r - 0.5).max(0.0);
        let values = nodes.iter().map(|&r| kink(r)).collect();
        let rf = RadialFunction::from_values(nodes, values, &[0.5]);
        assert!(rf.eval(0.49).abs() < 1e-15);
        assert!((rf.eval(0.51) - 0.01).abs() < 1e-14);
    }

    #[test]
    fn cumulative_gauss() {
        let nodes: Vec<f64> = (0..=10).map(|j| j as f64 / 10.0).collect();
        let c = cumulative_integral(&nodes, 2, |x| x.powi(7));
        assert_eq!(c[2], 0.0);
        assert!((c[10] - (1.0 - 0.2f64.powi(8)) / 8.0).abs() < 1e-15);
    }
}
