//! Inclusion profiles, the neck between them, and the flattening change of
//! variables that turns the neck into a cylinder of height `2ε`.
//!
//! The upper and lower boundaries of the neck are the graphs
//!
//! ```text
//! Γ₊ : x_n =  ε/2 + h1(|x'|)
//! Γ₋ : x_n = -ε/2 + h2(|x'|)
//! ```
//!
//! with `h1 = h2 = 0` on the flat cap `|x'| ≤ r0` and
//! `h1 - h2 = a (|x'| - r0)₊² + c (|x'| - r0)₊^{2+γ}` outside it. The lower
//! profile is taken identically zero; only the difference enters the
//! coefficients of the flattened equation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics;

/// Parameters of one neck configuration and the spherical-harmonic mode
/// being studied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Ambient dimension, `n ≥ 2`.
    pub n: usize,
    /// Distance between the inclusions, `0 < ε < 1/4`.
    pub epsilon: f64,
    /// Curvature amplitude of the profile outside the flat cap.
    #[serde(default = "default_a")]
    pub a: f64,
    /// Radius of the flat cap; `r0 = 0` is the strictly convex control case.
    pub r0: f64,
    /// Hölder exponent of the profile remainder.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Spherical-harmonic degree.
    pub mode_k: usize,
    /// Index within the degree, `1 ≤ i ≤ N(k)`.
    #[serde(default = "default_mode_i")]
    pub mode_i: usize,
    /// Coefficient `c` of the optional `c (r - r0)₊^{2+γ}` remainder.
    #[serde(default)]
    pub remainder: f64,
}

fn default_a() -> f64 {
    1.0
}

fn default_gamma() -> f64 {
    0.5
}

fn default_mode_i() -> usize {
    1
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            n: 3,
            epsilon: 0.01,
            a: 1.0,
            r0: 0.25,
            gamma: 0.5,
            mode_k: 1,
            mode_i: 1,
            remainder: 0.0,
        }
    }
}

impl ProblemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("n must be >= 2, got {}", self.n)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be > 0".into()));
        }
        if !(self.epsilon < 0.25) {
            return Err(Error::Config(format!(
                "epsilon must be < 1/4, got {}",
                self.epsilon
            )));
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::Config(format!("a must be > 0, got {}", self.a)));
        }
        if !(0.0..0.5).contains(&self.r0) {
            return Err(Error::Config(format!(
                "r0 must lie in [0, 1/2), got {}",
                self.r0
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        if !self.remainder.is_finite() {
            return Err(Error::Config("remainder must be finite".into()));
        }
        let count = harmonics::mode_count(self.mode_k, self.n);
        if self.mode_i < 1 || self.mode_i > count {
            return Err(Error::Config(format!(
                "mode index i = {} outside 1..={} for degree k = {} in n = {}",
                self.mode_i, count, self.mode_k, self.n
            )));
        }
        Ok(())
    }

    /// `r0 = 0`: strictly convex inclusions, where the gradient is expected
    /// to blow up.
    pub fn is_control_case(&self) -> bool {
        self.r0 == 0.0
    }

    /// `k(k + n - 3)`, the only way the mode enters the reduced equations.
    pub fn eigenvalue(&self) -> f64 {
        harmonics::eigenvalue(self.mode_k, self.n)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..*self }
    }
}

/// Radial boundary profiles `h1`, `h2` (with `h2 ≡ 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub a: f64,
    pub r0: f64,
    pub gamma: f64,
    pub remainder: f64,
}

impl Profile {
    pub fn new(a: f64, r0: f64, gamma: f64, remainder: f64) -> Self {
        Self {
            a,
            r0,
            gamma,
            remainder,
        }
    }

    pub fn from_config(cfg: &ProblemConfig) -> Self {
        Self::new(cfg.a, cfg.r0, cfg.gamma, cfg.remainder)
    }

    /// Two parallel planes: `h1 = h2 = 0` everywhere.
    pub fn slab() -> Self {
        Self::new(0.0, 0.0, 0.5, 0.0)
    }

    #[inline]
    pub fn excess(&self, r: f64) -> f64 {
        (r - self.r0).max(0.0)
    }

    pub fn h1(&self, r: f64) -> f64 {
        let p = self.excess(r);
        self.a * p * p + self.remainder * p.powf(2.0 + self.gamma)
    }

    pub fn h2(&self, _r: f64) -> f64 {
        0.0
    }

    pub fn dh1(&self, r: f64) -> f64 {
        let p = self.excess(r);
        2.0 * self.a * p + self.remainder * (2.0 + self.gamma) * p.powf(1.0 + self.gamma)
    }

    pub fn dh2(&self, _r: f64) -> f64 {
        0.0
    }

    pub fn d2h1(&self, r: f64) -> f64 {
        let p = self.excess(r);
        if r <= self.r0 {
            return 0.0;
        }
        2.0 * self.a + self.remainder * (2.0 + self.gamma) * (1.0 + self.gamma) * p.powf(self.gamma)
    }

    /// `h1 - h2`.
    pub fn difference(&self, r: f64) -> f64 {
        self.h1(r) - self.h2(r)
    }

    pub fn ddifference(&self, r: f64) -> f64 {
        self.dh1(r) - self.dh2(r)
    }

    /// `e = h1 - h2 - (r - r0)₊²`, zero for the default `a = 1` profile.
    pub fn correction(&self, r: f64) -> f64 {
        let p = self.excess(r);
        self.difference(r) - p * p
    }
}

/// Coefficients of the flattened equation reduced to the `(ρ, y_n)` plane.
///
/// `g` multiplies the `y'` block, `alpha` is the radial component of
/// `a^{in}`, `beta` is `a^{nn}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialCoefficients {
    pub g: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// The coefficient matrix `a^{ij}` at a point of the flattened cylinder.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    matrix: DMatrix<f64>,
}

impl CoefficientMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    /// Diagonal entry `a^{ii}` of the `y'` block (`i < n - 1`, zero based).
    pub fn lateral(&self, i: usize) -> f64 {
        self.matrix[(i, i)]
    }

    /// Mixed entry `a^{in}` (zero based `i < n - 1`).
    pub fn mixed(&self, i: usize) -> f64 {
        let n = self.dim();
        self.matrix[(i, n - 1)]
    }

    /// `a^{nn}`.
    pub fn vertical(&self) -> f64 {
        let n = self.dim();
        self.matrix[(n - 1, n - 1)]
    }

    pub fn max_asymmetry(&self) -> f64 {
        let m = &self.matrix;
        (m - m.transpose()).amax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// The neck between the two inclusions for one gap width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neck {
    pub profile: Profile,
    pub epsilon: f64,
}

fn radius(xp: &[f64]) -> f64 {
    xp.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl Neck {
    pub fn new(profile: Profile, epsilon: f64) -> Self {
        Self { profile, epsilon }
    }

    pub fn from_config(cfg: &ProblemConfig) -> Self {
        Self::new(Profile::from_config(cfg), cfg.epsilon)
    }

    /// Vertical width `ε + h1(r) - h2(r)` of the neck at radius `r ∈ [0, 1]`.
    pub fn gap(&self, r: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Domain(format!("radius {r} outside [0, 1]")));
        }
        Ok(self.gap_at(r))
    }

    #[inline]
    pub(crate) fn gap_at(&self, r: f64) -> f64 {
        self.epsilon + self.profile.difference(r)
    }

    /// `ε + (r - r0)₊²`, the coefficient of the averaged equation.
    #[inline]
    pub fn averaged_coefficient(&self, r: f64) -> f64 {
        let p = self.profile.excess(r);
        self.epsilon + p * p
    }

    pub fn top(&self, r: f64) -> f64 {
        0.5 * self.epsilon + self.profile.h1(r)
    }

    pub fn bottom(&self, r: f64) -> f64 {
        -0.5 * self.epsilon + self.profile.h2(r)
    }

    /// Flattened vertical coordinate of the physical point `(r, x_n)`.
    #[inline]
    pub fn flat_height(&self, r: f64, xn: f64) -> f64 {
        let eps = self.epsilon;
        let t = (xn - self.profile.h2(r) + 0.5 * eps) / self.gap_at(r);
        2.0 * eps * (t - 0.5)
    }

    /// Physical vertical coordinate of the flattened point `(r, y_n)`.
    #[inline]
    pub fn physical_height(&self, r: f64, yn: f64) -> f64 {
        let eps = self.epsilon;
        self.profile.h2(r) - 0.5 * eps + (yn / (2.0 * eps) + 0.5) * self.gap_at(r)
    }

    /// `∂y_n/∂r` at fixed `x_n`, written in terms of the flattened height.
    #[inline]
    pub fn flat_height_dr(&self, r: f64, yn: f64) -> f64 {
        let eps = self.epsilon;
        let t = yn / (2.0 * eps) + 0.5;
        2.0 * eps / self.gap_at(r) * (-self.profile.dh2(r) - t * self.profile.ddifference(r))
    }

    /// `∂y_n/∂x_n = 2ε / gap`.
    #[inline]
    pub fn flat_height_dxn(&self, r: f64) -> f64 {
        2.0 * self.epsilon / self.gap_at(r)
    }

    fn check_physical(&self, x: &[f64]) -> Result<f64> {
        if x.len() < 2 {
            return Err(Error::Domain(format!("point of length {} (need n >= 2)", x.len())));
        }
        let n = x.len();
        let r = radius(&x[..n - 1]);
        if r > 1.0 {
            return Err(Error::Domain(format!("|x'| = {r} > 1")));
        }
        let xn = x[n - 1];
        let tol = 1e-12 * (1.0 + xn.abs());
        if xn < self.bottom(r) - tol || xn > self.top(r) + tol {
            return Err(Error::Domain(format!(
                "x_n = {xn} outside ({}, {}) at |x'| = {r}",
                self.bottom(r),
                self.top(r)
            )));
        }
        Ok(r)
    }

    fn check_flat(&self, y: &[f64]) -> Result<f64> {
        if y.len() < 2 {
            return Err(Error::Domain(format!("point of length {} (need n >= 2)", y.len())));
        }
        let n = y.len();
        let r = radius(&y[..n - 1]);
        if r > 1.0 {
            return Err(Error::Domain(format!("|y'| = {r} > 1")));
        }
        let yn = y[n - 1];
        if yn.abs() > self.epsilon * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "|y_n| = {} exceeds epsilon = {}",
                yn.abs(),
                self.epsilon
            )));
        }
        Ok(r)
    }

    /// Maps a point of the neck to the cylinder `|y'| < 1, |y_n| < ε`.
    pub fn flatten(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r = self.check_physical(x)?;
        let n = x.len();
        let mut y = x.to_vec();
        y[n - 1] = self.flat_height(r, x[n - 1]);
        Ok(y)
    }

    pub fn unflatten(&self, y: &[f64]) -> Result<Vec<f64>> {
        let r = self.check_flat(y)?;
        let n = y.len();
        let mut x = y.to_vec();
        x[n - 1] = self.physical_height(r, y[n - 1]);
        Ok(x)
    }

    /// The Jacobian matrix `D_x y` of the flattening map at a physical point.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let r = self.check_physical(x)?;
        let n = x.len();
        let yn = self.flat_height(r, x[n - 1]);
        let radial = self.flat_height_dr(r, yn);
        let mut jac = DMatrix::<f64>::identity(n, n);
        for i in 0..n - 1 {
            jac[(n - 1, i)] = if r > 0.0 { radial * x[i] / r } else { 0.0 };
        }
        jac[(n - 1, n - 1)] = self.flat_height_dxn(r);
        Ok(jac)
    }

    pub fn jacobian_det(&self, x: &[f64]) -> Result<f64> {
        Ok(self.jacobian(x)?.determinant())
    }

    /// Coefficient matrix `2ε (D_x y)(D_x y)ᵀ / det(D_x y)` at a cylinder
    /// point, assembled from the Jacobian of the flattening map.
    pub fn coefficients(&self, y: &[f64]) -> Result<CoefficientMatrix> {
        let x = self.unflatten(y)?;
        let jac = self.jacobian(&x)?;
        let det = jac.determinant();
        let matrix = &jac * jac.transpose() * (2.0 * self.epsilon / det);
        Ok(CoefficientMatrix { matrix })
    }

    /// Closed-form coefficients of the mode equation in the `(ρ, y_n)` plane.
    #[inline]
    pub fn radial_coefficients(&self, rho: f64, yn: f64) -> RadialCoefficients {
        let eps = self.epsilon;
        let g = self.gap_at(rho);
        let alpha = -2.0 * eps * self.profile.dh2(rho) - (yn + eps) * self.profile.ddifference(rho);
        let beta = (4.0 * eps * eps + alpha * alpha) / g;
        RadialCoefficients { g, alpha, beta }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn neck(eps: f64, r0: f64) -> Neck {
        Neck::new(Profile::new(1.0, r0, 0.5, 0.0), eps)
    }

    #[test]
    fn gap_examples() {
        let nk = neck(0.01, 0.25);
        assert_eq!(nk.gap(0.2).unwrap(), 0.01);
        assert!((nk.gap(0.35).unwrap() - 0.02).abs() < 1e-15);
        let convex = neck(0.01, 0.0);
        assert!((convex.gap(0.1).unwrap() - 0.02).abs() < 1e-15);
        assert!(matches!(nk.gap(1.5), Err(Error::Domain(_))));
        assert!(matches!(nk.gap(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn flatten_examples() {
        let nk = neck(0.01, 0.25);
        let r = 0.35;
        let mid = 0.5 * (nk.top(r) + nk.bottom(r));
        let y = nk.flatten(&[r, 0.0, mid]).unwrap();
        assert!(y[2].abs() < 1e-15);
        let y = nk.flatten(&[r, 0.0, nk.top(r)]).unwrap();
        assert!((y[2] - 0.01).abs() < 1e-15);
        let y = nk.flatten(&[r, 0.0, -0.005 + nk.profile.h2(r)]).unwrap();
        assert!((y[2] + 0.01).abs() < 1e-15);
        assert!(nk.flatten(&[r, 0.0, nk.top(r) + 1e-3]).is_err());
        assert!(nk.flatten(&[1.2, 0.0, 0.0]).is_err());
    }

    #[test]
    fn flat_zone_is_diagonal() {
        let nk = neck(0.01, 0.25);
        let a = nk.coefficients(&[0.2, 0.0, 0.003]).unwrap();
        assert_eq!(a.vertical(), 4.0 * 0.01);
        assert_eq!(a.lateral(0), 0.01);
        assert_eq!(a.lateral(1), 0.01);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(a.entry(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn mixed_entry_example() {
        let nk = neck(0.01, 0.25);
        let a = nk.coefficients(&[0.35, 0.0, 0.0]).unwrap();
        assert!((a.mixed(0) + 0.002).abs() < 1e-15);
        assert!(a.mixed(1).abs() < 1e-18);
        let rc = nk.radial_coefficients(0.35, 0.0);
        assert!((rc.alpha + 0.002).abs() < 1e-15);
        assert!((rc.beta - a.vertical()).abs() < 1e-15);
        assert!((rc.g - a.lateral(0)).abs() < 1e-15);
    }

    #[test]
    fn default_profile_has_no_correction() {
        let p = Profile::new(1.0, 0.25, 0.5, 0.0);
        for r in [0.0, 0.1, 0.25, 0.3, 0.7, 1.0] {
            assert_eq!(p.correction(r), 0.0);
        }
        let q = Profile::new(1.0, 0.25, 0.5, 0.3);
        assert!(q.correction(0.75) > 0.0);
        assert_eq!(q.correction(0.2), 0.0);
    }

    #[test]
    fn config_validation() {
        let cfg = ProblemConfig::default();
        cfg.validate().unwrap();
        let bad = ProblemConfig { epsilon: 0.3, ..cfg };
        let msg = bad.validate().unwrap_err().to_string();
        assert!(msg.contains("epsilon must be < 1/4"), "{msg}");
        assert!(ProblemConfig { r0: 0.5, ..cfg }.validate().is_err());
        assert!(ProblemConfig { gamma: 1.0, ..cfg }.validate().is_err());
        assert!(ProblemConfig { mode_i: 3, ..cfg }.validate().is_err());
        assert!(ProblemConfig { n: 2, mode_k: 2, ..cfg }.validate().is_err());
        let control = ProblemConfig { r0: 0.0, n: 2, ..cfg };
        control.validate().unwrap();
        assert!(control.is_control_case());
    }
}
