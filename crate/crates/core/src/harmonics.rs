//! Spherical harmonics on `S^{n-2}`: eigenvalues, mode counts, and for
//! `n = 3` (the circle) basis evaluation and quadrature projection.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Degree `k` and index `i` (one based) of a spherical harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub k: usize,
    pub i: usize,
}

impl ModeIndex {
    pub fn new(k: usize, i: usize) -> Self {
        Self { k, i }
    }
}

/// Eigenvalue `k(k + n - 3)` of `-Δ` on `S^{n-2}`.
pub fn eigenvalue(k: usize, n: usize) -> f64 {
    let k = k as f64;
    k * (k + n as f64 - 3.0)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, j| acc * (n - j) / (j + 1))
}

/// Number `N(k)` of linearly independent degree-`k` harmonics on `S^{n-2}`.
pub fn mode_count(k: usize, n: usize) -> usize {
    if n < 2 {
        return 0;
    }
    let d = n - 2;
    let full = binomial(k + d, d);
    let lower = if k >= 2 { binomial(k - 2 + d, d) } else { 0 };
    full - lower
}

/// Surface measure `|S^{n-2}|`.
pub fn sphere_measure(n: usize) -> f64 {
    // |S^d| = 2π/(d-1) |S^{d-2}|
    let d = n.saturating_sub(2);
    let mut m = if d.is_multiple_of(2) { 2.0 } else { 2.0 * PI };
    let mut j = if d.is_multiple_of(2) { 2 } else { 3 };
    while j <= d {
        m *= 2.0 * PI / (j as f64 - 1.0);
        j += 2;
    }
    m
}

/// Quadrature nodes, weights and sampled values on the circle `S^1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSamples {
    pub angles: Vec<f64>,
    pub weights: Vec<f64>,
    pub values: Vec<f64>,
}

impl SphereSamples {
    /// `count` equispaced angles with equal weights `2π / count`; values zero.
    pub fn uniform(count: usize) -> Self {
        let h = 2.0 * PI / count as f64;
        Self {
            angles: (0..count).map(|j| j as f64 * h).collect(),
            weights: vec![h; count],
            values: vec![0.0; count],
        }
    }

    pub fn with_values<F: Fn(f64) -> f64>(mut self, f: F) -> Self {
        self.values = self.angles.iter().map(|&t| f(t)).collect();
        self
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// `Y_{k,i}(θ)` on the circle, L²-normalised:
/// `1/√(2π)`, then `cos(kθ)/√π` (`i = 1`) and `sin(kθ)/√π` (`i = 2`).
pub fn circle_harmonic(mode: ModeIndex, theta: f64) -> f64 {
    if mode.k == 0 {
        return 1.0 / (2.0 * PI).sqrt();
    }
    let kt = mode.k as f64 * theta;
    if mode.i == 1 {
        kt.cos() / PI.sqrt()
    } else {
        kt.sin() / PI.sqrt()
    }
}

/// Angular derivative `∂_θ Y_{k,i}` on the circle.
pub fn circle_harmonic_dtheta(mode: ModeIndex, theta: f64) -> f64 {
    if mode.k == 0 {
        return 0.0;
    }
    let k = mode.k as f64;
    let kt = k * theta;
    if mode.i == 1 {
        -k * kt.sin() / PI.sqrt()
    } else {
        k * kt.cos() / PI.sqrt()
    }
}

fn check_mode(mode: ModeIndex, n: usize) -> Result<()> {
    if n != 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let count = mode_count(mode.k, n);
    if mode.i < 1 || mode.i > count {
        return Err(Error::Config(format!(
            "mode ({}, {}) has index outside 1..={count}",
            mode.k, mode.i
        )));
    }
    Ok(())
}

/// Evaluates `Y_{k,i}` at the given angles. Only `n = 3` is supported.
pub fn basis_eval(mode: ModeIndex, n: usize, angles: &[f64]) -> Result<SphereSamples> {
    check_mode(mode, n)?;
    let count = angles.len().max(1);
    Ok(SphereSamples {
        angles: angles.to_vec(),
        weights: vec![2.0 * PI / count as f64; angles.len()],
        values: angles.iter().map(|&t| circle_harmonic(mode, t)).collect(),
    })
}

/// Quadrature approximation of `∫ f Y_{k,i} dξ` over the circle.
pub fn project(field: &SphereSamples, mode: ModeIndex) -> Result<f64> {
    check_mode(mode, 3)?;
    let needed = 4 * mode.k + 8;
    if field.len() < needed {
        return Err(Error::Resolution(format!(
            "{} angular samples cannot resolve degree {} (need {needed})",
            field.len(),
            mode.k
        )));
    }
    Ok(field
        .angles
        .iter()
        .zip(&field.weights)
        .zip(&field.values)
        .map(|((&t, &w), &v)| w * v * circle_harmonic(mode, t))
        .sum())
}

/// All circle modes up to degree `kmax`, in the order `(0,1), (1,1), (1,2), …`.
pub fn circle_modes(kmax: usize) -> Vec<ModeIndex> {
    let mut modes = vec![ModeIndex::new(0, 1)];
    for k in 1..=kmax {
        modes.push(ModeIndex::new(k, 1));
        modes.push(ModeIndex::new(k, 2));
    }
    modes
}

/// `Σ c_m Y_m(θ)` at the given angles.
pub fn synthesize(coefficients: &[(ModeIndex, f64)], angles: &[f64]) -> SphereSamples {
    let mut samples = SphereSamples::uniform(angles.len());
    samples.angles = angles.to_vec();
    samples.values = angles
        .iter()
        .map(|&t| coefficients.iter().map(|&(m, c)| c * circle_harmonic(m, t)).sum())
        .collect();
    samples
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn project_inverts_synthesize(coeffs in proptest::collection::vec(-5.0f64..5.0, 9)) {
            let modes = circle_modes(4);
            let pairs: Vec<_> = modes.iter().copied().zip(coeffs.iter().copied()).collect();
            let grid = SphereSamples::uniform(64);
            let field = synthesize(&pairs, &grid.angles);
            for &(m, c) in &pairs {
                prop_assert!((project(&field, m).unwrap() - c).abs() < 1e-10);
            }
        }
    }
}
