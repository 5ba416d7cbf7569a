//! Experiment documents.
//!
//! ```toml
//! epsilons = [1e-2, 1e-3, 1e-4]   # sweep only
//! output_dir = "runs/flat"        # optional
//! seed = 7                        # optional probe jitter
//! timing = false
//!
//! [problem]
//! n = 3
//! epsilon = 1e-2                  # used by solve and ode
//! r0 = 0.25
//! mode_k = 1
//!
//! [grid]
//! vertical_intervals = 32
//! [grid.radial]
//! max_spacing = 0.02
//! ratio = 1.1
//!
//! [boundary]                      # defaults to the mode's coordinate data
//! kind = "polynomial"
//! terms = [[1.0, 2.0, 0.0]]
//!
//! [oracles]
//! three_d = false
//! manufactured = false
//! cross_check = false
//! ```

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use necklab::blowup_lab::{check_epsilons, LabConfig};
use necklab::geometry::ProblemConfig;
use necklab::neck_solver::{BoundaryData, Grid2D, GridParams, LateralData};
use serde::{Deserialize, Serialize};

/// Optional checks run next to the main computation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Oracles {
    /// Embedded 3D solve checking single-mode preservation (`n = 3`, `k = 1`).
    pub three_d: bool,
    /// Manufactured-solution convergence of the mode and radial solvers.
    pub manufactured: bool,
    /// Reduction-of-order recovery of `V'` against the solved field.
    pub cross_check: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilons: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub timing: bool,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub grid: GridParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<LateralData>,
    #[serde(default)]
    pub oracles: Oracles,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Lateral data, falling back to the coordinate function of degree 0
    /// or 1 and to `r^k` above.
    pub fn lateral(&self) -> LateralData {
        match (&self.boundary, self.problem.mode_k) {
            (Some(b), _) => b.clone(),
            (None, 0) => LateralData::Xn,
            (None, 1) => LateralData::X1,
            (None, k) => LateralData::Polynomial {
                terms: vec![[1.0, k as f64, 0.0]],
            },
        }
    }

    pub fn lab(&self) -> LabConfig {
        LabConfig {
            problem: self.problem,
            grid: self.grid,
            lateral: self.lateral(),
            seed: self.seed,
            timing: self.timing,
        }
    }

    fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        BoundaryData::for_mode(&self.problem, self.lateral())?;
        if let LateralData::Polynomial { terms } = self.lateral() {
            for t in &terms {
                anyhow::ensure!(
                    t.iter().all(|v| v.is_finite()) && t[1] >= 0.0 && t[2] >= 0.0 && t[1].fract() == 0.0 && t[2].fract() == 0.0,
                    "polynomial term {t:?} needs finite coefficient and non-negative integer powers"
                );
            }
        }
        anyhow::ensure!(
            !self.oracles.cross_check || self.problem.r0 > 0.0,
            "the cross_check oracle is anchored at r0/2 and needs r0 > 0"
        );
        if !self.epsilons.is_empty() {
            check_epsilons(&self.epsilons)?;
        }
        for &eps in self.epsilons.iter().chain([&self.problem.epsilon]) {
            Grid2D::from_config(&self.problem.with_epsilon(eps), &self.grid)?;
        }
        Ok(())
    }
}
