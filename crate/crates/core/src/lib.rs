//! Gradient concentration between two partially flat insulating inclusions.
//!
//! The neck between the inclusions is flattened onto a fixed slab
//! ([`geometry`]), the lateral data are split into spherical harmonic
//! modes ([`harmonics`]), and each mode becomes a two-dimensional
//! divergence-form problem solved by finite elements ([`neck_solver`]).
//! The vertically averaged equation is a radial ODE with an explicit
//! integrating factor ([`reduced_ode`]). [`blowup_lab`] sweeps the gap
//! width and measures how the gradient scales.
//!
//! ```
//! use necklab::blowup_lab::{run_single, LabConfig};
//! use necklab::geometry::ProblemConfig;
//!
//! let lab = LabConfig::new(ProblemConfig::default()).unwrap();
//! let report = run_single(&lab).unwrap();
//! assert!(report.record.sup_grad.is_finite());
//! ```

pub mod blowup_lab;
pub mod error;
pub mod geometry;
pub mod harmonics;
pub mod linalg;
pub mod manufactured;
pub mod neck_solver;
pub mod oracle3d;
pub mod radial;
pub mod reduced_ode;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/modes.md")]
    mod modes {}
    #[doc = include_str!("../../../book/src/reduced-ode.md")]
    mod reduced_ode {}
    #[doc = include_str!("../../../book/src/mode-solver.md")]
    mod mode_solver {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
