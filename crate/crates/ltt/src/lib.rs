//! Analytic lineage-through-time (LTT) distributions and expectations for
//! constant-rate birth-death trees conditioned on `n` extant species,
//! validated against a built-in Monte-Carlo simulation oracle.
//!
//! - [`bdmath`]: scalar model functions `P(t)`, `u(t)`, `f(sigma, t)`.
//! - [`quad`]: adaptive Gauss-Kronrod quadrature with error control.
//! - [`analytic`]: conditional densities and expectations for the four
//!   conditioning regimes (origin age, MRCA age, survival, uniform age
//!   prior).
//! - [`sim`]: Gillespie simulation, tree reconstruction, rejection
//!   conditioning, Monte-Carlo LTT curves.
//! - [`cli`]: command-line front end and CSV/JSON/SVG emitters.

// `!(x > 0.0)` guards deliberately reject NaN together with non-positive
// values; frozen oracle constants keep more digits than f64 resolves.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analytic;
pub mod bdmath;
pub mod cli;
pub mod error;
pub mod quad;
pub mod sim;

pub use analytic::{Condition, CurvePoint, CurveSource, LineagePmf, LttCurve};
pub use bdmath::BirthDeathParams;
pub use error::{Error, Result};
pub use quad::{QuadResult, QuadratureSpec};
