//! Numerical laboratory for swirl-free bi-rotational Euler flows in the
//! quadrant `{(r, s) : r, s >= 0}`.
//!
//! Patch vorticity is carried by Lagrangian particles; velocity comes either
//! from a direct sum over an angularly reduced Green's kernel or from a
//! finite-difference solve of the stream-function problem on a truncated
//! grid. The [`diagnostics`] module evaluates impulses, support extents and
//! the boundary lower bound along a run.

// NaN must fail the range checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod io;
pub mod kernel;
pub mod model;
pub mod parallel;
pub mod quadrature;
pub mod transport;
pub mod velocity;

pub use error::{Error, Result};
pub use model::{
    BoundaryMarkers, ParticleSet, PatchSpec, QuadrantPoint, Shape, SymmetryConfig, ValidatedConfig,
};
