//! Finite-difference backend for `L psi = w` on the truncated quadrant
//! `[0, R_max] x [0, S_max]`, with `psi = 0` on both axes and Dirichlet data
//! on the far edges.

mod boundary;
mod deposit;
mod grid;
mod operator;
mod solver;

pub use boundary::FarBoundary;
pub use deposit::deposit;
pub use grid::{Grid, GridField};
pub use operator::{apply_l, residual_norm};
pub use solver::{EllipticSolver, SolveReport, SolverKind};

/// A smooth stream function with zero axis values, for convergence studies.
pub mod manufactured {
    /// `psi* = r s exp(-r^2 - s^2)`.
    pub fn manufactured(r: f64, s: f64) -> f64 {
        r * s * (-r * r - s * s).exp()
    }

    /// `L psi*`, differentiated symbolically.
    pub fn manufactured_l(n: u32, m: u32, r: f64, s: f64) -> f64 {
        manufactured(r, s) * 2.0 * (2.0 * r * r + 2.0 * s * s - (n + m) as f64 - 6.0)
    }

    /// `(u^r, u^s)` of `psi*`.
    pub fn manufactured_u(n: u32, m: u32, r: f64, s: f64) -> (f64, f64) {
        let e = (-r * r - s * s).exp();
        (
            r * e * (2.0 * s * s - m as f64 - 1.0),
            s * e * (n as f64 + 1.0 - 2.0 * r * r),
        )
    }
}
