//! The angularly reduced Green's kernel of `L`, its derivatives, the induced
//! velocity kernels and direct particle sums.
//!
//! The stream function of a source `w` is
//! `psi(P) = iint K_psi(P, Q) w(Q) dQ` with
//! `K_psi = sign * c_d * rb^n sb^m * M(d/2 - 1, 0, 0; P, Q)` and
//!
//! ```text
//! M(e, j, k; P, Q) = |S^(n-1)| |S^(m-1)| * int_0^pi int_0^pi
//!     cos^(1+j)(g) sin^(n-1)(g) cos^(1+k)(c) sin^(m-1)(c) / A^e  dg dc,
//! A = r^2 + rb^2 - 2 r rb cos(g) + s^2 + sb^2 - 2 s sb cos(c) + delta^2.
//! ```
//!
//! The `sin` powers are the surface measure of the two spheres swept by the
//! symmetry; they make every `M` a two dimensional integral regardless of
//! `(n, m)`.

mod angular;
mod bridge;
mod sums;

use serde::{Deserialize, Serialize};

pub use angular::KernelEvaluator;
pub use bridge::{cartesian_bridge_at, cartesian_bridge_check, random_bridge_points, BridgeReport};
pub use sums::{eval_psi, eval_psi_many, eval_velocity, velocity_direct};

use crate::error::{Error, Result};

/// Overall sign of the kernel. `Canonical` yields the stream function with
/// `L psi = w`, hence `psi <= 0` for `w >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelSign {
    #[default]
    Canonical,
    Flipped,
}

impl KernelSign {
    pub fn factor(self) -> f64 {
        match self {
            KernelSign::Canonical => -1.0,
            KernelSign::Flipped => 1.0,
        }
    }
}

/// Quadrature and regularization settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelParams {
    /// Gauss-Legendre nodes per angle on an unrefined `[0, pi]`; each graded
    /// panel uses `5/8` as many.
    pub nq: usize,
    /// Blob length added in quadrature to the squared distance.
    pub delta: f64,
    pub sign: KernelSign,
    /// Upper bound on graded panels per angle.
    pub max_panels: usize,
    /// Below this distance from an axis the velocity kernel switches to the
    /// on-axis limit.
    pub axis_threshold: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            nq: 16,
            delta: 0.0,
            sign: KernelSign::Canonical,
            max_panels: 40,
            axis_threshold: 1e-6,
        }
    }
}

impl KernelParams {
    pub fn with_delta(delta: f64) -> Self {
        KernelParams {
            delta,
            ..Default::default()
        }
    }

    /// The blob length `c * h^0.9` tied to particle spacing.
    pub fn blob_length(c_delta: f64, h: f64) -> f64 {
        c_delta * h.powf(0.9)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nq < 4 {
            return Err(Error::Validation {
                rule: "nq >= 4".into(),
                message: format!("nq = {}", self.nq),
            });
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::Validation {
                rule: "delta >= 0".into(),
                message: format!("delta = {}", self.delta),
            });
        }
        if self.max_panels < 2 || !(self.axis_threshold >= 0.0) {
            return Err(Error::Validation {
                rule: "max_panels >= 2, axis_threshold >= 0".into(),
                message: format!("{} / {}", self.max_panels, self.axis_threshold),
            });
        }
        Ok(())
    }
}

/// Surface measure of the unit sphere `S^k` in `R^(k+1)`.
pub fn sphere_area(k: u32) -> f64 {
    use std::f64::consts::PI;
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_area(k - 2),
    }
}

/// Magnitude of the Newtonian constant `1 / ((d - 2) |S^(d-1)|)`.
pub fn newton_constant(d: u32) -> f64 {
    assert!(d >= 3);
    1.0 / ((d as f64 - 2.0) * sphere_area(d - 1))
}

/// Explicit constant of the boundary lower bound
/// `|d_s psi(r, 0)| >= C r iint rb^(n+1) sb^(m+1) w / ((r + rb)^2 + sb^2)^(d/2+1)`.
///
/// Lifting `psi / (r s)` to the Newtonian potential in dimension `d + 4`
/// and bounding the angular denominator by its maximum gives
/// `C = c_(d+4) |S^(n+2)| |S^(m+2)|`.
pub fn boundary_bound_constant(n: u32, m: u32) -> f64 {
    newton_constant(n + m + 6) * sphere_area(n + 2) * sphere_area(m + 2)
}
