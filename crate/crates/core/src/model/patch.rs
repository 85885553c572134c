use serde::{Deserialize, Serialize};

use super::symmetry::{SymmetryConfig, DEFAULT_COST_CAP};
use crate::error::{Error, Result};

/// A primitive patch component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Rectangle { r0: f64, r1: f64, s0: f64, s1: f64 },
    Disk { rc: f64, sc: f64, radius: f64 },
}

impl Shape {
    /// Open-set membership.
    pub fn contains(&self, r: f64, s: f64) -> bool {
        match *self {
            Shape::Rectangle { r0, r1, s0, s1 } => r > r0 && r < r1 && s > s0 && s < s1,
            Shape::Disk { rc, sc, radius } => (r - rc).powi(2) + (s - sc).powi(2) < radius * radius,
        }
    }

    /// Distance of the closure to the union of the two axes.
    pub fn axis_clearance(&self) -> f64 {
        match *self {
            Shape::Rectangle { r0, s0, .. } => r0.min(s0),
            Shape::Disk { rc, sc, radius } => rc.min(sc) - radius,
        }
    }

    /// `(r_min, r_max, s_min, s_max)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        match *self {
            Shape::Rectangle { r0, r1, s0, s1 } => (r0, r1, s0, s1),
            Shape::Disk { rc, sc, radius } => (rc - radius, rc + radius, sc - radius, sc + radius),
        }
    }

    fn check(&self) -> Result<()> {
        let ok = match *self {
            Shape::Rectangle { r0, r1, s0, s1 } => {
                [r0, r1, s0, s1].iter().all(|v| v.is_finite()) && r1 > r0 && s1 > s0
            }
            Shape::Disk { rc, sc, radius } => {
                [rc, sc, radius].iter().all(|v| v.is_finite()) && radius > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidPatch(format!("degenerate shape {self:?}")))
        }
    }

    /// Whether the closures intersect.
    fn meets(&self, other: &Shape) -> bool {
        use Shape::*;
        match (*self, *other) {
            (
                Rectangle { r0, r1, s0, s1 },
                Rectangle {
                    r0: a0,
                    r1: a1,
                    s0: b0,
                    s1: b1,
                },
            ) => r0 <= a1 && a0 <= r1 && s0 <= b1 && b0 <= s1,
            (
                Disk { rc, sc, radius },
                Disk {
                    rc: c2,
                    sc: s2,
                    radius: q,
                },
            ) => (rc - c2).hypot(sc - s2) <= radius + q,
            (Rectangle { r0, r1, s0, s1 }, Disk { rc, sc, radius })
            | (Disk { rc, sc, radius }, Rectangle { r0, r1, s0, s1 }) => {
                let dr = rc.clamp(r0, r1) - rc;
                let ds = sc.clamp(s0, s1) - sc;
                dr.hypot(ds) <= radius
            }
        }
    }
}

/// Patch initial data `w0 = amplitude * r^n s^m` on a union of shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchSpec {
    pub shapes: Vec<Shape>,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_clearance")]
    pub clearance: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_clearance() -> f64 {
    0.1
}

impl PatchSpec {
    pub fn rectangle(r0: f64, r1: f64, s0: f64, s1: f64, amplitude: f64) -> Self {
        PatchSpec {
            shapes: vec![Shape::Rectangle { r0, r1, s0, s1 }],
            amplitude,
            clearance: default_clearance(),
        }
    }

    pub fn contains(&self, r: f64, s: f64) -> bool {
        self.shapes.iter().any(|sh| sh.contains(r, s))
    }

    pub fn axis_clearance(&self) -> f64 {
        self.shapes
            .iter()
            .map(Shape::axis_clearance)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.shapes.iter().map(Shape::bounds).fold(
            (
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
            ),
            |a, b| (a.0.min(b.0), a.1.max(b.1), a.2.min(b.2), a.3.max(b.3)),
        )
    }
}

/// A symmetry class and patch that passed [`validate_config`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    pub cfg: SymmetryConfig,
    pub patch: PatchSpec,
    pub clearance: f64,
    pub cost_cap: u32,
}

/// Checks multiplicities, cost cap, shape sanity, disjointness and the
/// axis clearance. `cost_cap = None` uses [`DEFAULT_COST_CAP`].
pub fn validate_config(
    cfg: SymmetryConfig,
    patch: &PatchSpec,
    cost_cap: Option<u32>,
) -> Result<ValidatedConfig> {
    let cap = cost_cap.unwrap_or(DEFAULT_COST_CAP);
    cfg.check_cost(cap)?;
    if patch.shapes.is_empty() {
        return Err(Error::InvalidPatch("no shapes".into()));
    }
    if !patch.amplitude.is_finite() || patch.amplitude == 0.0 {
        return Err(Error::InvalidPatch(format!(
            "amplitude must be finite and nonzero (got {})",
            patch.amplitude
        )));
    }
    if !(patch.clearance > 0.0) {
        return Err(Error::NonPositiveClearance {
            measured: patch.axis_clearance(),
            required: patch.clearance,
        });
    }
    for sh in &patch.shapes {
        sh.check()?;
    }
    for (i, a) in patch.shapes.iter().enumerate() {
        for b in &patch.shapes[i + 1..] {
            if a.meets(b) {
                return Err(Error::InvalidPatch(format!(
                    "shapes {a:?} and {b:?} overlap"
                )));
            }
        }
    }
    let measured = patch.axis_clearance();
    if measured <= 0.0 || measured < patch.clearance {
        return Err(Error::NonPositiveClearance {
            measured,
            required: patch.clearance,
        });
    }
    Ok(ValidatedConfig {
        cfg,
        patch: patch.clone(),
        clearance: measured,
        cost_cap: cap,
    })
}
