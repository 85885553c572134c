//! Symmetry class, quadrant geometry, patch specification and its particle
//! and marker discretizations.

mod markers;
mod particles;
mod patch;
mod symmetry;

pub use markers::{weighted_area, weighted_area_winding, BoundaryMarkers, Polyline};
pub use particles::{discretize, ParticleSet};
pub use patch::{validate_config, PatchSpec, Shape, ValidatedConfig};
pub use symmetry::{QuadrantPoint, SymmetryConfig, DEFAULT_COST_CAP};
