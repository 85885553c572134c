//! Scenario files, run artifacts and the after-the-fact report.

mod artifacts;
mod convergence;
pub mod formats;
mod scenario;
pub mod svg;

pub use artifacts::{
    emit_artifacts, load_manifest, monotonicity_violation, rate_mismatch, recorded_rows, report,
    resolved_window, sha256_hex, verify_manifest, Assertion, CheckTolerances, FileEntry, Report,
    RunManifest, DIAGNOSTICS, HISTORY, MANIFEST, SCENARIO,
};
pub use convergence::{
    convergence, manufactured_errors, observed_orders, refinement_deviation, ConvergenceReport,
    Level,
};
pub use scenario::{Discretization, KernelSettings, OutputSettings, Scenario};
