use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::elliptic::{EllipticSolver, Grid, SolverKind};
use crate::error::{Error, Result};
use crate::kernel::{KernelParams, KernelSign};
use crate::model::{validate_config, PatchSpec, SymmetryConfig, ValidatedConfig};
use crate::transport::TimeControls;
use crate::velocity::{GridBackend, Interpolation};

/// Particle spacing, grid box and far-edge settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    /// Particle lattice spacing.
    pub h: f64,
    #[serde(default = "d_extent")]
    pub r_max: f64,
    #[serde(default = "d_extent")]
    pub s_max: f64,
    /// Interior grid nodes along `r`.
    #[serde(default = "d_nodes")]
    pub nr: usize,
    #[serde(default = "d_nodes")]
    pub ns: usize,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default = "d_solver_tol")]
    pub solver_tol: f64,
    /// Aggregation bin for far-edge kernel data; `0` disables aggregation.
    #[serde(default = "d_bin")]
    pub boundary_bin: f64,
    /// Boundary markers are spaced `h / marker_refinement`.
    #[serde(default = "d_marker_refinement")]
    pub marker_refinement: u32,
    /// Velocity evaluation between grid nodes.
    #[serde(default)]
    pub interpolation: Interpolation,
}

fn d_extent() -> f64 {
    10.0
}
fn d_nodes() -> usize {
    319
}
fn d_marker_refinement() -> u32 {
    4
}
fn d_solver_tol() -> f64 {
    1e-10
}
fn d_bin() -> f64 {
    0.125
}

/// Kernel settings; the blob length defaults to `c_delta * h^0.9`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSettings {
    #[serde(default = "d_nq")]
    pub nq: usize,
    #[serde(default = "d_c_delta")]
    pub c_delta: f64,
    /// Explicit blob length, overriding `c_delta`.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub sign: KernelSign,
    #[serde(default = "d_max_panels")]
    pub max_panels: usize,
    /// Axis threshold relative to the domain size.
    #[serde(default = "d_axis_rel")]
    pub axis_threshold_rel: f64,
}

fn d_nq() -> usize {
    16
}
fn d_c_delta() -> f64 {
    1.0
}
fn d_max_panels() -> usize {
    40
}
fn d_axis_rel() -> f64 {
    1e-6
}

impl Default for KernelSettings {
    fn default() -> Self {
        KernelSettings {
            nq: d_nq(),
            c_delta: d_c_delta(),
            delta: None,
            sign: KernelSign::Canonical,
            max_panels: d_max_panels(),
            axis_threshold_rel: d_axis_rel(),
        }
    }
}

/// Where and how often to write.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    #[serde(default = "d_dir")]
    pub dir: PathBuf,
    /// Record every `cadence` steps.
    #[serde(default = "d_cadence")]
    pub cadence: usize,
    /// Times for boundary and grid snapshots; empty means five evenly spaced.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// Radii for the boundary lower bound; empty means eight up to `R_max / 2`.
    #[serde(default)]
    pub bound_probes: Vec<f64>,
    /// Picks the particles sampled by the direct-backend check.
    #[serde(default)]
    pub seed: u64,
}

fn d_dir() -> PathBuf {
    PathBuf::from("run")
}
fn d_cadence() -> usize {
    1
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings {
            dir: d_dir(),
            cadence: d_cadence(),
            snapshot_times: Vec::new(),
            bound_probes: Vec::new(),
            seed: 0,
        }
    }
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub symmetry: SymmetryConfig,
    pub patch: PatchSpec,
    pub discretization: Discretization,
    #[serde(default)]
    pub kernel: KernelSettings,
    pub time: TimeControls,
    #[serde(default)]
    pub output: OutputSettings,
    /// Overrides the default `n + m` cap.
    #[serde(default)]
    pub cost_cap: Option<u32>,
}

fn validation(rule: &str, message: String) -> Error {
    Error::Validation {
        rule: rule.to_string(),
        message,
    }
}

impl Scenario {
    /// The standard patch: `n = m = 1`, `[1,2]^2`, `h = 1/32`, `T = 5`.
    pub fn standard() -> Self {
        Scenario {
            symmetry: SymmetryConfig::new(1, 1).expect("valid"),
            patch: PatchSpec::rectangle(1.0, 2.0, 1.0, 2.0, 1.0),
            discretization: Discretization {
                h: 1.0 / 32.0,
                r_max: d_extent(),
                s_max: d_extent(),
                nr: d_nodes(),
                ns: d_nodes(),
                solver: SolverKind::FastDiagonalization,
                solver_tol: d_solver_tol(),
                boundary_bin: d_bin(),
                marker_refinement: d_marker_refinement(),
                interpolation: Interpolation::Stream,
            },
            kernel: KernelSettings::default(),
            time: TimeControls {
                t_end: 5.0,
                redistribute: Some(3.0),
                ..TimeControls::default()
            },
            output: OutputSettings::default(),
            cost_cap: None,
        }
    }

    /// Parses JSON text and validates it.
    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            Error::Parse {
                field: field_of(&msg),
                message: format!("{msg} (line {}, column {})", e.line(), e.column()),
            }
        })?;
        sc.validate()?;
        Ok(sc)
    }

    /// Reads and validates a scenario file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Canonical JSON with every default filled in.
    pub fn echo(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Core validation only, without the grid margin rule.
    pub fn validate_core(&self) -> Result<ValidatedConfig> {
        let v = validate_config(self.symmetry, &self.patch, self.cost_cap)?;
        let d = &self.discretization;
        if !(d.h > 0.0 && d.h.is_finite()) {
            return Err(validation("h > 0", format!("h = {}", d.h)));
        }
        Grid::new(d.r_max, d.s_max, d.nr, d.ns).map_err(|e| validation("grid", e.to_string()))?;
        if d.marker_refinement == 0 {
            return Err(validation(
                "marker_refinement >= 1",
                "marker_refinement = 0".into(),
            ));
        }
        if !(d.solver_tol > 0.0) || !(d.boundary_bin >= 0.0) {
            return Err(validation(
                "solver_tol > 0, boundary_bin >= 0",
                format!("{} / {}", d.solver_tol, d.boundary_bin),
            ));
        }
        self.kernel_params().validate()?;
        if !(self.kernel.c_delta >= 0.0) {
            return Err(validation(
                "c_delta >= 0",
                format!("{}", self.kernel.c_delta),
            ));
        }
        self.time.validate()?;
        if self.output.cadence == 0 {
            return Err(validation("cadence >= 1", "cadence = 0".into()));
        }
        Ok(v)
    }

    /// Full validation, including the rule that the grid box exceeds the
    /// patch by at least twice the initial support size `L(0)` on both sides.
    pub fn validate(&self) -> Result<ValidatedConfig> {
        let v = self.validate_core()?;
        let (_, r1, _, s1) = self.patch.bounds();
        let l0 = r1 + s1;
        let d = &self.discretization;
        if d.r_max - r1 < 2.0 * l0 || d.s_max - s1 < 2.0 * l0 {
            return Err(validation(
                "margin",
                format!(
                    "grid box {} x {} must exceed the patch extent ({r1}, {s1}) by 2 L(0) = {}",
                    d.r_max,
                    d.s_max,
                    2.0 * l0
                ),
            ));
        }
        Ok(v)
    }

    pub fn marker_spacing(&self) -> f64 {
        self.discretization.h / self.discretization.marker_refinement as f64
    }

    pub fn grid(&self) -> Result<Grid> {
        let d = &self.discretization;
        Grid::new(d.r_max, d.s_max, d.nr, d.ns)
    }

    pub fn kernel_params(&self) -> KernelParams {
        let k = &self.kernel;
        let d = &self.discretization;
        KernelParams {
            nq: k.nq,
            delta: k
                .delta
                .unwrap_or_else(|| KernelParams::blob_length(k.c_delta, d.h)),
            sign: k.sign,
            max_panels: k.max_panels,
            axis_threshold: k.axis_threshold_rel * d.r_max.max(d.s_max),
        }
    }

    pub fn backend(&self) -> Result<GridBackend> {
        let d = &self.discretization;
        let grid = self.grid()?;
        Ok(GridBackend {
            cfg: self.symmetry,
            solver: EllipticSolver::new(grid, self.symmetry, d.solver, d.solver_tol)?,
            boundary_params: self.kernel_params(),
            boundary_bin: d.boundary_bin,
        })
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        if self.output.snapshot_times.is_empty() {
            (0..5).map(|k| self.time.t_end * k as f64 / 4.0).collect()
        } else {
            self.output.snapshot_times.clone()
        }
    }

    pub fn bound_probes(&self) -> Vec<f64> {
        if self.output.bound_probes.is_empty() {
            let top = 0.5 * self.discretization.r_max;
            (1..=8).map(|k| top * k as f64 / 8.0).collect()
        } else {
            self.output.bound_probes.clone()
        }
    }
}

/// Best-effort field name from a serde error message.
fn field_of(msg: &str) -> String {
    for key in ["missing field `", "unknown field `", "field `"] {
        if let Some(pos) = msg.find(key) {
            let rest = &msg[pos + key.len()..];
            if let Some(end) = rest.find('`') {
                return rest[..end].to_string();
            }
        }
    }
    "<document>".to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "symmetry": {"n": 1, "m": 1},
        "patch": {"shapes": [{"kind": "rectangle", "r0": 1, "r1": 2, "s0": 1, "s1": 2}]},
        "discretization": {"h": 0.03125},
        "time": {"t_end": 5, "redistribute": 3}
    }"#;

    #[test]
    fn minimal_file_gets_defaults() {
        let sc = Scenario::from_json(MINIMAL).unwrap();
        assert_eq!(sc, Scenario::standard());
        let again = Scenario::from_json(&sc.echo()).unwrap();
        assert_eq!(again, sc);
    }

    #[test]
    fn missing_n_is_named() {
        let text = MINIMAL.replace(r#""n": 1, "#, "");
        match Scenario::from_json(&text) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "n"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn small_grid_violates_margin() {
        let text = MINIMAL.replace(r#""h": 0.03125"#, r#""h": 0.03125, "r_max": 5.0"#);
        match Scenario::from_json(&text) {
            Err(Error::Validation { rule, .. }) => assert_eq!(rule, "margin"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kernel_params_from_settings() {
        let sc = Scenario::standard();
        let k = sc.kernel_params();
        assert!((k.delta - (1.0f64 / 32.0).powf(0.9)).abs() < 1e-15);
        assert!((k.axis_threshold - 1e-5).abs() < 1e-18);
        assert_eq!(sc.bound_probes().len(), 8);
        assert_eq!(sc.snapshot_times(), vec![0.0, 1.25, 2.5, 3.75, 5.0]);
    }
}
