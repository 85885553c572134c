//! Time stepping of particles and boundary markers by the flow `(u^r, u^s)`.
//!
//! Positions move with classical RK4; `nu` and `q` are never touched. A
//! position reaching an axis is an error, never clamped.

mod provider;
mod run;

pub use provider::{AnalyticProvider, GridProvider, VelocityProvider};
pub use run::{
    derivative, fill_rate_fd, max_deviation, reverse_check, DirectCheck, FieldSnapshot, Frame,
    NormsRecord, ReverseReport, RunOutcome, Simulation,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BoundaryMarkers, ParticleSet};
use crate::parallel;

/// How often the velocity is recomputed inside a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefreshPolicy {
    /// New field at every RK4 stage (fourth order).
    #[default]
    PerStage,
    /// Field of the step start reused by all stages (first order).
    FrozenPerStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeControls {
    #[serde(default = "d_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub dt_max: Option<f64>,
    pub t_end: f64,
    #[serde(default)]
    pub refresh: RefreshPolicy,
    /// Compare against the direct kernel sum every `k` steps; `0` disables.
    #[serde(default = "d_direct_every")]
    pub direct_check_every: usize,
    /// Particles sampled by each direct comparison.
    #[serde(default = "d_direct_samples")]
    pub direct_check_samples: usize,
    /// Split marker segments longer than this multiple of the initial spacing.
    #[serde(default)]
    pub redistribute: Option<f64>,
    /// Halt when the blowup integral exceeds this while `L` outgrows the grid.
    #[serde(default = "d_blowup")]
    pub blowup_bound: f64,
}

fn d_cfl() -> f64 {
    0.5
}
fn d_direct_every() -> usize {
    10
}
fn d_direct_samples() -> usize {
    32
}
fn d_blowup() -> f64 {
    1e6
}

impl Default for TimeControls {
    fn default() -> Self {
        TimeControls {
            cfl: d_cfl(),
            dt_max: None,
            t_end: 1.0,
            refresh: RefreshPolicy::PerStage,
            direct_check_every: d_direct_every(),
            direct_check_samples: d_direct_samples(),
            redistribute: None,
            blowup_bound: d_blowup(),
        }
    }
}

impl TimeControls {
    pub fn validate(&self) -> Result<()> {
        let bad = |rule: &str, message: String| {
            Err(Error::Validation {
                rule: rule.into(),
                message,
            })
        };
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad("0 < cfl <= 1", format!("cfl = {}", self.cfl));
        }
        if let Some(dt) = self.dt_max {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("dt_max > 0", format!("dt_max = {dt}"));
            }
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end >= 0", format!("t_end = {}", self.t_end));
        }
        if let Some(f) = self.redistribute {
            if !(f > 1.0) {
                return bad("redistribute > 1", format!("redistribute = {f}"));
            }
        }
        if !(self.blowup_bound > 0.0) {
            return bad(
                "blowup_bound > 0",
                format!("blowup_bound = {}", self.blowup_bound),
            );
        }
        Ok(())
    }
}

/// `min(dt_max, cfl h / max_speed)`.
pub fn choose_dt(max_speed: f64, h: f64, controls: &TimeControls) -> Result<f64> {
    let cap = controls.dt_max.unwrap_or(f64::INFINITY);
    if !max_speed.is_finite() {
        return Err(Error::NonFiniteState("max speed".into()));
    }
    let dt = if max_speed > 0.0 {
        (controls.cfl * h / max_speed).min(cap)
    } else {
        cap
    };
    if dt.is_finite() && dt > 0.0 {
        Ok(dt)
    } else {
        Err(Error::ZeroVelocityTimeout)
    }
}

/// Positions and time of a run. Velocity lives in the provider.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub step: usize,
    pub particles: ParticleSet,
    pub markers: BoundaryMarkers,
}

impl SimState {
    pub fn new(particles: ParticleSet, markers: BoundaryMarkers) -> Self {
        SimState {
            t: 0.0,
            step: 0,
            particles,
            markers,
        }
    }

    /// Particles first, then markers.
    fn positions(&self) -> (Vec<f64>, Vec<f64>) {
        let (mr, ms) = self.markers.flatten();
        let mut r = self.particles.r.clone();
        let mut s = self.particles.s.clone();
        r.extend(mr);
        s.extend(ms);
        (r, s)
    }
}

fn sample_all(
    provider: &dyn VelocityProvider,
    r: &[f64],
    s: &[f64],
    np: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut out: Vec<Result<(f64, f64)>> = (0..r.len()).map(|_| Ok((0.0, 0.0))).collect();
    parallel::fill_indexed(&mut out, |i| provider.sample(r[i], s[i]));
    let mut ur = Vec::with_capacity(r.len());
    let mut us = Vec::with_capacity(r.len());
    for (i, v) in out.into_iter().enumerate() {
        match v {
            Ok((a, b)) => {
                ur.push(a);
                us.push(b);
            }
            Err(Error::OutsideGrid { r, s }) if i < np => {
                return Err(Error::ParticleOutsideGrid { index: i, r, s })
            }
            Err(e) => return Err(e),
        }
    }
    Ok((ur, us))
}

fn check_positions(r: &[f64], s: &[f64]) -> Result<()> {
    for i in 0..r.len() {
        if !r[i].is_finite() || !s[i].is_finite() {
            return Err(Error::NonFiniteState(format!("position {i}")));
        }
        if r[i] <= 0.0 || s[i] <= 0.0 {
            return Err(Error::AxisCrossing {
                index: i,
                r: r[i],
                s: s[i],
            });
        }
    }
    Ok(())
}

/// One classical RK4 step of length `dt`.
///
/// The provider must already hold the field of the current positions.
/// With [`RefreshPolicy::PerStage`] it is refreshed at the three
/// intermediate stages and is left holding the last-stage field.
pub fn step_rk4(
    state: &mut SimState,
    provider: &mut dyn VelocityProvider,
    dt: f64,
    policy: RefreshPolicy,
) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Validation {
            rule: "dt > 0".into(),
            message: format!("dt = {dt}"),
        });
    }
    let np = state.particles.len();
    let (r0, s0) = state.positions();
    let mut stage = state.particles.clone();
    let k1 = sample_all(provider, &r0, &s0, np)?;
    let mut ks = vec![k1];
    for c in [0.5, 0.5, 1.0] {
        let prev = ks.last().expect("nonempty");
        let rx: Vec<f64> = (0..r0.len()).map(|i| r0[i] + c * dt * prev.0[i]).collect();
        let sx: Vec<f64> = (0..s0.len()).map(|i| s0[i] + c * dt * prev.1[i]).collect();
        check_positions(&rx, &sx)?;
        if policy == RefreshPolicy::PerStage {
            stage.r.copy_from_slice(&rx[..np]);
            stage.s.copy_from_slice(&sx[..np]);
            provider.refresh(&stage)?;
        }
        ks.push(sample_all(provider, &rx, &sx, np)?);
    }
    type Stage = (Vec<f64>, Vec<f64>);
    let combine = |x0: &[f64], pick: fn(&Stage) -> &Vec<f64>| -> Vec<f64> {
        let (a, b, c, d) = (pick(&ks[0]), pick(&ks[1]), pick(&ks[2]), pick(&ks[3]));
        (0..x0.len())
            .map(|i| x0[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
            .collect()
    };
    let r1 = combine(&r0, |k| &k.0);
    let s1 = combine(&s0, |k| &k.1);
    check_positions(&r1, &s1)?;
    state.particles.r.copy_from_slice(&r1[..np]);
    state.particles.s.copy_from_slice(&s1[..np]);
    state.markers.set_flat(&r1[np..], &s1[np..]);
    state.t += dt;
    state.step += 1;
    Ok(())
}
