use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{choose_dt, step_rk4, GridProvider, SimState, VelocityProvider};
use crate::diagnostics::{
    boundary_bound_check, claim_alpha, claim_check, impulse_rate_rhs, impulses, support_extents,
    weighted_sup_norms, x_norm, DiagnosticsRecord,
};
use crate::elliptic::GridField;
use crate::error::{Error, Result};
use crate::io::Scenario;
use crate::kernel::{velocity_direct, KernelParams};
use crate::model::{
    discretize, weighted_area_winding, BoundaryMarkers, ParticleSet, QuadrantPoint, SymmetryConfig,
};
use crate::velocity::GridVelocity;

/// Grid velocity against the direct kernel sum at points between neighbouring
/// particles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectCheck {
    pub step: usize,
    pub t: f64,
    pub samples: usize,
    pub max_abs_diff: f64,
    /// Largest grid speed at the particles.
    pub max_speed: f64,
}

impl DirectCheck {
    pub fn relative(&self) -> f64 {
        if self.max_speed > 0.0 {
            self.max_abs_diff / self.max_speed
        } else {
            self.max_abs_diff
        }
    }
}

/// `max |w / r^n|` and `max |w / s^m|` over particles, with the rates
/// `m max |u^s / s|` and `n max |u^r / r|` that bound their growth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormsRecord {
    pub t: f64,
    pub w_over_rn: f64,
    pub w_over_sm: f64,
    pub growth_rn: f64,
    pub growth_sm: f64,
}

/// Particle and marker positions at one recorded step.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub step: usize,
    pub t: f64,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub markers: BoundaryMarkers,
}

#[derive(Debug, Clone)]
pub struct FieldSnapshot {
    pub t: f64,
    pub w: GridField,
    pub psi: GridField,
    pub ur: GridField,
    pub us: GridField,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// One record per step.
    pub history: Vec<DiagnosticsRecord>,
    pub norms: Vec<NormsRecord>,
    pub direct_checks: Vec<DirectCheck>,
    /// States every `cadence` steps, plus the last one.
    pub frames: Vec<Frame>,
    pub marker_snapshots: Vec<(f64, BoundaryMarkers)>,
    pub field_snapshots: Vec<FieldSnapshot>,
    pub initial: SimState,
    pub last: SimState,
    pub alpha: f64,
    /// Step and time at which the marker polygon first crossed itself.
    pub marker_crossing: Option<(usize, f64)>,
    /// `"completed"` or the label of the error that stopped the run.
    pub halt: String,
    pub halt_detail: Option<String>,
}

impl RunOutcome {
    pub fn completed(&self) -> bool {
        self.halt == "completed"
    }

    pub fn final_record(&self) -> &DiagnosticsRecord {
        self.history.last().expect("at least the initial record")
    }
}

/// A configured run: scenario plus the grid pipeline.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub scenario: Scenario,
    pub cfg: SymmetryConfig,
    pub provider: GridProvider,
    /// Kernel settings for direct comparisons.
    pub params: KernelParams,
    pub probes: Vec<f64>,
}

impl Simulation {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        Self::build(scenario)
    }

    /// Skips the grid margin rule, for experiments on purpose-built grids.
    pub fn new_unchecked_margin(scenario: &Scenario) -> Result<Self> {
        scenario.validate_core()?;
        Self::build(scenario)
    }

    fn build(scenario: &Scenario) -> Result<Self> {
        Ok(Simulation {
            scenario: scenario.clone(),
            cfg: scenario.symmetry,
            provider: GridProvider::with_interpolation(
                scenario.backend()?,
                scenario.discretization.interpolation,
            ),
            params: scenario.kernel_params(),
            probes: scenario.bound_probes(),
        })
    }

    pub fn initial_state(&self) -> Result<SimState> {
        let v = self.scenario.validate_core()?;
        let h = self.scenario.discretization.h;
        let particles = discretize(&v, h)?;
        let markers =
            BoundaryMarkers::from_patch(&self.scenario.patch, self.scenario.marker_spacing());
        Ok(SimState::new(particles, markers))
    }

    /// Step length used in the CFL bound.
    fn cfl_length(&self) -> f64 {
        let g = self.provider.backend.grid();
        self.scenario.discretization.h.min(g.hr).min(g.hs)
    }

    /// Diagnostics of `state` given the field of its positions. `prev` is the
    /// previous record (for the blowup integral) and `l_sup` the running
    /// maximum of `L` before this state.
    pub fn record(
        &self,
        state: &SimState,
        field: &GridVelocity,
        alpha: f64,
        l_sup: f64,
        prev: Option<&DiagnosticsRecord>,
    ) -> Result<DiagnosticsRecord> {
        let p = &state.particles;
        let cfg = &self.cfg;
        let (r_ext, s_ext, l) = support_extents(p)?;
        let (pr, ps) = impulses(p, cfg)?;
        let (rate_r, rate_s) = impulse_rate_rhs(&field.velocity, cfg);
        let blowint = match prev {
            None => 0.0,
            Some(q) => {
                let e = cfg.d() as i32 - 1;
                q.blowint + 0.5 * (state.t - q.t) * (q.l.powi(e) + l.powi(e))
            }
        };
        let bound = boundary_bound_check(&field.velocity, p, cfg, &self.probes)?;
        Ok(DiagnosticsRecord {
            t: state.t,
            r_ext,
            s_ext,
            l,
            pr,
            ps,
            mass: p.total_strength(),
            warea: weighted_area_winding(&state.markers, cfg)?,
            xnorm: x_norm(p, cfg)?,
            blowint,
            rate_r_fd: 0.0,
            rate_r_rhs: rate_r,
            rate_s_fd: 0.0,
            rate_s_rhs: rate_s,
            claim_ratio: claim_check(p, alpha, l_sup.max(l)),
            bound_margin: bound.margin.unwrap_or(0.0),
        })
    }

    fn growth_rates(&self, p: &ParticleSet) -> Result<(f64, f64)> {
        let (n, m) = (self.cfg.n() as f64, self.cfg.m() as f64);
        let (mut a, mut b) = (0.0f64, 0.0f64);
        for i in 0..p.len() {
            let (ur, us) = self.provider.sample(p.r[i], p.s[i])?;
            a = a.max(m * (us / p.s[i]).abs());
            b = b.max(n * (ur / p.r[i]).abs());
        }
        Ok((a, b))
    }

    fn direct_check(&self, state: &SimState) -> Result<DirectCheck> {
        let p = &state.particles;
        let want = self.scenario.time.direct_check_samples.max(1);
        let h = self.scenario.discretization.h;
        // probe halfway between lattice neighbours, where a nearly unsmoothed
        // sum is accurate; at a particle the self term would dominate
        let pairs: Vec<usize> = (0..p.len().saturating_sub(1))
            .filter(|&i| {
                let (a, b) = (p.point(i), p.point(i + 1));
                (a.r - b.r).hypot(a.s - b.s) < 4.0 * h
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.scenario.output.seed ^ state.step as u64);
        let mut picks =
            rand::seq::index::sample(&mut rng, pairs.len(), want.min(pairs.len())).into_vec();
        picks.sort_unstable();
        let targets: Vec<QuadrantPoint> = picks
            .into_iter()
            .map(|k| {
                let (a, b) = (p.point(pairs[k]), p.point(pairs[k] + 1));
                QuadrantPoint {
                    r: 0.5 * (a.r + b.r),
                    s: 0.5 * (a.s + b.s),
                }
            })
            .collect();
        let speed = self.provider.max_speed();
        if targets.is_empty() {
            return Ok(DirectCheck {
                step: state.step,
                t: state.t,
                samples: 0,
                max_abs_diff: 0.0,
                max_speed: speed,
            });
        }
        let params = KernelParams {
            delta: 0.01 * h,
            ..self.params
        };
        let direct = velocity_direct(p, &targets, &self.cfg, &params)?;
        let mut diff: f64 = 0.0;
        for (t, (ur, us)) in targets.iter().zip(direct) {
            let (gr, gs) = self.provider.sample(t.r, t.s)?;
            diff = diff.max((gr - ur).hypot(gs - us));
        }
        Ok(DirectCheck {
            step: state.step,
            t: state.t,
            samples: targets.len(),
            max_abs_diff: diff,
            max_speed: speed,
        })
    }

    /// Runs from the discretized patch to `t_end`.
    pub fn run(&mut self) -> Result<RunOutcome> {
        let st = self.initial_state()?;
        let t_end = self.scenario.time.t_end;
        self.run_from(st, t_end)
    }

    /// Runs from `state` (whose time is reset to 0) for duration `t_end`.
    /// Physical failures end the run with a labeled halt; configuration
    /// errors are returned.
    pub fn run_from(&mut self, mut state: SimState, t_end: f64) -> Result<RunOutcome> {
        state.t = 0.0;
        state.step = 0;
        let ctl = self.scenario.time.clone();
        let cadence = self.scenario.output.cadence.max(1);
        let alpha = claim_alpha(&state.particles, &self.cfg)?;
        let mut targets: Vec<f64> = self
            .scenario
            .snapshot_times()
            .into_iter()
            .filter(|t| *t >= 0.0 && *t <= t_end)
            .collect();
        targets.sort_by(f64::total_cmp);
        let eps = 1e-12 * t_end.max(1.0);
        let mut out = RunOutcome {
            history: Vec::new(),
            norms: Vec::new(),
            direct_checks: Vec::new(),
            frames: Vec::new(),
            marker_snapshots: Vec::new(),
            field_snapshots: Vec::new(),
            initial: state.clone(),
            last: state.clone(),
            alpha,
            marker_crossing: None,
            halt: "completed".into(),
            halt_detail: None,
        };
        let mut l_sup: f64 = 0.0;
        let mut next_target = 0;
        let grid = *self.provider.backend.grid();
        let l_grid = 0.5 * (grid.r_max + grid.s_max);
        let mut halted: Option<Error> = None;
        loop {
            if let Err(e) = self.provider.refresh(&state.particles) {
                halted = Some(e);
                break;
            }
            let field = self.provider.current().expect("refreshed").clone();
            let rec = match self.record(&state, &field, alpha, l_sup, out.history.last()) {
                Ok(r) => r,
                Err(e) => {
                    halted = Some(e);
                    break;
                }
            };
            if !rec.is_finite() {
                halted = Some(Error::NonFiniteState(format!(
                    "diagnostics at t = {}",
                    rec.t
                )));
                break;
            }
            l_sup = l_sup.max(rec.l);
            if out.marker_crossing.is_none() && !state.markers.is_simple() {
                out.marker_crossing = Some((state.step, state.t));
            }
            out.history.push(rec);
            let (a, b) = weighted_sup_norms(&state.particles, &self.cfg);
            let (ga, gb) = match self.growth_rates(&state.particles) {
                Ok(g) => g,
                Err(e) => {
                    halted = Some(e);
                    break;
                }
            };
            out.norms.push(NormsRecord {
                t: state.t,
                w_over_rn: a,
                w_over_sm: b,
                growth_rn: ga,
                growth_sm: gb,
            });
            if state.step.is_multiple_of(cadence) {
                out.frames.push(frame(&state));
            }
            let done = state.t >= t_end - eps;
            let at_target = next_target < targets.len() && state.t >= targets[next_target] - eps;
            if at_target {
                while next_target < targets.len() && state.t >= targets[next_target] - eps {
                    next_target += 1;
                }
                out.marker_snapshots.push((state.t, state.markers.clone()));
            }
            if state.step == 0 || done {
                out.field_snapshots.push(snapshot(state.t, &field));
            }
            if ctl.direct_check_every > 0 && state.step.is_multiple_of(ctl.direct_check_every) {
                match self.direct_check(&state) {
                    Ok(c) => out.direct_checks.push(c),
                    Err(e) => {
                        halted = Some(e);
                        break;
                    }
                }
            }
            if done {
                break;
            }
            if rec.blowint > ctl.blowup_bound && rec.l > l_grid {
                halted = Some(Error::BlowupSuspect {
                    integral: rec.blowint,
                    l: rec.l,
                });
                break;
            }
            let mut dt = match choose_dt(self.provider.max_speed(), self.cfl_length(), &ctl) {
                Ok(dt) => dt,
                Err(e) => {
                    halted = Some(e);
                    break;
                }
            };
            dt = dt.min(t_end - state.t);
            if next_target < targets.len() {
                dt = dt.min(targets[next_target] - state.t);
            }
            if let Err(e) = step_rk4(&mut state, &mut self.provider, dt, ctl.refresh) {
                halted = Some(e);
                break;
            }
            if let Some(f) = ctl.redistribute {
                state.markers.redistribute(f);
            }
        }
        if let Some(e) = halted {
            out.halt = e.label().to_string();
            out.halt_detail = Some(e.to_string());
            if let Some(f) = self.provider.current() {
                if out.field_snapshots.last().is_none_or(|s| s.t != state.t) {
                    out.field_snapshots.push(snapshot(state.t, f));
                }
            }
        }
        if out.frames.last().is_none_or(|f| f.step != state.step) {
            out.frames.push(frame(&state));
        }
        fill_rate_fd(&mut out.history);
        out.last = state;
        Ok(out)
    }
}

fn frame(state: &SimState) -> Frame {
    Frame {
        step: state.step,
        t: state.t,
        r: state.particles.r.clone(),
        s: state.particles.s.clone(),
        markers: state.markers.clone(),
    }
}

fn snapshot(t: f64, f: &GridVelocity) -> FieldSnapshot {
    FieldSnapshot {
        t,
        w: f.w.clone(),
        psi: f.psi.clone(),
        ur: f.velocity.ur.clone(),
        us: f.velocity.us.clone(),
    }
}

/// Three-point derivative on a nonuniform time series.
pub fn derivative(t: &[f64], y: &[f64], k: usize) -> f64 {
    let n = t.len();
    if n < 2 {
        return 0.0;
    }
    if k == 0 {
        return (y[1] - y[0]) / (t[1] - t[0]);
    }
    if k == n - 1 {
        return (y[k] - y[k - 1]) / (t[k] - t[k - 1]);
    }
    let (h1, h2) = (t[k] - t[k - 1], t[k + 1] - t[k]);
    -h2 / (h1 * (h1 + h2)) * y[k - 1]
        + (h2 - h1) / (h1 * h2) * y[k]
        + h1 / (h2 * (h1 + h2)) * y[k + 1]
}

/// Fills the finite-difference impulse rates of a history.
pub fn fill_rate_fd(history: &mut [DiagnosticsRecord]) {
    let t: Vec<f64> = history.iter().map(|r| r.t).collect();
    let pr: Vec<f64> = history.iter().map(|r| r.pr).collect();
    let ps: Vec<f64> = history.iter().map(|r| r.ps).collect();
    for (k, rec) in history.iter_mut().enumerate() {
        rec.rate_r_fd = derivative(&t, &pr, k);
        rec.rate_s_fd = derivative(&t, &ps, k);
    }
}

/// Outcome of a forward-then-backward run.
#[derive(Debug, Clone)]
pub struct ReverseReport {
    pub duration: f64,
    /// `max_i |X_i(back) - X_i(0)|`.
    pub max_deviation: f64,
    pub forward: RunOutcome,
    pub backward: RunOutcome,
}

/// Runs forward for `t_end`, flips every strength and tracer, runs for
/// `t_end` again and compares with the start.
pub fn reverse_check(sim: &mut Simulation) -> Result<ReverseReport> {
    let forward = sim.run()?;
    if !forward.completed() {
        return Err(Error::Validation {
            rule: "completed forward run".into(),
            message: forward.halt_detail.clone().unwrap_or_default(),
        });
    }
    let mut back_state = forward.last.clone();
    back_state.particles = back_state.particles.negated();
    let t_end = sim.scenario.time.t_end;
    let backward = sim.run_from(back_state, t_end)?;
    if !backward.completed() {
        return Err(Error::Validation {
            rule: "completed backward run".into(),
            message: backward.halt_detail.clone().unwrap_or_default(),
        });
    }
    let max_deviation = max_deviation(&forward.initial.particles, &backward.last.particles);
    Ok(ReverseReport {
        duration: t_end,
        max_deviation,
        forward,
        backward,
    })
}

/// Largest position distance between matching particles.
pub fn max_deviation(a: &ParticleSet, b: &ParticleSet) -> f64 {
    (0..a.len().min(b.len()))
        .map(|i| (a.r[i] - b.r[i]).hypot(a.s[i] - b.s[i]))
        .fold(0.0, f64::max)
}
