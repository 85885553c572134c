//! Refinement study at `h`, `h/2`, `h/4`: manufactured stream-function
//! errors, particle self-convergence and weighted-area drift.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::elliptic::manufactured::{manufactured, manufactured_l, manufactured_u};
use crate::elliptic::{EllipticSolver, FarBoundary, Grid, GridField, SolverKind};
use crate::error::{Error, Result};
use crate::model::{ParticleSet, SymmetryConfig};
use crate::transport::Simulation;
use crate::velocity::velocity_from_psi;

/// Max-norm errors of the grid backend against `psi* = r s exp(-r^2 - s^2)`
/// on `[0, 4]^2` with spacing `h`.
pub fn manufactured_errors(
    cfg: &SymmetryConfig,
    h: f64,
    kind: SolverKind,
    tol: f64,
) -> Result<(f64, f64)> {
    let n = (4.0 / h).round() as usize;
    if n < 4 {
        return Err(Error::Validation {
            rule: "h <= 1".into(),
            message: format!("manufactured box needs at least 4 cells, h = {h}"),
        });
    }
    let g = Grid::new(4.0, 4.0, n - 1, n - 1)?;
    let w = GridField::from_fn(g, "w", |r, s| manufactured_l(cfg.n(), cfg.m(), r, s));
    let far = FarBoundary::from_fn(&g, manufactured);
    let (psi, _) = EllipticSolver::new(g, *cfg, kind, tol)?.solve(&w, &far)?;
    let mut e_psi: f64 = 0.0;
    let mut e_u: f64 = 0.0;
    let u = velocity_from_psi(&psi, cfg);
    for i in 0..g.width() {
        for j in 0..g.height() {
            let (r, s) = (g.r(i), g.s(j));
            e_psi = e_psi.max((psi.at(i, j) - manufactured(r, s)).abs());
            let (ur, us) = manufactured_u(cfg.n(), cfg.m(), r, s);
            e_u = e_u.max((u.ur.at(i, j) - ur).abs().max((u.us.at(i, j) - us).abs()));
        }
    }
    Ok((e_psi, e_u))
}

/// Largest distance between a coarse particle and the mean of the four fine
/// particles born in its cell. Cells are matched through the initial
/// positions; coarse cells without all four children are skipped.
pub fn refinement_deviation(
    coarse_initial: &ParticleSet,
    coarse_final: &ParticleSet,
    fine_initial: &ParticleSet,
    fine_final: &ParticleSet,
) -> f64 {
    let hc = coarse_initial.h;
    let cell = |r: f64, s: f64| ((r / hc).floor() as i64, (s / hc).floor() as i64);
    let mut sums: HashMap<(i64, i64), (f64, f64, usize)> = HashMap::new();
    for k in 0..fine_initial.len() {
        let e = sums
            .entry(cell(fine_initial.r[k], fine_initial.s[k]))
            .or_default();
        e.0 += fine_final.r[k];
        e.1 += fine_final.s[k];
        e.2 += 1;
    }
    let mut dev: f64 = 0.0;
    for k in 0..coarse_initial.len() {
        if let Some(&(r, s, 4)) = sums.get(&cell(coarse_initial.r[k], coarse_initial.s[k])) {
            dev = dev.max((coarse_final.r[k] - r / 4.0).hypot(coarse_final.s[k] - s / 4.0));
        }
    }
    dev
}

/// `log2(a / b)` for successive entries.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub h: f64,
    pub psi_error: f64,
    pub velocity_error: f64,
    pub particles: usize,
    pub steps: usize,
    pub halt: String,
    /// `max_t |warea(t) / warea(0) - 1|`.
    pub warea_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub levels: Vec<Level>,
    pub psi_orders: Vec<f64>,
    pub velocity_orders: Vec<f64>,
    /// Deviation between levels `k` and `k + 1` at the final time.
    pub transport_deviations: Vec<f64>,
    pub transport_orders: Vec<f64>,
}

impl ConvergenceReport {
    pub fn lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for l in &self.levels {
            out.push(format!(
                "h={:.6} psi_err={:.3e} u_err={:.3e} particles={} steps={} halt={} warea_drift={:.3e}",
                l.h, l.psi_error, l.velocity_error, l.particles, l.steps, l.halt, l.warea_drift
            ));
        }
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:.3}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        out.push(format!("psi orders: {}", join(&self.psi_orders)));
        out.push(format!("velocity orders: {}", join(&self.velocity_orders)));
        let devs = self
            .transport_deviations
            .iter()
            .map(|x| format!("{x:.3e}"))
            .collect::<Vec<_>>()
            .join(" ");
        out.push(format!("transport deviations: {devs}"));
        out.push(format!(
            "transport orders: {}",
            join(&self.transport_orders)
        ));
        out
    }
}

/// Runs the scenario at `h / 2^k` for `k < levels`. The velocity grid stays
/// as configured; the time step follows `h` through the CFL rule.
pub fn convergence(scenario: &Scenario, levels: usize) -> Result<ConvergenceReport> {
    let cfg = scenario.symmetry;
    let d = &scenario.discretization;
    let mut out = ConvergenceReport {
        levels: Vec::new(),
        psi_orders: Vec::new(),
        velocity_orders: Vec::new(),
        transport_deviations: Vec::new(),
        transport_orders: Vec::new(),
    };
    let mut prev: Option<(ParticleSet, ParticleSet)> = None;
    for k in 0..levels {
        let h = d.h / (1u64 << k) as f64;
        let (psi_error, velocity_error) = manufactured_errors(&cfg, h, d.solver, d.solver_tol)?;
        let mut sc = scenario.clone();
        sc.discretization.h = h;
        sc.time.direct_check_every = 0;
        let mut sim = Simulation::new(&sc)?;
        let run = sim.run()?;
        let w0 = run.history.first().map_or(0.0, |r| r.warea);
        let warea_drift = run
            .history
            .iter()
            .fold(0.0f64, |a, r| a.max((r.warea / w0 - 1.0).abs()));
        let (init, last) = (run.initial.particles.clone(), run.last.particles.clone());
        if let Some((ci, cf)) = &prev {
            out.transport_deviations
                .push(refinement_deviation(ci, cf, &init, &last));
        }
        out.levels.push(Level {
            h,
            psi_error,
            velocity_error,
            particles: init.len(),
            steps: run.last.step,
            halt: run.halt.clone(),
            warea_drift,
        });
        prev = Some((init, last));
    }
    let psi: Vec<f64> = out.levels.iter().map(|l| l.psi_error).collect();
    let vel: Vec<f64> = out.levels.iter().map(|l| l.velocity_error).collect();
    out.psi_orders = observed_orders(&psi);
    out.velocity_orders = observed_orders(&vel);
    out.transport_orders = observed_orders(&out.transport_deviations);
    Ok(out)
}
