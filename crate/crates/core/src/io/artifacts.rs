//! Writing a run directory and re-checking it afterwards.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::formats::{
    diagnostics_csv, field_bin, field_csv, fmt_f64, history_bin, markers_csv,
    parse_diagnostics_csv, parse_history_bin, write_atomic,
};
use super::svg::{line_plot, overlay_plot, Curve, Series};
use super::Scenario;
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::transport::{fill_rate_fd, RunOutcome, SimState, Simulation, VelocityProvider};

pub const MANIFEST: &str = "manifest.json";
pub const SCENARIO: &str = "scenario.json";
pub const DIAGNOSTICS: &str = "diagnostics.csv";
pub const HISTORY: &str = "particles.bin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the run directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: Scenario,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub halt: String,
    pub halt_detail: Option<String>,
    pub steps: usize,
    pub alpha: f64,
    pub marker_crossing: Option<(usize, f64)>,
    pub final_record: Option<DiagnosticsRecord>,
    /// Largest relative grid/direct velocity difference over the run.
    pub direct_check_max: Option<f64>,
    pub files: Vec<FileEntry>,
}

fn unix(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Emitter {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Emitter {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }
}

/// Rows kept in the CSV: every `cadence` steps plus the last.
pub fn recorded_rows(history: &[DiagnosticsRecord], cadence: usize) -> Vec<DiagnosticsRecord> {
    let cadence = cadence.max(1);
    let last = history.len().saturating_sub(1);
    history
        .iter()
        .enumerate()
        .filter(|(k, _)| k % cadence == 0 || *k == last)
        .map(|(_, r)| *r)
        .collect()
}

/// `y(0) exp(int rate)` by the trapezoid rule.
fn envelope(t: &[f64], y0: f64, rate: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = vec![y0];
    for k in 1..t.len() {
        acc += 0.5 * (t[k] - t[k - 1]) * (rate[k] + rate[k - 1]);
        out.push(y0 * acc.exp());
    }
    out
}

/// Writes the whole run directory; the manifest goes last.
pub fn emit_artifacts(
    dir: &Path,
    scenario: &Scenario,
    out: &RunOutcome,
    started: SystemTime,
    finished: SystemTime,
) -> Result<RunManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut em = Emitter {
        dir: dir.to_path_buf(),
        files: Vec::new(),
    };
    em.put(SCENARIO, scenario.echo().as_bytes())?;
    let rows = recorded_rows(&out.history, scenario.output.cadence);
    em.put(DIAGNOSTICS, diagnostics_csv(&rows).as_bytes())?;

    let mut norms = String::from("t,w_over_rn,w_over_sm,growth_rn,growth_sm\n");
    for n in &out.norms {
        norms.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(n.t),
            fmt_f64(n.w_over_rn),
            fmt_f64(n.w_over_sm),
            fmt_f64(n.growth_rn),
            fmt_f64(n.growth_sm)
        ));
    }
    em.put("norms.csv", norms.as_bytes())?;

    let mut direct = String::from("step,t,samples,max_abs_diff,max_speed,relative\n");
    for c in &out.direct_checks {
        direct.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.step,
            fmt_f64(c.t),
            c.samples,
            fmt_f64(c.max_abs_diff),
            fmt_f64(c.max_speed),
            fmt_f64(c.relative())
        ));
    }
    em.put("direct_checks.csv", direct.as_bytes())?;

    for (k, (_, m)) in out.marker_snapshots.iter().enumerate() {
        em.put(&format!("boundary_{k:02}.csv"), markers_csv(m).as_bytes())?;
    }
    for (k, snap) in out.field_snapshots.iter().enumerate() {
        for f in [&snap.w, &snap.psi, &snap.ur, &snap.us] {
            em.put(&format!("field_{}_{k:02}.bin", f.name), &field_bin(f))?;
            em.put(
                &format!("field_{}_{k:02}.csv", f.name),
                field_csv(f).as_bytes(),
            )?;
        }
    }
    em.put(HISTORY, &history_bin(&out.initial.particles, &out.frames))?;

    let t: Vec<f64> = out.history.iter().map(|r| r.t).collect();
    let col = |f: fn(&DiagnosticsRecord) -> f64| out.history.iter().map(f).collect::<Vec<f64>>();
    for (name, label, y) in [
        ("plot_L.svg", "L", col(|r| r.l)),
        ("plot_Pr.svg", "P^r", col(|r| r.pr)),
        ("plot_Ps.svg", "P^s", col(|r| r.ps)),
        ("plot_mass.svg", "mass", col(|r| r.mass)),
    ] {
        let series = [Series {
            label,
            x: &t,
            y: &y,
            dashed: false,
        }];
        em.put(
            name,
            line_plot(&format!("{label}(t)"), "t", label, &series).as_bytes(),
        )?;
    }
    let nt: Vec<f64> = out.norms.iter().map(|n| n.t).collect();
    let rn: Vec<f64> = out.norms.iter().map(|n| n.w_over_rn).collect();
    let sm: Vec<f64> = out.norms.iter().map(|n| n.w_over_sm).collect();
    let g_rn: Vec<f64> = out.norms.iter().map(|n| n.growth_rn).collect();
    let g_sm: Vec<f64> = out.norms.iter().map(|n| n.growth_sm).collect();
    let env_rn = envelope(&nt, rn.first().copied().unwrap_or(0.0), &g_rn);
    let env_sm = envelope(&nt, sm.first().copied().unwrap_or(0.0), &g_sm);
    let svg = line_plot(
        "weighted sup norms",
        "t",
        "norm",
        &[
            Series {
                label: "|w/r^n|",
                x: &nt,
                y: &rn,
                dashed: false,
            },
            Series {
                label: "envelope",
                x: &nt,
                y: &env_rn,
                dashed: true,
            },
            Series {
                label: "|w/s^m|",
                x: &nt,
                y: &sm,
                dashed: false,
            },
            Series {
                label: "envelope",
                x: &nt,
                y: &env_sm,
                dashed: true,
            },
        ],
    );
    em.put("plot_norms.svg", svg.as_bytes())?;
    let groups: Vec<(String, Vec<Curve>)> = out
        .marker_snapshots
        .iter()
        .map(|(t, m)| {
            (
                format!("t = {t:.3}"),
                m.components
                    .iter()
                    .map(|c| (c.r.clone(), c.s.clone()))
                    .collect(),
            )
        })
        .collect();
    em.put(
        "plot_boundaries.svg",
        overlay_plot("patch boundary", &groups).as_bytes(),
    )?;

    let manifest = RunManifest {
        scenario: scenario.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started: unix(started),
        finished: unix(finished),
        halt: out.halt.clone(),
        halt_detail: out.halt_detail.clone(),
        steps: out.last.step,
        alpha: out.alpha,
        marker_crossing: out.marker_crossing,
        final_record: out.history.last().copied(),
        direct_check_max: out
            .direct_checks
            .iter()
            .map(|c| c.relative())
            .reduce(f64::max),
        files: em.files,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(&dir.join(MANIFEST), text.as_bytes())?;
    Ok(manifest)
}

pub fn load_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        field: MANIFEST.into(),
        message: e.to_string(),
    })
}

/// Files whose size or checksum no longer matches the manifest.
pub fn verify_manifest(dir: &Path, manifest: &RunManifest) -> Vec<String> {
    let mut bad = Vec::new();
    for f in &manifest.files {
        match fs::read(dir.join(&f.path)) {
            Ok(bytes) if bytes.len() as u64 == f.bytes && sha256_hex(&bytes) == f.sha256 => {}
            Ok(_) => bad.push(f.path.clone()),
            Err(_) => bad.push(format!("{} (missing)", f.path)),
        }
    }
    bad
}

/// One PASS/FAIL line of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub assertions: Vec<Assertion>,
    /// Diagnostics recomputed from the particle history.
    pub recomputed: Vec<DiagnosticsRecord>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

/// Tolerances of the structural checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckTolerances {
    /// Per-step monotonicity slack relative to `max(|P(0)|, range)`.
    pub monotone: f64,
    /// Relative mismatch of the impulse rates.
    pub rate: f64,
    pub claim: f64,
    pub recompute: f64,
}

impl Default for CheckTolerances {
    fn default() -> Self {
        CheckTolerances {
            monotone: 1e-3,
            rate: 0.05,
            claim: 0.48,
            recompute: 1e-12,
        }
    }
}

/// Largest per-step violation of `P^r` nondecreasing and `P^s`
/// nonincreasing, relative to `max(|P(0)|, range)`.
pub fn monotonicity_violation(rows: &[DiagnosticsRecord]) -> (f64, f64) {
    let scale = |f: fn(&DiagnosticsRecord) -> f64| {
        let (lo, hi) = rows
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            });
        rows.first()
            .map_or(1.0, |r| f(r).abs())
            .max(hi - lo)
            .max(f64::MIN_POSITIVE)
    };
    let (sr, ss) = (scale(|r| r.pr), scale(|r| r.ps));
    let mut worst = (0.0f64, 0.0f64);
    for w in rows.windows(2) {
        worst.0 = worst.0.max((w[0].pr - w[1].pr) / sr);
        worst.1 = worst.1.max((w[1].ps - w[0].ps) / ss);
    }
    worst
}

/// Rows where the finite-difference rate is central and the rate itself is
/// resolved: interior rows with `|rate_rhs| >= 10%` of its maximum.
pub fn resolved_window(rows: &[DiagnosticsRecord]) -> Vec<usize> {
    let peak = rows.iter().map(|r| r.rate_r_rhs.abs()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Vec::new();
    }
    (1..rows.len().saturating_sub(1))
        .filter(|&k| rows[k].rate_r_rhs.abs() >= 0.1 * peak)
        .collect()
}

/// Largest relative mismatch between the finite-difference and quadrature
/// rates of `P^r` over the resolved window.
pub fn rate_mismatch(rows: &[DiagnosticsRecord]) -> Option<f64> {
    resolved_window(rows)
        .into_iter()
        .map(|k| ((rows[k].rate_r_fd - rows[k].rate_r_rhs) / rows[k].rate_r_rhs).abs())
        .reduce(f64::max)
}

fn relative_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Recomputes the diagnostics from the particle history and re-checks the
/// structural inequalities.
pub fn report(dir: &Path, tol: CheckTolerances) -> Result<Report> {
    let manifest = load_manifest(dir)?;
    let mut asserts = Vec::new();
    let bad = verify_manifest(dir, &manifest);
    asserts.push(Assertion {
        name: "checksums",
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            format!("{} files verified", manifest.files.len())
        } else {
            format!("mismatch: {}", bad.join(", "))
        },
    });
    let scenario = Scenario::load(&dir.join(SCENARIO))?;
    let read = |name: &str| {
        let p = dir.join(name);
        fs::read(&p).map_err(|e| Error::io(&p, e))
    };
    let history = parse_history_bin(&read(HISTORY)?)?;
    let stored = parse_diagnostics_csv(&String::from_utf8_lossy(&read(DIAGNOSTICS)?))?;
    let mut sim = Simulation::new_unchecked_margin(&scenario)?;
    let cadence = scenario.output.cadence.max(1);
    let mut recomputed: Vec<DiagnosticsRecord> = Vec::with_capacity(history.frames.len());
    let mut l_sup: f64 = 0.0;
    for (k, f) in history.frames.iter().enumerate() {
        let state = SimState {
            t: f.t,
            step: f.step,
            particles: history.particles(k),
            markers: f.markers.clone(),
        };
        sim.provider.refresh(&state.particles)?;
        let field = sim.provider.current().expect("refreshed");
        let rec = sim.record(&state, field, manifest.alpha, l_sup, recomputed.last())?;
        l_sup = l_sup.max(rec.l);
        recomputed.push(rec);
    }
    fill_rate_fd(&mut recomputed);
    // with cadence > 1 the blowup integral and the rate differences were
    // formed from every step and cannot be rebuilt from recorded rows
    let cols: Vec<usize> = if cadence == 1 {
        (0..16).collect()
    } else {
        vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 11, 13, 14, 15]
    };
    let mut gap: f64 = if stored.len() == recomputed.len() {
        0.0
    } else {
        f64::INFINITY
    };
    for (a, b) in stored.iter().zip(&recomputed) {
        let (ra, rb) = (a.as_row(), b.as_row());
        for &c in &cols {
            gap = gap.max(relative_gap(ra[c], rb[c]));
        }
    }
    asserts.push(Assertion {
        name: "recompute matches run",
        pass: gap <= tol.recompute,
        detail: format!("{} rows, max relative gap {gap:.3e}", stored.len()),
    });
    let rows = &stored;
    let (vr, vs) = monotonicity_violation(rows);
    asserts.push(Assertion {
        name: "P^r nondecreasing",
        pass: vr <= tol.monotone,
        detail: format!(
            "worst step decrease {vr:.3e} (tolerance {:.0e})",
            tol.monotone
        ),
    });
    asserts.push(Assertion {
        name: "P^s nonincreasing",
        pass: vs <= tol.monotone,
        detail: format!(
            "worst step increase {vs:.3e} (tolerance {:.0e})",
            tol.monotone
        ),
    });
    let mm = rate_mismatch(rows);
    asserts.push(Assertion {
        name: "dP^r/dt matches rate quadrature",
        pass: mm.is_some_and(|m| m <= tol.rate),
        detail: mm.map_or("no resolved rows".into(), |m| {
            format!("max relative mismatch {m:.3e}")
        }),
    });
    let worst_claim = rows
        .iter()
        .map(|r| r.claim_ratio)
        .fold(f64::INFINITY, f64::min);
    asserts.push(Assertion {
        name: "claim ratio",
        pass: worst_claim >= tol.claim,
        detail: format!("min ratio {worst_claim:.4} (alpha {:.6})", manifest.alpha),
    });
    let margin0 = rows.first().map_or(0.0, |r| r.bound_margin);
    let min_margin = rows
        .iter()
        .map(|r| r.bound_margin)
        .fold(f64::INFINITY, f64::min);
    asserts.push(Assertion {
        name: "boundary bound positive",
        pass: min_margin > 0.0,
        detail: format!("min margin over rows {min_margin:.4}"),
    });
    asserts.push(Assertion {
        name: "boundary bound margin at t=0",
        pass: margin0 >= 1.0,
        detail: format!("margin {margin0:.4}"),
    });
    let mass0 = rows.first().map_or(0.0, |r| r.mass);
    asserts.push(Assertion {
        name: "mass constant",
        pass: rows.iter().all(|r| r.mass == mass0),
        detail: format!("mass {mass0}"),
    });
    Ok(Report {
        assertions: asserts,
        recomputed,
    })
}
