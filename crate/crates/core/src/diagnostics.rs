//! Functionals of a particle state: support extents, impulses and their
//! rates, the `X` norm, the blowup integral, the boundary lower bound and
//! the mass fraction used by the support-growth argument.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{boundary_bound_constant, KernelEvaluator, KernelParams};
use crate::model::{ParticleSet, QuadrantPoint, SymmetryConfig};
use crate::velocity::VelocityField;

/// One row of the diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    #[serde(rename = "R")]
    pub r_ext: f64,
    #[serde(rename = "S")]
    pub s_ext: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "Pr")]
    pub pr: f64,
    #[serde(rename = "Ps")]
    pub ps: f64,
    pub mass: f64,
    pub warea: f64,
    pub xnorm: f64,
    pub blowint: f64,
    pub rate_r_fd: f64,
    pub rate_r_rhs: f64,
    pub rate_s_fd: f64,
    pub rate_s_rhs: f64,
    pub claim_ratio: f64,
    pub bound_margin: f64,
}

/// Column order of the diagnostics CSV.
pub const CSV_COLUMNS: [&str; 16] = [
    "t",
    "R",
    "S",
    "L",
    "Pr",
    "Ps",
    "mass",
    "warea",
    "xnorm",
    "blowint",
    "rate_r_fd",
    "rate_r_rhs",
    "rate_s_fd",
    "rate_s_rhs",
    "claim_ratio",
    "bound_margin",
];

impl DiagnosticsRecord {
    pub fn as_row(&self) -> [f64; 16] {
        [
            self.t,
            self.r_ext,
            self.s_ext,
            self.l,
            self.pr,
            self.ps,
            self.mass,
            self.warea,
            self.xnorm,
            self.blowint,
            self.rate_r_fd,
            self.rate_r_rhs,
            self.rate_s_fd,
            self.rate_s_rhs,
            self.claim_ratio,
            self.bound_margin,
        ]
    }

    pub fn from_row(v: &[f64; 16]) -> Self {
        DiagnosticsRecord {
            t: v[0],
            r_ext: v[1],
            s_ext: v[2],
            l: v[3],
            pr: v[4],
            ps: v[5],
            mass: v[6],
            warea: v[7],
            xnorm: v[8],
            blowint: v[9],
            rate_r_fd: v[10],
            rate_r_rhs: v[11],
            rate_s_fd: v[12],
            rate_s_rhs: v[13],
            claim_ratio: v[14],
            bound_margin: v[15],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_row().iter().all(|v| v.is_finite())
    }
}

/// `(R, S, L)` over particles with nonzero strength.
pub fn support_extents(particles: &ParticleSet) -> Result<(f64, f64, f64)> {
    if particles.is_empty() {
        return Err(Error::EmptyParticleSet);
    }
    let (mut r, mut s) = (0.0f64, 0.0f64);
    for i in 0..particles.len() {
        if particles.nu[i] != 0.0 {
            r = r.max(particles.r[i]);
            s = s.max(particles.s[i]);
        }
    }
    Ok((r, s, r + s))
}

/// `(P^r, P^s) = (sum r^(n+1) nu / (n+1), sum s^(m+1) nu / (m+1))`.
pub fn impulses(particles: &ParticleSet, cfg: &SymmetryConfig) -> Result<(f64, f64)> {
    if particles.is_empty() {
        return Err(Error::EmptyParticleSet);
    }
    let (n1, m1) = (cfg.n() as i32 + 1, cfg.m() as i32 + 1);
    let mut pr = 0.0;
    let mut ps = 0.0;
    for i in 0..particles.len() {
        pr += particles.r[i].powi(n1) * particles.nu[i];
        ps += particles.s[i].powi(m1) * particles.nu[i];
    }
    Ok((pr / n1 as f64, ps / m1 as f64))
}

/// Closed-form impulse rates from the velocity on the grid:
///
/// ```text
/// rate^r =  m iint (r^n / s) (u^s)^2 + 1/2 int r^n u^r(r, 0)^2 dr
/// rate^s = -n iint (s^m / r) (u^r)^2 - 1/2 int s^m u^s(0, s)^2 ds
/// ```
///
/// Composite trapezoid rule over all nodes. The volume integrands vanish on
/// the axes (`u^s = O(s)` near `s = 0` and `u^r = O(r)` near `r = 0`).
pub fn impulse_rate_rhs(velocity: &VelocityField, cfg: &SymmetryConfig) -> (f64, f64) {
    let g = *velocity.grid();
    let (n, m) = (cfg.n() as i32, cfg.m() as i32);
    let tw = |k: usize, last: usize| if k == 0 || k == last { 0.5 } else { 1.0 };
    let (li, lj) = (g.nr + 1, g.ns + 1);
    let (mut vr, mut vs) = (0.0, 0.0);
    for i in 0..=li {
        let r = g.r(i);
        for j in 0..=lj {
            let s = g.s(j);
            let w = tw(i, li) * tw(j, lj);
            if j > 0 {
                let us = velocity.us.at(i, j);
                vr += w * r.powi(n) / s * us * us;
            }
            if i > 0 {
                let ur = velocity.ur.at(i, j);
                vs += w * s.powi(m) / r * ur * ur;
            }
        }
    }
    let area = g.hr * g.hs;
    let mut br = 0.0;
    for i in 0..=li {
        let ur = velocity.ur.at(i, 0);
        br += tw(i, li) * g.r(i).powi(n) * ur * ur;
    }
    let mut bs = 0.0;
    for j in 0..=lj {
        let us = velocity.us.at(0, j);
        bs += tw(j, lj) * g.s(j).powi(m) * us * us;
    }
    (
        m as f64 * vr * area + 0.5 * br * g.hr,
        -(n as f64 * vs * area + 0.5 * bs * g.hs),
    )
}

/// `max r^n s^m |q| + max (1 + r^n + s^m) |q|` over particles.
pub fn x_norm(particles: &ParticleSet, cfg: &SymmetryConfig) -> Result<f64> {
    if particles.is_empty() {
        return Err(Error::EmptyParticleSet);
    }
    let (n, m) = (cfg.n() as i32, cfg.m() as i32);
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for i in 0..particles.len() {
        let q = particles.q[i].abs();
        let rn = particles.r[i].powi(n);
        let sm = particles.s[i].powi(m);
        a = a.max(rn * sm * q);
        b = b.max((1.0 + rn + sm) * q);
    }
    Ok(a + b)
}

/// `(||w / r^n||_inf, ||w / s^m||_inf)` as particle maxima (`w / r^n = q s^m`).
pub fn weighted_sup_norms(particles: &ParticleSet, cfg: &SymmetryConfig) -> (f64, f64) {
    let (n, m) = (cfg.n() as i32, cfg.m() as i32);
    (0..particles.len()).fold((0.0f64, 0.0f64), |(a, b), i| {
        let q = particles.q[i].abs();
        (
            a.max(q * particles.s[i].powi(m)),
            b.max(q * particles.r[i].powi(n)),
        )
    })
}

/// Trapezoid rule for `int L(t)^(d-1) dt` over recorded `(t, L)` pairs.
pub fn blowup_integral(history: &[(f64, f64)], d: u32) -> Result<f64> {
    if history.len() < 2 {
        return Err(Error::InsufficientHistory);
    }
    let p = d as i32 - 1;
    Ok(history
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1.powi(p) + w[1].1.powi(p)))
        .sum())
}

/// One probe of the boundary lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundProbe {
    pub r: f64,
    /// `|d_s psi(r, 0)|`.
    pub lhs: f64,
    /// `C r iint rb^(n+1) sb^(m+1) |w| / ((r + rb)^2 + sb^2)^(d/2+1)`.
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub constant: f64,
    pub probes: Vec<BoundProbe>,
    /// `min lhs / rhs`; `None` when every right side vanishes.
    pub margin: Option<f64>,
}

/// Right-hand side of the lower bound at radius `r`.
pub fn boundary_bound_rhs(particles: &ParticleSet, cfg: &SymmetryConfig, r: f64) -> f64 {
    let c = boundary_bound_constant(cfg.n(), cfg.m());
    let (n1, m1) = (cfg.n() as i32 + 1, cfg.m() as i32 + 1);
    let e = cfg.d() as f64 / 2.0 + 1.0;
    let mut acc = 0.0;
    for i in 0..particles.len() {
        let (rb, sb) = (particles.r[i], particles.s[i]);
        let den = ((r + rb).powi(2) + sb * sb).powf(e);
        acc += rb.powi(n1) * sb.powi(m1) * particles.nu[i].abs() / den;
    }
    c * r * acc
}

fn bound_report(
    particles: &ParticleSet,
    cfg: &SymmetryConfig,
    probes: &[f64],
    mut lhs: impl FnMut(f64) -> Result<f64>,
) -> Result<BoundReport> {
    let mut out = Vec::with_capacity(probes.len());
    let mut margin: Option<f64> = None;
    for &r in probes {
        let l = lhs(r)?.abs();
        let rhs = boundary_bound_rhs(particles, cfg, r);
        if rhs > 0.0 {
            let q = l / rhs;
            margin = Some(margin.map_or(q, |m| m.min(q)));
        }
        out.push(BoundProbe { r, lhs: l, rhs });
    }
    Ok(BoundReport {
        constant: boundary_bound_constant(cfg.n(), cfg.m()),
        probes: out,
        margin,
    })
}

/// Lower-bound check with `d_s psi(r, 0) = -u^r(r, 0) / (m + 1)` read from
/// the axis row of a grid velocity.
pub fn boundary_bound_check(
    velocity: &VelocityField,
    particles: &ParticleSet,
    cfg: &SymmetryConfig,
    probes: &[f64],
) -> Result<BoundReport> {
    let m1 = cfg.m() as f64 + 1.0;
    bound_report(particles, cfg, probes, |r| {
        Ok(velocity.ur.sample(r, 0.0)? / m1)
    })
}

/// Lower-bound check with `d_s psi(r, 0)` summed from the kernel.
pub fn boundary_bound_direct(
    particles: &ParticleSet,
    cfg: &SymmetryConfig,
    params: &KernelParams,
    probes: &[f64],
) -> Result<BoundReport> {
    let mut ev = KernelEvaluator::new(*cfg, *params)?;
    bound_report(particles, cfg, probes, |r| {
        let p = QuadrantPoint { r, s: 0.0 };
        let mut acc = 0.0;
        for i in 0..particles.len() {
            acc += ev.grad_psi_kernel(p, particles.point(i))?.1 * particles.nu[i];
        }
        Ok(acc)
    })
}

/// `alpha = (iint r^n s^(2m+1) / (1/2 iint r^n s^m))^(1/(m+1))` over the
/// initial patch, with `|nu|` as the `r^n s^m` measure of each cell.
pub fn claim_alpha(initial: &ParticleSet, cfg: &SymmetryConfig) -> Result<f64> {
    if initial.is_empty() {
        return Err(Error::EmptyParticleSet);
    }
    let m1 = cfg.m() as i32 + 1;
    let (mut top, mut bottom) = (0.0, 0.0);
    for i in 0..initial.len() {
        let a = initial.nu[i].abs();
        top += a * initial.s[i].powi(m1);
        bottom += a;
    }
    Ok((top / (0.5 * bottom)).powf(1.0 / m1 as f64))
}

/// Fraction of the strength in `[0, m_bound] x [0, alpha]`.
pub fn claim_check(particles: &ParticleSet, alpha: f64, m_bound: f64) -> f64 {
    let (mut inside, mut total) = (0.0, 0.0);
    for i in 0..particles.len() {
        total += particles.nu[i];
        if particles.s[i] <= alpha && particles.r[i] <= m_bound {
            inside += particles.nu[i];
        }
    }
    if total == 0.0 {
        0.0
    } else {
        inside / total
    }
}
