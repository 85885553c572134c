//! Velocity `(u^r, u^s)` from the stream function on the grid, and the grid
//! pipeline particles -> `w` -> `psi` -> `u`.
//!
//! `u^r = -(m/s) psi - d_s psi`, `u^s = (n/r) psi + d_r psi`; on the axes
//! these reduce to `u^r(r, 0) = -(m+1) d_s psi(r, 0)` and
//! `u^s(0, s) = (n+1) d_r psi(0, s)`.

pub use crate::kernel::velocity_direct;

use crate::elliptic::{deposit, EllipticSolver, FarBoundary, Grid, GridField, SolveReport};
use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::model::{ParticleSet, SymmetryConfig};

/// Both velocity components on a shared grid, axis rows included.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub ur: GridField,
    pub us: GridField,
}

impl VelocityField {
    pub fn zeros(grid: Grid) -> Self {
        VelocityField {
            ur: GridField::zeros(grid, "ur"),
            us: GridField::zeros(grid, "us"),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.ur.grid
    }

    /// Multiplies both components by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.ur.values.iter_mut().for_each(|v| *v *= k);
        out.us.values.iter_mut().for_each(|v| *v *= k);
        out
    }
}

/// Second-order derivative along one grid direction: central inside,
/// one-sided at the ends.
#[inline]
fn diff(f: impl Fn(usize) -> f64, k: usize, last: usize, h: f64) -> f64 {
    if k == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h)
    } else if k == last {
        (3.0 * f(last) - 4.0 * f(last - 1) + f(last - 2)) / (2.0 * h)
    } else {
        (f(k + 1) - f(k - 1)) / (2.0 * h)
    }
}

pub fn velocity_from_psi(psi: &GridField, cfg: &SymmetryConfig) -> VelocityField {
    let g = psi.grid;
    let (n, m) = (cfg.n() as f64, cfg.m() as f64);
    let mut out = VelocityField::zeros(g);
    let (li, lj) = (g.nr + 1, g.ns + 1);
    for i in 0..=li {
        for j in 0..=lj {
            let ds = diff(|k| psi.at(i, k), j, lj, g.hs);
            let dr = diff(|k| psi.at(k, j), i, li, g.hr);
            let p = psi.at(i, j);
            let ur = if j == 0 {
                -(m + 1.0) * ds
            } else {
                -(m / g.s(j) * p + ds)
            };
            let us = if i == 0 {
                (n + 1.0) * dr
            } else {
                n / g.r(i) * p + dr
            };
            let k = g.idx(i, j);
            out.ur.values[k] = ur;
            out.us.values[k] = us;
        }
    }
    out
}

/// Bilinear interpolation of both components.
pub fn sample_velocity(field: &VelocityField, r: f64, s: f64) -> Result<(f64, f64)> {
    Ok((field.ur.sample(r, s)?, field.us.sample(r, s)?))
}

/// `max sqrt((u^r)^2 + (u^s)^2)` over all nodes.
pub fn max_speed(field: &VelocityField) -> f64 {
    field
        .ur
        .values
        .iter()
        .zip(&field.us.values)
        .fold(0.0, |a, (x, y)| a.max(x.hypot(*y)))
}

/// Output of one pass of the grid pipeline.
#[derive(Debug, Clone)]
pub struct GridVelocity {
    pub w: GridField,
    pub psi: GridField,
    pub velocity: VelocityField,
    pub solve: SolveReport,
}

/// Particles -> deposit -> kernel far-edge data -> solve -> velocity.
#[derive(Debug, Clone)]
pub struct GridBackend {
    pub cfg: SymmetryConfig,
    pub solver: EllipticSolver,
    /// Kernel settings for the far-edge data.
    pub boundary_params: KernelParams,
    /// Aggregation bin for far-edge data (`0` evaluates every particle).
    pub boundary_bin: f64,
}

impl GridBackend {
    pub fn grid(&self) -> &Grid {
        self.solver.grid()
    }

    pub fn compute(&self, particles: &ParticleSet) -> Result<GridVelocity> {
        if particles.is_empty() {
            return Err(Error::EmptyParticleSet);
        }
        let grid = *self.grid();
        let w = deposit(particles, &grid)?;
        let far = FarBoundary::from_particles(
            &grid,
            particles,
            &self.cfg,
            &self.boundary_params,
            self.boundary_bin,
        )?;
        let (psi, solve) = self.solver.solve(&w, &far)?;
        let velocity = velocity_from_psi(&psi, &self.cfg);
        if !velocity.ur.is_finite() || !velocity.us.is_finite() {
            return Err(Error::NonFiniteState("grid velocity".into()));
        }
        Ok(GridVelocity {
            w,
            psi,
            velocity,
            solve,
        })
    }
}

/// How the advecting velocity is evaluated between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Derivatives of a bicubic Hermite interpolant of `psi`.
    #[default]
    Stream,
    /// Bilinear interpolation of the nodal velocity.
    Bilinear,
}

/// Bicubic Hermite interpolant of the stream function.
///
/// Nodal derivatives come from the same second-order differences as
/// [`velocity_from_psi`]. The velocity is taken from the exact derivatives of
/// the interpolant, so it has zero weighted divergence at every point, not
/// only at nodes.
#[derive(Debug, Clone)]
pub struct StreamInterpolant {
    grid: Grid,
    n: f64,
    m: f64,
    /// `[psi, d_r psi, d_s psi, d_rs psi]` per node.
    nodal: Vec<[f64; 4]>,
}

#[inline]
fn hermite(t: f64) -> ([f64; 4], [f64; 4]) {
    let (t2, t3) = (t * t, t * t * t);
    (
        [
            2.0 * t3 - 3.0 * t2 + 1.0,
            t3 - 2.0 * t2 + t,
            -2.0 * t3 + 3.0 * t2,
            t3 - t2,
        ],
        [
            6.0 * t2 - 6.0 * t,
            3.0 * t2 - 4.0 * t + 1.0,
            -6.0 * t2 + 6.0 * t,
            3.0 * t2 - 2.0 * t,
        ],
    )
}

impl StreamInterpolant {
    pub fn new(psi: &GridField, cfg: &SymmetryConfig) -> Self {
        let g = psi.grid;
        let (li, lj) = (g.nr + 1, g.ns + 1);
        let mut ds = vec![0.0; g.len()];
        for i in 0..=li {
            for j in 0..=lj {
                ds[g.idx(i, j)] = diff(|k| psi.at(i, k), j, lj, g.hs);
            }
        }
        let mut nodal = vec![[0.0; 4]; g.len()];
        for i in 0..=li {
            for j in 0..=lj {
                nodal[g.idx(i, j)] = [
                    psi.at(i, j),
                    diff(|k| psi.at(k, j), i, li, g.hr),
                    ds[g.idx(i, j)],
                    diff(|k| ds[g.idx(k, j)], i, li, g.hr),
                ];
            }
        }
        StreamInterpolant {
            grid: g,
            n: cfg.n() as f64,
            m: cfg.m() as f64,
            nodal,
        }
    }

    /// `(psi, d_r psi, d_s psi)` at `(r, s)`.
    pub fn psi_and_grad(&self, r: f64, s: f64) -> Result<(f64, f64, f64)> {
        let g = &self.grid;
        if !g.contains(r, s) {
            return Err(Error::OutsideGrid { r, s });
        }
        let (i, j, x, y) = g.locate(r, s);
        let (i, x) = if i > g.nr { (g.nr, 1.0) } else { (i, x) };
        let (j, y) = if j > g.ns { (g.ns, 1.0) } else { (j, y) };
        let (hx, dhx) = hermite(x);
        let (hy, dhy) = hermite(y);
        let (mut f, mut fr, mut fs) = (0.0, 0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                let c = self.nodal[g.idx(i + a, j + b)];
                // value and derivative slots of the 1-D bases for this corner
                let (va, da) = (2 * a, 2 * a + 1);
                let (vb, db) = (2 * b, 2 * b + 1);
                let terms = [
                    (c[0], va, vb, 1.0),
                    (c[1], da, vb, g.hr),
                    (c[2], va, db, g.hs),
                    (c[3], da, db, g.hr * g.hs),
                ];
                for (val, kx, ky, scale) in terms {
                    let w = val * scale;
                    f += w * hx[kx] * hy[ky];
                    fr += w * dhx[kx] * hy[ky] / g.hr;
                    fs += w * hx[kx] * dhy[ky] / g.hs;
                }
            }
        }
        Ok((f, fr, fs))
    }

    /// Velocity of the interpolated stream function, with the axis limits
    /// on the axes themselves.
    pub fn velocity(&self, r: f64, s: f64) -> Result<(f64, f64)> {
        let (p, pr, ps) = self.psi_and_grad(r, s)?;
        let ur = if s > 0.0 {
            -(self.m * p / s + ps)
        } else {
            -(self.m + 1.0) * ps
        };
        let us = if r > 0.0 {
            self.n * p / r + pr
        } else {
            (self.n + 1.0) * pr
        };
        Ok((ur, us))
    }
}
