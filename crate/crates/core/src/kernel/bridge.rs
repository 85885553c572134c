//! Reconstruction of the full-space velocity from the reduced stream function.
//!
//! In Cartesian coordinates of `R^d` the stream two-tensor is
//! `Psi^{ij} = -(x_i x_j / (r s)) psi(r, s)` for `i` in the first block and
//! `j` in the second (antisymmetric, zero within a block), and the velocity
//! is `u^i = sum_j d_j Psi^{ij}`. Projecting onto the two radial directions
//! must reproduce the reduced velocity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{eval_psi_many, velocity_direct, KernelParams};
use crate::error::{Error, Result};
use crate::model::{ParticleSet, QuadrantPoint, SymmetryConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BridgeReport {
    /// Points actually compared.
    pub evaluated: usize,
    /// Points on an axis (`r = 0` or `s = 0`), skipped.
    pub excluded: usize,
    /// `max |u_bridge - u_reduced| / max |u_reduced|` over evaluated points.
    pub max_rel_deviation: f64,
    /// Whether `Psi^{ji} = -Psi^{ij}` held bit for bit.
    pub antisymmetric: bool,
}

const STEP: f64 = 1e-3;
const OFFSETS: [(f64, f64); 4] = [(2.0, -1.0), (1.0, 8.0), (-1.0, -8.0), (-2.0, 1.0)];

fn radii(x: &[f64], n: usize) -> (f64, f64) {
    let r = x[..=n].iter().map(|v| v * v).sum::<f64>().sqrt();
    let s = x[n + 1..].iter().map(|v| v * v).sum::<f64>().sqrt();
    (r, s)
}

fn stream_tensor(x: &[f64], n: usize, psi: f64) -> Vec<Vec<f64>> {
    let d = x.len();
    let (r, s) = radii(x, n);
    let mut t = vec![vec![0.0; d]; d];
    for i in 0..=n {
        for j in n + 1..d {
            let v = -(x[i] * x[j] / (r * s)) * psi;
            t[i][j] = v;
            t[j][i] = -v;
        }
    }
    t
}

/// Compares the bridge velocity with the reduced velocity at explicit points
/// of `R^d`.
pub fn cartesian_bridge_at(
    cfg: &SymmetryConfig,
    particles: &ParticleSet,
    params: &KernelParams,
    points: &[Vec<f64>],
) -> Result<BridgeReport> {
    if cfg.d() != 4 {
        return Err(Error::DimensionUnsupported(cfg.d()));
    }
    let d = cfg.d() as usize;
    let n = cfg.n() as usize;
    let kept: Vec<&Vec<f64>> = points
        .iter()
        .filter(|x| {
            let (r, s) = radii(x, n);
            r > 0.0 && s > 0.0
        })
        .collect();
    let excluded = points.len() - kept.len();

    // psi at the fourth-order difference stencil of every kept point
    let mut stencil = Vec::with_capacity(kept.len() * d * 4);
    for x in &kept {
        for j in 0..d {
            for (o, _) in OFFSETS {
                let mut y = (*x).clone();
                y[j] += o * STEP;
                let (r, s) = radii(&y, n);
                stencil.push(QuadrantPoint { r, s });
            }
        }
    }
    let psi = eval_psi_many(particles, &stencil, cfg, params)?;
    let centres: Vec<QuadrantPoint> = kept
        .iter()
        .map(|x| {
            let (r, s) = radii(x, n);
            QuadrantPoint { r, s }
        })
        .collect();
    let reduced = velocity_direct(particles, &centres, cfg, params)?;

    let mut antisymmetric = true;
    let mut max_dev: f64 = 0.0;
    let mut max_u: f64 = 0.0;
    for (k, x) in kept.iter().enumerate() {
        let mut u = vec![0.0; d];
        for j in 0..d {
            for (o_idx, (o, c)) in OFFSETS.iter().enumerate() {
                let mut y = (*x).clone();
                y[j] += o * STEP;
                let t = stream_tensor(&y, n, psi[(k * d + j) * 4 + o_idx]);
                for i in 0..d {
                    antisymmetric &= t[i][j] == -t[j][i];
                    u[i] += c * t[i][j] / (12.0 * STEP);
                }
            }
        }
        let (r, s) = (centres[k].r, centres[k].s);
        let ur: f64 = (0..=n).map(|i| x[i] / r * u[i]).sum();
        let us: f64 = (n + 1..d).map(|i| x[i] / s * u[i]).sum();
        let (wr, ws) = reduced[k];
        max_dev = max_dev.max((ur - wr).hypot(us - ws));
        max_u = max_u.max(wr.hypot(ws));
    }
    Ok(BridgeReport {
        evaluated: kept.len(),
        excluded,
        max_rel_deviation: if max_u > 0.0 {
            max_dev / max_u
        } else {
            max_dev
        },
        antisymmetric,
    })
}

/// Random points whose radii fall in `[lo, hi]`, with uniform angles.
pub fn random_bridge_points(
    cfg: &SymmetryConfig,
    count: usize,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.n() as usize;
    let d = cfg.d() as usize;
    (0..count)
        .map(|_| {
            let r: f64 = rng.random_range(lo..hi);
            let s: f64 = rng.random_range(lo..hi);
            let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let b: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let mut x = vec![0.0; d];
            x[0] = r * a.cos();
            x[n] = r * a.sin();
            x[n + 1] = s * b.cos();
            x[d - 1] = s * b.sin();
            x
        })
        .collect()
}

/// Bridge check at `samples` random points around the particle cloud.
pub fn cartesian_bridge_check(
    cfg: &SymmetryConfig,
    particles: &ParticleSet,
    params: &KernelParams,
    samples: usize,
    seed: u64,
) -> Result<BridgeReport> {
    if cfg.d() != 4 {
        return Err(Error::DimensionUnsupported(cfg.d()));
    }
    let lo = 0.5 * particles.min_coordinate();
    let hi = particles
        .r
        .iter()
        .chain(&particles.s)
        .copied()
        .fold(0.0, f64::max)
        * 1.5;
    let pts = random_bridge_points(cfg, samples, lo, hi, seed);
    cartesian_bridge_at(cfg, particles, params, &pts)
}
