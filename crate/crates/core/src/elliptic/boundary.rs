use std::collections::BTreeMap;

use super::grid::Grid;
use crate::error::Result;
use crate::kernel::{eval_psi_many, KernelParams};
use crate::model::{ParticleSet, QuadrantPoint, SymmetryConfig};

/// Dirichlet data on the two far edges: `at_r_max[j]` on `r = R_max` and
/// `at_s_max[i]` on `s = S_max`. The axis entries are forced to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FarBoundary {
    pub at_r_max: Vec<f64>,
    pub at_s_max: Vec<f64>,
}

impl FarBoundary {
    pub fn zero(grid: &Grid) -> Self {
        FarBoundary {
            at_r_max: vec![0.0; grid.height()],
            at_s_max: vec![0.0; grid.width()],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut b = Self::zero(grid);
        for j in 1..grid.height() {
            b.at_r_max[j] = f(grid.r_max, grid.s(j));
        }
        for i in 1..grid.width() {
            b.at_s_max[i] = f(grid.r(i), grid.s_max);
        }
        b
    }

    /// Far-edge nodes in the order used by [`from_values`](Self::from_values).
    fn nodes(grid: &Grid) -> Vec<QuadrantPoint> {
        let mut pts = Vec::with_capacity(grid.width() + grid.height());
        for j in 1..grid.height() {
            pts.push(QuadrantPoint {
                r: grid.r_max,
                s: grid.s(j),
            });
        }
        for i in 1..grid.nr + 1 {
            pts.push(QuadrantPoint {
                r: grid.r(i),
                s: grid.s_max,
            });
        }
        pts
    }

    fn from_values(grid: &Grid, vals: &[f64]) -> Self {
        let mut b = Self::zero(grid);
        let h = grid.height();
        b.at_r_max[1..h].copy_from_slice(&vals[..h - 1]);
        b.at_s_max[grid.nr + 1] = b.at_r_max[grid.ns + 1];
        for i in 1..grid.nr + 1 {
            b.at_s_max[i] = vals[h - 1 + i - 1];
        }
        b
    }

    /// Kernel stream function of the particles at the far-edge nodes.
    ///
    /// With `bin > 0` particles are first aggregated per `bin x bin` cell
    /// (summed strength at the `|nu|`-weighted centroid). The far edges sit
    /// several patch diameters away, where this monopole-per-bin error is
    /// far below the discretization error.
    pub fn from_particles(
        grid: &Grid,
        particles: &ParticleSet,
        cfg: &SymmetryConfig,
        params: &KernelParams,
        bin: f64,
    ) -> Result<Self> {
        let sources = if bin > 0.0 {
            cluster(particles, cfg, bin)
        } else {
            particles.clone()
        };
        let vals = eval_psi_many(&sources, &Self::nodes(grid), cfg, params)?;
        Ok(Self::from_values(grid, &vals))
    }

    pub fn max_abs(&self) -> f64 {
        self.at_r_max
            .iter()
            .chain(&self.at_s_max)
            .fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// Aggregates particles per square bin.
pub(crate) fn cluster(particles: &ParticleSet, cfg: &SymmetryConfig, bin: f64) -> ParticleSet {
    // (weight, weighted r, weighted s, strength)
    let mut bins: BTreeMap<(i64, i64), (f64, f64, f64, f64)> = BTreeMap::new();
    for k in 0..particles.len() {
        let key = (
            (particles.r[k] / bin).floor() as i64,
            (particles.s[k] / bin).floor() as i64,
        );
        let a = particles.nu[k].abs();
        let e = bins.entry(key).or_insert((0.0, 0.0, 0.0, 0.0));
        e.0 += a;
        e.1 += a * particles.r[k];
        e.2 += a * particles.s[k];
        e.3 += particles.nu[k];
    }
    let mut pts = Vec::with_capacity(bins.len());
    let mut nu = Vec::with_capacity(bins.len());
    for (_, (a, ar, as_, v)) in bins {
        if a == 0.0 {
            continue;
        }
        pts.push(QuadrantPoint {
            r: ar / a,
            s: as_ / a,
        });
        nu.push(v);
    }
    let q: Vec<f64> = pts
        .iter()
        .zip(&nu)
        .map(|(p, v)| v / cfg.weight(p.r, p.s))
        .collect();
    let mut out = ParticleSet::from_parts(cfg, &pts, &q, &vec![1.0; pts.len()], bin);
    // keep the summed strengths bit for bit
    out.nu = nu;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{discretize, validate_config, PatchSpec};

    #[test]
    fn clustered_matches_exact() {
        let cfg = SymmetryConfig::new(1, 1).unwrap();
        let v = validate_config(cfg, &PatchSpec::rectangle(1.0, 2.0, 1.0, 2.0, 1.0), None).unwrap();
        let p = discretize(&v, 1.0 / 16.0).unwrap();
        let g = Grid::new(10.0, 10.0, 15, 15).unwrap();
        let k = KernelParams::default();
        let exact = FarBoundary::from_particles(&g, &p, &cfg, &k, 0.0).unwrap();
        let fast = FarBoundary::from_particles(&g, &p, &cfg, &k, 0.125).unwrap();
        let scale = exact.max_abs();
        assert!(scale > 0.0);
        for (a, b) in exact
            .at_r_max
            .iter()
            .zip(&fast.at_r_max)
            .chain(exact.at_s_max.iter().zip(&fast.at_s_max))
        {
            assert!((a - b).abs() <= 2e-3 * scale, "{a} {b}");
        }
        assert_eq!(exact.at_r_max[0], 0.0);
        assert_eq!(exact.at_s_max[0], 0.0);
        assert_eq!(exact.at_r_max[g.ns + 1], exact.at_s_max[g.nr + 1]);
    }

    #[test]
    fn cluster_preserves_total_strength() {
        let cfg = SymmetryConfig::new(2, 1).unwrap();
        let v =
            validate_config(cfg, &PatchSpec::rectangle(1.0, 2.0, 1.0, 2.0, -1.5), None).unwrap();
        let p = discretize(&v, 0.05).unwrap();
        let c = cluster(&p, &cfg, 0.25);
        assert!(c.len() < p.len());
        assert!((c.total_strength() - p.total_strength()).abs() < 1e-12);
    }
}
