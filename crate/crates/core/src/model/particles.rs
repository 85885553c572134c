use serde::{Deserialize, Serialize};

use super::patch::ValidatedConfig;
use super::symmetry::{QuadrantPoint, SymmetryConfig};
use crate::error::{Error, Result};

/// Lagrangian particles in structure-of-arrays layout.
///
/// `nu` is the cell integral of `w` and is conserved; `q` is the value of
/// `w / (r^n s^m)` and is transported unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSet {
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub nu: Vec<f64>,
    pub q: Vec<f64>,
    pub a0: Vec<f64>,
    /// Lattice spacing used at construction.
    pub h: f64,
}

impl ParticleSet {
    /// Builds a set from explicit positions and tracer values, with
    /// `nu = q r^n s^m a0`.
    pub fn from_parts(
        cfg: &SymmetryConfig,
        points: &[QuadrantPoint],
        q: &[f64],
        a0: &[f64],
        h: f64,
    ) -> Self {
        assert_eq!(points.len(), q.len());
        assert_eq!(points.len(), a0.len());
        let nu = points
            .iter()
            .zip(q.iter().zip(a0))
            .map(|(p, (qi, ai))| qi * cfg.weight(p.r, p.s) * ai)
            .collect();
        ParticleSet {
            r: points.iter().map(|p| p.r).collect(),
            s: points.iter().map(|p| p.s).collect(),
            nu,
            q: q.to_vec(),
            a0: a0.to_vec(),
            h,
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn point(&self, i: usize) -> QuadrantPoint {
        QuadrantPoint {
            r: self.r[i],
            s: self.s[i],
        }
    }

    pub fn total_strength(&self) -> f64 {
        self.nu.iter().sum()
    }

    /// Concatenation, used by linearity checks.
    pub fn merged(&self, other: &ParticleSet) -> ParticleSet {
        let mut out = self.clone();
        out.r.extend_from_slice(&other.r);
        out.s.extend_from_slice(&other.s);
        out.nu.extend_from_slice(&other.nu);
        out.q.extend_from_slice(&other.q);
        out.a0.extend_from_slice(&other.a0);
        out
    }

    /// Flips the sign of every strength and tracer.
    pub fn negated(&self) -> ParticleSet {
        let mut out = self.clone();
        out.nu.iter_mut().for_each(|v| *v = -*v);
        out.q.iter_mut().for_each(|v| *v = -*v);
        out
    }

    /// Multiplies strengths and tracers by `factor`.
    pub fn scaled(&self, factor: f64) -> ParticleSet {
        let mut out = self.clone();
        out.nu.iter_mut().for_each(|v| *v *= factor);
        out.q.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn min_coordinate(&self) -> f64 {
        self.r
            .iter()
            .chain(&self.s)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Midpoint-lattice discretization: one particle per `h x h` cell (cells
/// aligned with the origin) whose centre lies in the patch.
pub fn discretize(v: &ValidatedConfig, h: f64) -> Result<ParticleSet> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidPatch(format!(
            "spacing must be positive (got {h})"
        )));
    }
    let (r0, r1, s0, s1) = v.patch.bounds();
    let i0 = (r0 / h).floor().max(0.0) as i64;
    let i1 = (r1 / h).ceil() as i64;
    let j0 = (s0 / h).floor().max(0.0) as i64;
    let j1 = (s1 / h).ceil() as i64;
    let lam = v.patch.amplitude;
    let area = h * h;
    let mut pts = Vec::new();
    for i in i0..=i1 {
        let r = (i as f64 + 0.5) * h;
        for j in j0..=j1 {
            let s = (j as f64 + 0.5) * h;
            if v.patch.contains(r, s) {
                pts.push(QuadrantPoint { r, s });
            }
        }
    }
    if pts.is_empty() {
        return Err(Error::EmptyPatch);
    }
    let n = pts.len();
    Ok(ParticleSet::from_parts(
        &v.cfg,
        &pts,
        &vec![lam; n],
        &vec![area; n],
        h,
    ))
}
