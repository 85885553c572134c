use super::grid::{Grid, GridField};
use crate::error::{Error, Result};
use crate::model::ParticleSet;

/// Bilinear (cloud-in-cell) spreading of the strengths onto the nodes,
/// divided by the cell area so that `sum w h_r h_s = sum nu`.
pub fn deposit(particles: &ParticleSet, grid: &Grid) -> Result<GridField> {
    let mut w = GridField::zeros(*grid, "w");
    let inv_area = 1.0 / (grid.hr * grid.hs);
    for k in 0..particles.len() {
        let (r, s) = (particles.r[k], particles.s[k]);
        if !grid.contains(r, s) {
            return Err(Error::ParticleOutsideGrid { index: k, r, s });
        }
        let (i, j, fx, fy) = grid.locate(r, s);
        let v = particles.nu[k] * inv_area;
        let h = grid.height();
        let base = i * h + j;
        w.values[base] += v * (1.0 - fx) * (1.0 - fy);
        w.values[base + 1] += v * (1.0 - fx) * fy;
        w.values[base + h] += v * fx * (1.0 - fy);
        w.values[base + h + 1] += v * fx * fy;
    }
    Ok(w)
}
