use super::grid::{Grid, GridField};
use crate::model::SymmetryConfig;

/// Coefficients of the one-dimensional part `d^2 + (k/x) d - k/x^2` at the
/// interior nodes `x_i = i h`, `i = 1..=count`.
///
/// The central difference of `(k/x) d` has a truncation error of order
/// `h^2 / x`, which near the axis degrades `psi / x` and hence the velocity.
/// Scaling `k/x` by `2 i^2 / (2 i^2 + 1)` (in both lower-order terms) makes
/// the stencil exact on `x` and `x^3`, the leading terms of a field that
/// vanishes on the axis, and changes nothing at order `h^2` away from it.
#[derive(Debug, Clone)]
pub(crate) struct Stencil1d {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub diag: Vec<f64>,
}

impl Stencil1d {
    pub fn new(k: u32, h: f64, count: usize) -> Self {
        let k = k as f64;
        let inv2 = 1.0 / (h * h);
        let mut lo = Vec::with_capacity(count);
        let mut hi = Vec::with_capacity(count);
        let mut diag = Vec::with_capacity(count);
        for i in 1..=count {
            let x = i as f64 * h;
            let i2 = (i * i) as f64;
            let alpha = k / x * (2.0 * i2 / (2.0 * i2 + 1.0));
            let adv = alpha / (2.0 * h);
            lo.push(inv2 - adv);
            hi.push(inv2 + adv);
            diag.push(-2.0 * inv2 - alpha / x);
        }
        Stencil1d { lo, hi, diag }
    }
}

pub(crate) struct Stencil2d {
    pub r: Stencil1d,
    pub s: Stencil1d,
}

impl Stencil2d {
    pub fn new(grid: &Grid, cfg: &SymmetryConfig) -> Self {
        Stencil2d {
            r: Stencil1d::new(cfg.n(), grid.hr, grid.nr),
            s: Stencil1d::new(cfg.m(), grid.hs, grid.ns),
        }
    }

    /// `(L psi)` at interior node `(i, j)`; axis neighbours count as zero,
    /// far-edge neighbours use the stored values.
    #[inline]
    pub fn apply_at(&self, psi: &GridField, i: usize, j: usize) -> f64 {
        let a = i - 1;
        let b = j - 1;
        let left = if i == 1 { 0.0 } else { psi.at(i - 1, j) };
        let down = if j == 1 { 0.0 } else { psi.at(i, j - 1) };
        self.r.lo[a] * left
            + self.r.hi[a] * psi.at(i + 1, j)
            + self.s.lo[b] * down
            + self.s.hi[b] * psi.at(i, j + 1)
            + (self.r.diag[a] + self.s.diag[b]) * psi.at(i, j)
    }
}

/// Five-point second-order `L psi` at interior nodes; boundary nodes of the
/// result are zero.
pub fn apply_l(psi: &GridField, cfg: &SymmetryConfig) -> GridField {
    let g = psi.grid;
    let st = Stencil2d::new(&g, cfg);
    let mut out = GridField::zeros(g, "L");
    for i in 1..=g.nr {
        for j in 1..=g.ns {
            out.set(i, j, st.apply_at(psi, i, j));
        }
    }
    out
}

/// `max |L psi - w|` over interior nodes.
pub fn residual_norm(psi: &GridField, w: &GridField, cfg: &SymmetryConfig) -> f64 {
    let g = psi.grid;
    let st = Stencil2d::new(&g, cfg);
    let mut m: f64 = 0.0;
    for i in 1..=g.nr {
        for j in 1..=g.ns {
            m = m.max((st.apply_at(psi, i, j) - w.at(i, j)).abs());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::manufactured::{manufactured, manufactured_l};

    #[test]
    fn zero_and_linearity() {
        let cfg = SymmetryConfig::new(1, 2).unwrap();
        let g = Grid::new(3.0, 3.0, 20, 24).unwrap();
        let z = GridField::zeros(g, "z");
        assert_eq!(apply_l(&z, &cfg).max_abs(), 0.0);
        let a = GridField::from_fn(g, "a", |r, s| (r * s).sin());
        let b = GridField::from_fn(g, "b", |r, s| r * r - s);
        let mut c = a.clone();
        for (v, bv) in c.values.iter_mut().zip(&b.values) {
            *v = 2.0 * *v + 0.5 * bv;
        }
        let la = apply_l(&a, &cfg);
        let lb = apply_l(&b, &cfg);
        let lc = apply_l(&c, &cfg);
        for k in 0..lc.values.len() {
            let want = 2.0 * la.values[k] + 0.5 * lb.values[k];
            assert!((lc.values[k] - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn second_order_on_manufactured() {
        // the (k/x) d_x term has an O(h^2 / x) truncation error, so pointwise
        // second order holds a fixed distance away from the axes
        let cfg = SymmetryConfig::new(1, 1).unwrap();
        let err = |n: usize| {
            let g = Grid::new(4.0, 4.0, n, n).unwrap();
            let psi = GridField::from_fn(g, "psi", manufactured);
            let l = apply_l(&psi, &cfg);
            let mut e: f64 = 0.0;
            for i in 1..=g.nr {
                for j in 1..=g.ns {
                    if g.r(i) >= 0.5 && g.s(j) >= 0.5 {
                        e = e.max((l.at(i, j) - manufactured_l(1, 1, g.r(i), g.s(j))).abs());
                    }
                }
            }
            e
        };
        let e1 = err(31);
        let e2 = err(63);
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
    }

    #[test]
    fn single_node_perturbation() {
        let cfg = SymmetryConfig::new(1, 1).unwrap();
        let g = Grid::new(2.0, 2.0, 19, 19).unwrap();
        let w = GridField::zeros(g, "w");
        let mut psi = GridField::zeros(g, "psi");
        let eps = 1e-6;
        psi.set(10, 10, eps);
        let res = residual_norm(&psi, &w, &cfg);
        let h = g.hr;
        // the centre coefficient dominates: 4/h^2 plus lower-order terms
        assert!(
            res >= 4.0 * eps / (h * h) && res <= 5.0 * eps / (h * h),
            "{res}"
        );
    }
}
