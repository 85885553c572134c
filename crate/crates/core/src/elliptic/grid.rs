use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform node grid. Nodes `i = 0..=nr+1`, `j = 0..=ns+1` sit at
/// `(i h_r, j h_s)`; rows `i = 0` and `j = 0` are the axes, rows `nr+1` and
/// `ns+1` the far edges, everything else is interior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub r_max: f64,
    pub s_max: f64,
    pub nr: usize,
    pub ns: usize,
    pub hr: f64,
    pub hs: f64,
}

impl Grid {
    pub fn new(r_max: f64, s_max: f64, nr: usize, ns: usize) -> Result<Self> {
        if !(r_max > 0.0 && s_max > 0.0 && r_max.is_finite() && s_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("extent {r_max} x {s_max}")));
        }
        if nr < 8 || ns < 8 {
            return Err(Error::InvalidGrid(format!(
                "need at least 8 interior nodes per direction (got {nr} x {ns})"
            )));
        }
        Ok(Grid {
            r_max,
            s_max,
            nr,
            ns,
            hr: r_max / (nr + 1) as f64,
            hs: s_max / (ns + 1) as f64,
        })
    }

    /// Nodes along `r`, including both boundary rows.
    pub fn width(&self) -> usize {
        self.nr + 2
    }

    /// Nodes along `s`, including both boundary rows.
    pub fn height(&self) -> usize {
        self.ns + 2
    }

    pub fn len(&self) -> usize {
        self.width() * self.height()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.height() + j
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        if i == self.nr + 1 {
            self.r_max
        } else {
            i as f64 * self.hr
        }
    }

    #[inline]
    pub fn s(&self, j: usize) -> f64 {
        if j == self.ns + 1 {
            self.s_max
        } else {
            j as f64 * self.hs
        }
    }

    pub fn contains(&self, r: f64, s: f64) -> bool {
        (0.0..=self.r_max).contains(&r) && (0.0..=self.s_max).contains(&s)
    }

    /// Lower-left cell index and local coordinates in `[0, 1]`.
    pub(crate) fn locate(&self, r: f64, s: f64) -> (usize, usize, f64, f64) {
        let (i, fx) = cell(r / self.hr, self.nr);
        let (j, fy) = cell(s / self.hs, self.ns);
        (i, j, fx, fy)
    }
}

/// Cell index and offset, snapping coordinates within round-off of a node
/// so that sampling at nodes is exact.
fn cell(x: f64, last: usize) -> (usize, f64) {
    let near = x.round();
    let x = if (x - near).abs() < 1e-9 { near } else { x };
    let i = (x.floor().max(0.0) as usize).min(last);
    (i, (x - i as f64).clamp(0.0, 1.0))
}

/// Values at every node of a [`Grid`], row-major in `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub name: String,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(grid: Grid, name: &str) -> Self {
        GridField {
            grid,
            name: name.to_string(),
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f(r, s)` at every node.
    pub fn from_fn(grid: Grid, name: &str, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(grid, name);
        for i in 0..grid.width() {
            for j in 0..grid.height() {
                out.values[grid.idx(i, j)] = f(grid.r(i), grid.s(j));
            }
        }
        out
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Largest magnitude over interior nodes only.
    pub fn interior_max_abs(&self) -> f64 {
        let g = self.grid;
        let mut m: f64 = 0.0;
        for i in 1..=g.nr {
            for j in 1..=g.ns {
                m = m.max(self.at(i, j).abs());
            }
        }
        m
    }

    /// Bilinear interpolation; exact at nodes.
    pub fn sample(&self, r: f64, s: f64) -> Result<f64> {
        if !self.grid.contains(r, s) {
            return Err(Error::OutsideGrid { r, s });
        }
        let (i, j, fx, fy) = self.grid.locate(r, s);
        Ok(
            (1.0 - fx) * ((1.0 - fy) * self.at(i, j) + fy * self.at(i, j + 1))
                + fx * ((1.0 - fy) * self.at(i + 1, j) + fy * self.at(i + 1, j + 1)),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction() {
        let g = Grid::new(10.0, 5.0, 9, 9).unwrap();
        assert_eq!(g.hr, 1.0);
        assert_eq!(g.r(10), 10.0);
        assert_eq!(g.s(10), 5.0);
        assert!(Grid::new(1.0, 1.0, 4, 10).is_err());
        assert!(Grid::new(-1.0, 1.0, 10, 10).is_err());
    }

    #[test]
    fn sampling() {
        let g = Grid::new(1.0, 1.0, 9, 9).unwrap();
        let f = GridField::from_fn(g, "f", |r, s| 1.0 + 2.0 * r - s + 3.0 * r * s);
        // bilinear functions are reproduced exactly
        for (r, s) in [(0.0, 0.0), (0.35, 0.72), (1.0, 1.0), (0.1, 0.9)] {
            let want = 1.0 + 2.0 * r - s + 3.0 * r * s;
            assert!((f.sample(r, s).unwrap() - want).abs() < 1e-13);
        }
        assert!(matches!(f.sample(1.5, 0.1), Err(Error::OutsideGrid { .. })));
        assert_eq!(f.sample(0.3, 0.4).unwrap(), f.at(3, 4));
    }
}
