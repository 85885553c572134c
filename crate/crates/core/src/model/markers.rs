use serde::{Deserialize, Serialize};

use super::patch::{PatchSpec, Shape};
use super::symmetry::SymmetryConfig;
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// A closed polyline; the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub r: Vec<f64>,
    pub s: Vec<f64>,
}

impl Polyline {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Signed (unweighted) area, positive for counter-clockwise order in
    /// the `(r, s)` plane.
    pub fn signed_area(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let k = (i + 1) % n;
                self.r[i] * self.s[k] - self.r[k] * self.s[i]
            })
            .sum::<f64>()
            * 0.5
    }

    fn segment(&self, i: usize) -> ((f64, f64), (f64, f64)) {
        let k = (i + 1) % self.len();
        ((self.r[i], self.s[i]), (self.r[k], self.s[k]))
    }

    /// Whether no two non-adjacent edges meet. Edges are bucketed on a
    /// uniform grid so the cost stays near linear for evenly spaced vertices.
    pub fn is_simple(&self) -> bool {
        let n = self.len();
        if n < 4 {
            return true;
        }
        let adjacent = |i: usize, j: usize| i == j || (i + 1) % n == j || (j + 1) % n == i;
        let (mut lo_r, mut hi_r, mut lo_s, mut hi_s) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for i in 0..n {
            lo_r = lo_r.min(self.r[i]);
            hi_r = hi_r.max(self.r[i]);
            lo_s = lo_s.min(self.s[i]);
            hi_s = hi_s.max(self.s[i]);
        }
        let cell = (self.max_segment()).max(1e-300);
        let nx = (((hi_r - lo_r) / cell) as usize + 1).min(4096);
        let ny = (((hi_s - lo_s) / cell) as usize + 1).min(4096);
        let bin = |v: f64, lo: f64, count: usize| (((v - lo) / cell) as usize).min(count - 1);
        let mut buckets: std::collections::HashMap<(usize, usize), Vec<usize>> =
            std::collections::HashMap::new();
        for i in 0..n {
            let (a, b) = self.segment(i);
            let (x0, x1) = (bin(a.0.min(b.0), lo_r, nx), bin(a.0.max(b.0), lo_r, nx));
            let (y0, y1) = (bin(a.1.min(b.1), lo_s, ny), bin(a.1.max(b.1), lo_s, ny));
            for x in x0..=x1 {
                for y in y0..=y1 {
                    buckets.entry((x, y)).or_default().push(i);
                }
            }
        }
        for edges in buckets.values() {
            for (k, &i) in edges.iter().enumerate() {
                let (a, b) = self.segment(i);
                for &j in &edges[k + 1..] {
                    if adjacent(i, j) {
                        continue;
                    }
                    let (c, d) = self.segment(j);
                    if segments_meet(a, b, c, d) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn max_segment(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.segment(i);
                (b.0 - a.0).hypot(b.1 - a.1)
            })
            .fold(0.0, f64::max)
    }
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_meet(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Boundary markers of every patch component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMarkers {
    pub components: Vec<Polyline>,
    /// Target spacing at construction.
    pub spacing: f64,
}

impl BoundaryMarkers {
    /// Counter-clockwise markers with spacing close to `spacing`.
    pub fn from_patch(patch: &PatchSpec, spacing: f64) -> Self {
        let components = patch
            .shapes
            .iter()
            .map(|sh| match *sh {
                Shape::Rectangle { r0, r1, s0, s1 } => {
                    let mut pl = Polyline {
                        r: Vec::new(),
                        s: Vec::new(),
                    };
                    let corners = [(r0, s0), (r1, s0), (r1, s1), (r0, s1)];
                    for k in 0..4 {
                        let (a, b) = (corners[k], corners[(k + 1) % 4]);
                        let len = (b.0 - a.0).hypot(b.1 - a.1);
                        let pieces = (len / spacing).ceil().max(1.0) as usize;
                        for p in 0..pieces {
                            let t = p as f64 / pieces as f64;
                            pl.r.push(a.0 + t * (b.0 - a.0));
                            pl.s.push(a.1 + t * (b.1 - a.1));
                        }
                    }
                    pl
                }
                Shape::Disk { rc, sc, radius } => {
                    let pieces =
                        ((std::f64::consts::TAU * radius / spacing).ceil() as usize).max(8);
                    let (r, s) = (0..pieces)
                        .map(|p| {
                            let th = std::f64::consts::TAU * p as f64 / pieces as f64;
                            (rc + radius * th.cos(), sc + radius * th.sin())
                        })
                        .unzip();
                    Polyline { r, s }
                }
            })
            .collect();
        BoundaryMarkers {
            components,
            spacing,
        }
    }

    pub fn is_simple(&self) -> bool {
        self.components.iter().all(Polyline::is_simple)
    }

    pub fn total_len(&self) -> usize {
        self.components.iter().map(Polyline::len).sum()
    }

    /// Flattened coordinates, component by component.
    pub fn flatten(&self) -> (Vec<f64>, Vec<f64>) {
        let mut r = Vec::with_capacity(self.total_len());
        let mut s = Vec::with_capacity(self.total_len());
        for c in &self.components {
            r.extend_from_slice(&c.r);
            s.extend_from_slice(&c.s);
        }
        (r, s)
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn set_flat(&mut self, r: &[f64], s: &[f64]) {
        let mut off = 0;
        for c in &mut self.components {
            let n = c.len();
            c.r.copy_from_slice(&r[off..off + n]);
            c.s.copy_from_slice(&s[off..off + n]);
            off += n;
        }
    }

    /// Splits every segment longer than `factor * spacing` into pieces of
    /// about `spacing`, placing the new vertices on the centripetal
    /// Catmull-Rom curve through the neighbouring vertices. Returns the number
    /// of inserted vertices.
    pub fn redistribute(&mut self, factor: f64) -> usize {
        let limit = factor * self.spacing;
        let mut added = 0;
        for c in &mut self.components {
            if c.max_segment() <= limit {
                continue;
            }
            let n = c.len();
            let p = |i: usize| (c.r[i % n], c.s[i % n]);
            let mut r = Vec::with_capacity(n + n / 4);
            let mut s = Vec::with_capacity(n + n / 4);
            for i in 0..n {
                let (a, b) = (p(i), p(i + 1));
                r.push(a.0);
                s.push(a.1);
                let len = (b.0 - a.0).hypot(b.1 - a.1);
                if len > limit {
                    let pieces = (len / self.spacing).ceil() as usize;
                    for k in 1..pieces {
                        let (x, y) =
                            catmull_rom(p(i + n - 1), a, b, p(i + 2), k as f64 / pieces as f64);
                        r.push(x);
                        s.push(y);
                        added += 1;
                    }
                }
            }
            c.r = r;
            c.s = s;
        }
        added
    }
}

/// Point at fraction `u` of the way from `p1` to `p2` on the centripetal
/// Catmull-Rom spline; falls back to the chord for repeated points.
fn catmull_rom(
    p0: (f64, f64),
    p1: (f64, f64),
    p2: (f64, f64),
    p3: (f64, f64),
    u: f64,
) -> (f64, f64) {
    let knot = |a: (f64, f64), b: (f64, f64)| (b.0 - a.0).hypot(b.1 - a.1).sqrt();
    let (d0, d1, d2) = (knot(p0, p1), knot(p1, p2), knot(p2, p3));
    let lerp = |a: (f64, f64), b: (f64, f64), ta: f64, tb: f64, t: f64| {
        let w = (t - ta) / (tb - ta);
        (a.0 + w * (b.0 - a.0), a.1 + w * (b.1 - a.1))
    };
    if d0 == 0.0 || d1 == 0.0 || d2 == 0.0 {
        return lerp(p1, p2, 0.0, 1.0, u);
    }
    let (t0, t1) = (0.0, d0);
    let (t2, t3) = (t1 + d1, t1 + d1 + d2);
    let t = t1 + u * d1;
    let a1 = lerp(p0, p1, t0, t1, t);
    let a2 = lerp(p1, p2, t1, t2, t);
    let a3 = lerp(p2, p3, t2, t3, t);
    let b1 = lerp(a1, a2, t0, t2, t);
    let b2 = lerp(a2, a3, t1, t3, t);
    lerp(b1, b2, t1, t2, t)
}

/// `iint_Omega r^n s^m dr ds` from the boundary integral
/// `-oint r^n s^(m+1) / (m+1) dr`, exact per straight edge.
pub fn weighted_area(markers: &BoundaryMarkers, cfg: &SymmetryConfig) -> Result<f64> {
    let mut total = 0.0;
    for c in &markers.components {
        if c.len() < 3 {
            return Err(Error::DegeneratePolygon(format!("{} vertices", c.len())));
        }
        if !c.is_simple() {
            return Err(Error::DegeneratePolygon("self-intersection".into()));
        }
        total += polygon_weighted_area(c, cfg);
    }
    Ok(total)
}

/// The same boundary integral without the simplicity check. For a curve
/// that crosses itself this counts regions with their winding number.
pub fn weighted_area_winding(markers: &BoundaryMarkers, cfg: &SymmetryConfig) -> Result<f64> {
    let mut total = 0.0;
    for c in &markers.components {
        if c.len() < 3 {
            return Err(Error::DegeneratePolygon(format!("{} vertices", c.len())));
        }
        total += polygon_weighted_area(c, cfg);
    }
    Ok(total)
}

pub(crate) fn polygon_weighted_area(c: &Polyline, cfg: &SymmetryConfig) -> f64 {
    let (n, m) = (cfg.n() as i32, cfg.m() as i32);
    // the integrand along an edge is a polynomial of degree n+m+1
    let g = GaussLegendre::new((cfg.n() + cfg.m() + 3).div_ceil(2) as usize);
    let len = c.len();
    let mut acc = 0.0;
    for i in 0..len {
        let k = (i + 1) % len;
        let (ra, sa, rb, sb) = (c.r[i], c.s[i], c.r[k], c.s[k]);
        let dr = rb - ra;
        if dr == 0.0 {
            continue;
        }
        let edge = g.integrate(0.0, 1.0, |t| {
            let r = ra + t * dr;
            let s = sa + t * (sb - sa);
            r.powi(n) * s.powi(m + 1)
        });
        acc -= edge * dr;
    }
    acc / (m + 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_simple(p: &Polyline) -> bool {
        let n = p.len();
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = p.segment(i);
                let (c, d) = p.segment(j);
                if segments_meet(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    proptest! {
        #[test]
        fn bucketed_simplicity_matches_brute_force(pts in proptest::collection::vec((0.0f64..3.0, 0.0f64..3.0), 4..40)) {
            let p = Polyline { r: pts.iter().map(|x| x.0).collect(), s: pts.iter().map(|x| x.1).collect() };
            prop_assert_eq!(p.is_simple(), brute_simple(&p));
        }
    }

    fn rect(r0: f64, r1: f64, s0: f64, s1: f64) -> BoundaryMarkers {
        BoundaryMarkers::from_patch(&PatchSpec::rectangle(r0, r1, s0, s1, 1.0), 0.1)
    }

    #[test]
    fn rectangle_oracles() {
        let c = SymmetryConfig::new(1, 1).unwrap();
        let a = weighted_area(&rect(1.0, 2.0, 1.0, 2.0), &c).unwrap();
        assert!((a - 2.25).abs() < 1e-13);
        let a = weighted_area(&rect(0.0, 1.0, 0.0, 1.0), &c).unwrap();
        assert!((a - 0.25).abs() < 1e-14);
        let c = SymmetryConfig::new(2, 3).unwrap();
        // (8-1)/3 * (16-1)/4
        let a = weighted_area(&rect(1.0, 2.0, 1.0, 2.0), &c).unwrap();
        assert!((a - 7.0 / 3.0 * 15.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_area_polygon() {
        let c = SymmetryConfig::new(1, 1).unwrap();
        let m = BoundaryMarkers {
            components: vec![Polyline {
                r: vec![1.0, 2.0, 3.0],
                s: vec![1.0, 2.0, 3.0],
            }],
            spacing: 1.0,
        };
        assert!(weighted_area(&m, &c).unwrap().abs() < 1e-14);
    }

    #[test]
    fn degenerate_inputs() {
        let c = SymmetryConfig::new(1, 1).unwrap();
        let two = BoundaryMarkers {
            components: vec![Polyline {
                r: vec![1.0, 2.0],
                s: vec![1.0, 2.0],
            }],
            spacing: 1.0,
        };
        assert!(weighted_area(&two, &c).is_err());
        let bowtie = BoundaryMarkers {
            components: vec![Polyline {
                r: vec![1.0, 2.0, 1.0, 2.0],
                s: vec![1.0, 2.0, 2.0, 1.0],
            }],
            spacing: 1.0,
        };
        assert!(matches!(
            weighted_area(&bowtie, &c),
            Err(Error::DegeneratePolygon(_))
        ));
    }

    #[test]
    fn orientation_and_disk() {
        let patch = PatchSpec {
            shapes: vec![Shape::Disk {
                rc: 2.0,
                sc: 3.0,
                radius: 0.5,
            }],
            amplitude: 1.0,
            clearance: 0.1,
        };
        let m = BoundaryMarkers::from_patch(&patch, 0.01);
        assert!(m.components[0].signed_area() > 0.0);
        assert!(rect(1.0, 2.0, 1.0, 2.0).components[0].signed_area() > 0.0);
        let c = SymmetryConfig::new(1, 1).unwrap();
        let exact = 2.0 * 3.0 * std::f64::consts::PI * 0.25;
        let a = weighted_area(&m, &c).unwrap();
        assert!((a - exact).abs() / exact < 1e-3);
    }

    #[test]
    fn catmull_rom_reproduces_lines_and_circles() {
        let p = catmull_rom((0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0), 0.25);
        assert!((p.0 - 1.25).abs() < 1e-14 && (p.1 - 1.25).abs() < 1e-14);
        let at = |th: f64| (th.cos(), th.sin());
        let q = catmull_rom(at(0.0), at(0.1), at(0.2), at(0.3), 0.5);
        assert!((q.0.hypot(q.1) - 1.0).abs() < 1e-5);
        assert_eq!(
            catmull_rom((1.0, 1.0), (1.0, 1.0), (2.0, 1.0), (3.0, 1.0), 0.5),
            (1.5, 1.0)
        );
    }

    #[test]
    fn redistribution_preserves_polygon() {
        let c = SymmetryConfig::new(1, 1).unwrap();
        let mut m = rect(1.0, 2.0, 1.0, 2.0);
        m.spacing = 0.02;
        let before = weighted_area(&m, &c).unwrap();
        let added = m.redistribute(3.0);
        assert!(added > 0);
        let after = weighted_area(&m, &c).unwrap();
        // only the segments next to corners bulge
        assert!((before - after).abs() < 1e-2 * before, "{before} {after}");
        assert!(m.components[0].max_segment() <= 0.02 + 1e-12);
        assert!(m.components[0].is_simple());
        let pl = &m.components[0];
        let mid = (0..pl.len())
            .find(|&k| (pl.r[k] - 1.5).abs() < 0.011 && pl.s[k] < 1.5)
            .unwrap();
        assert!((pl.s[mid] - 1.0).abs() < 1e-12);
    }
}
