use std::f64::consts::PI;

use super::{newton_constant, sphere_area, KernelParams};
use crate::error::{Error, Result};
use crate::model::{QuadrantPoint, SymmetryConfig};
use crate::quadrature::GaussLegendre;

/// Nodes of one angle: `1 - cos` of the node and two weight columns
/// (`cos^1` and `cos^2`, both times `sin^(k-1)` and the quadrature weight).
#[derive(Debug, Clone, Default)]
struct AxisNodes {
    omc: Vec<f64>,
    w1: Vec<f64>,
    w2: Vec<f64>,
}

impl AxisNodes {
    fn clear(&mut self) {
        self.omc.clear();
        self.w1.clear();
        self.w2.clear();
    }

    fn push_panel(&mut self, rule: &GaussLegendre, a: f64, b: f64, k: u32) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let g = mid + half * x;
            let sh = (0.5 * g).sin();
            let (sn, cs) = g.sin_cos();
            let base = half * w * sn.powi(k as i32 - 1);
            self.omc.push(2.0 * sh * sh);
            self.w1.push(base * cs);
            self.w2.push(base * cs * cs);
        }
    }
}

/// Evaluates angular moments and the derived kernels for one symmetry class.
///
/// Holds scratch buffers, so each worker thread should own one.
#[derive(Debug, Clone)]
pub struct KernelEvaluator {
    cfg: SymmetryConfig,
    params: KernelParams,
    panel: GaussLegendre,
    full_g: AxisNodes,
    full_c: AxisNodes,
    g: AxisNodes,
    c: AxisNodes,
    /// `sign * c_d * |S^(n-1)| |S^(m-1)|`.
    prefactor: f64,
    /// `d/2 - 1`.
    e0: f64,
    e0_int: i32,
    e0_half: bool,
}

impl KernelEvaluator {
    pub fn new(cfg: SymmetryConfig, params: KernelParams) -> Result<Self> {
        params.validate()?;
        let full = GaussLegendre::new(params.nq);
        let panel = GaussLegendre::new((params.nq * 5 / 8).max(4));
        let mut full_g = AxisNodes::default();
        full_g.push_panel(&full, 0.0, PI, cfg.n());
        let mut full_c = AxisNodes::default();
        full_c.push_panel(&full, 0.0, PI, cfg.m());
        let nm = cfg.n() + cfg.m();
        let prefactor = params.sign.factor()
            * newton_constant(cfg.d())
            * sphere_area(cfg.n() - 1)
            * sphere_area(cfg.m() - 1);
        Ok(KernelEvaluator {
            cfg,
            params,
            panel,
            full_g,
            full_c,
            g: AxisNodes::default(),
            c: AxisNodes::default(),
            prefactor,
            e0: nm as f64 / 2.0,
            e0_int: (nm / 2) as i32,
            e0_half: nm % 2 == 1,
        })
    }

    pub fn cfg(&self) -> &SymmetryConfig {
        &self.cfg
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    /// Fills the scratch axes for the pair and returns `A_min`.
    ///
    /// Near the diagonal the integrand concentrates at the origin of both
    /// angles with width `sqrt(A_min / (r rb))`; each angle then gets a
    /// geometrically graded composite rule starting at that width.
    fn prepare(&mut self, p: QuadrantPoint, q: QuadrantPoint) -> Result<(f64, f64, f64)> {
        let dr = p.r - q.r;
        let ds = p.s - q.s;
        let a_min = dr * dr + ds * ds + self.params.delta * self.params.delta;
        if a_min == 0.0 {
            return Err(Error::SingularEvaluation);
        }
        let b = 2.0 * p.r * q.r;
        let c = 2.0 * p.s * q.s;
        let max_panels = self.params.max_panels;
        fill_axis(
            &mut self.g,
            &self.full_g,
            &self.panel,
            a_min,
            b,
            self.cfg.n(),
            max_panels,
        );
        fill_axis(
            &mut self.c,
            &self.full_c,
            &self.panel,
            a_min,
            c,
            self.cfg.m(),
            max_panels,
        );
        Ok((a_min, b, c))
    }

    /// `M(e, j, k; P, Q)` for arbitrary real `e` and powers `j, k`.
    pub fn angular_moment(
        &mut self,
        e: f64,
        j: u32,
        k: u32,
        p: QuadrantPoint,
        q: QuadrantPoint,
    ) -> Result<f64> {
        let (a_min, b, c) = self.prepare(p, q)?;
        // odd powers of cos integrate to zero when A does not depend on the angle
        if (b == 0.0 && j.is_multiple_of(2)) || (c == 0.0 && k.is_multiple_of(2)) {
            return Ok(0.0);
        }
        let g = if b == 0.0 { &self.full_g } else { &self.g };
        let ch = if c == 0.0 { &self.full_c } else { &self.c };
        let col = |ax: &AxisNodes, pow: u32| -> Vec<f64> {
            ax.w1
                .iter()
                .zip(&ax.omc)
                .map(|(w, o)| w * (1.0 - o).powi(pow as i32))
                .collect()
        };
        let wg = col(g, j);
        let wc = col(ch, k);
        let mut total = 0.0;
        for (og, wa) in g.omc.iter().zip(&wg) {
            let base = a_min + b * og;
            let mut row = 0.0;
            for (oc, wb) in ch.omc.iter().zip(&wc) {
                row += wb * (base + c * oc).powf(-e);
            }
            total += wa * row;
        }
        Ok(total * sphere_area(self.cfg.n() - 1) * sphere_area(self.cfg.m() - 1))
    }

    /// `[M(e0,0,0), M(e0+1,0,0), M(e0+1,1,0), M(e0+1,0,1)]` with `e0 = d/2 - 1`,
    /// unnormalized (without the sphere-area factors).
    fn moments(&mut self, p: QuadrantPoint, q: QuadrantPoint) -> Result<[f64; 4]> {
        let (a_min, b, c) = self.prepare(p, q)?;
        let g = if b == 0.0 { &self.full_g } else { &self.g };
        let ch = if c == 0.0 { &self.full_c } else { &self.c };
        let (ei, half) = (self.e0_int, self.e0_half);
        let (mut s00, mut t00, mut t10, mut t01) = (0.0, 0.0, 0.0, 0.0);
        for ((og, wg1), wg2) in g.omc.iter().zip(&g.w1).zip(&g.w2) {
            let base = a_min + b * og;
            let (mut rs0, mut rt0, mut rt1) = (0.0, 0.0, 0.0);
            for ((oc, wc1), wc2) in ch.omc.iter().zip(&ch.w1).zip(&ch.w2) {
                let inv = 1.0 / (base + c * oc);
                let mut p0 = powi_small(inv, ei);
                if half {
                    p0 *= inv.sqrt();
                }
                let p1 = p0 * inv;
                rs0 += wc1 * p0;
                rt0 += wc1 * p1;
                rt1 += wc2 * p1;
            }
            s00 += wg1 * rs0;
            t00 += wg1 * rt0;
            t10 += wg2 * rt0;
            t01 += wg1 * rt1;
        }
        // exact zeros on the axes
        if b == 0.0 {
            s00 = 0.0;
            t00 = 0.0;
            t01 = 0.0;
        }
        if c == 0.0 {
            s00 = 0.0;
            t00 = 0.0;
            t10 = 0.0;
        }
        Ok([s00, t00, t10, t01])
    }

    /// `r^n s^m` of the source, times the sign, `c_d` and sphere factors.
    fn source_factor(&self, q: QuadrantPoint) -> f64 {
        self.prefactor * self.cfg.weight(q.r, q.s)
    }

    /// `K_psi(P, Q)`.
    pub fn psi_kernel(&mut self, p: QuadrantPoint, q: QuadrantPoint) -> Result<f64> {
        let m = self.moments(p, q)?;
        Ok(self.source_factor(q) * m[0])
    }

    /// `(K_psi, d_r K_psi, d_s K_psi)` from analytic differentiation under
    /// the integral.
    pub fn psi_and_grad(&mut self, p: QuadrantPoint, q: QuadrantPoint) -> Result<(f64, f64, f64)> {
        let m = self.moments(p, q)?;
        let f = self.source_factor(q);
        let two_e = 2.0 * self.e0;
        Ok((
            f * m[0],
            f * two_e * (q.r * m[2] - p.r * m[1]),
            f * two_e * (q.s * m[3] - p.s * m[1]),
        ))
    }

    pub fn grad_psi_kernel(&mut self, p: QuadrantPoint, q: QuadrantPoint) -> Result<(f64, f64)> {
        let (_, dr, ds) = self.psi_and_grad(p, q)?;
        Ok((dr, ds))
    }

    /// `(K^r, K^s)`, using the on-axis limits below the axis threshold.
    pub fn velocity_kernel(&mut self, p: QuadrantPoint, q: QuadrantPoint) -> Result<(f64, f64)> {
        let th = self.params.axis_threshold;
        let (n, m) = (self.cfg.n() as f64, self.cfg.m() as f64);
        let (k, dr, ds) = self.psi_and_grad(p, q)?;
        let kr = if p.s >= th && p.s > 0.0 {
            -(m / p.s * k + ds)
        } else {
            let (_, _, ds0) = self.psi_and_grad(QuadrantPoint { r: p.r, s: 0.0 }, q)?;
            -(m + 1.0) * ds0
        };
        let ks = if p.r >= th && p.r > 0.0 {
            n / p.r * k + dr
        } else {
            let (_, dr0, _) = self.psi_and_grad(QuadrantPoint { r: 0.0, s: p.s }, q)?;
            (n + 1.0) * dr0
        };
        Ok((kr, ks))
    }

    /// Total nodes used by the last prepared pair, for cost reporting.
    pub fn last_node_count(&self) -> usize {
        self.g.omc.len() * self.c.omc.len()
    }
}

#[inline(always)]
fn powi_small(x: f64, k: i32) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        2 => x * x,
        3 => x * x * x,
        _ => x.powi(k),
    }
}

fn fill_axis(
    out: &mut AxisNodes,
    full: &AxisNodes,
    panel: &GaussLegendre,
    a_min: f64,
    b: f64,
    k: u32,
    max_panels: usize,
) {
    out.clear();
    let width = if b > 0.0 {
        (2.0 * a_min / b).sqrt()
    } else {
        f64::INFINITY
    };
    if width >= 0.5 * PI {
        out.omc.extend_from_slice(&full.omc);
        out.w1.extend_from_slice(&full.w1);
        out.w2.extend_from_slice(&full.w2);
        return;
    }
    // panels [0, w], [w, 2w], [2w, 4w], ... ending at pi
    let needed = (PI / width).log2().ceil() as usize + 1;
    let w = if needed > max_panels {
        PI / 2f64.powi(max_panels as i32 - 1)
    } else {
        width
    };
    let mut a = 0.0;
    let mut bnd = w;
    while 2.0 * bnd < PI {
        out.push_panel(panel, a, bnd, k);
        a = bnd;
        bnd *= 2.0;
    }
    out.push_panel(panel, a, bnd, k);
    out.push_panel(panel, bnd, PI, k);
}
