use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::boundary::FarBoundary;
use super::grid::{Grid, GridField};
use super::operator::{Stencil1d, Stencil2d};
use crate::error::{Error, Result};
use crate::model::SymmetryConfig;

/// Linear solver used for each correction step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Separable direct solve in the eigenbasis of the symmetrized 1D
    /// operators.
    #[default]
    FastDiagonalization,
    /// Jacobi-preconditioned conjugate gradients on the symmetrized system.
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    /// Correction steps (fast diagonalization) or CG iterations.
    pub iterations: usize,
    /// Final `max |L psi - w|` over interior nodes.
    pub residual: f64,
    /// The value `tol` was measured against.
    pub scale: f64,
}

/// Diagonal similarity `D T D^-1 = Q diag(lam) Q^T` of a 1D stencil.
#[derive(Debug, Clone)]
struct Modes {
    q: DMatrix<f64>,
    lam: Vec<f64>,
    d: Vec<f64>,
    /// Off-diagonal of the symmetrized matrix.
    off: Vec<f64>,
}

impl Modes {
    fn symmetrize(st: &Stencil1d) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = st.diag.len();
        let mut d = vec![1.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        for i in 0..n - 1 {
            if st.lo[i + 1] <= 0.0 {
                return Err(Error::InvalidGrid(
                    "the stencil is not symmetrizable; multiplicities above 4 are unsupported"
                        .into(),
                ));
            }
            d[i + 1] = d[i] * (st.hi[i] / st.lo[i + 1]).sqrt();
            off[i] = (st.hi[i] * st.lo[i + 1]).sqrt();
        }
        Ok((d, off))
    }

    fn new(st: &Stencil1d, with_eigen: bool) -> Result<Self> {
        let n = st.diag.len();
        let (d, off) = Self::symmetrize(st)?;
        if !with_eigen {
            return Ok(Modes {
                q: DMatrix::zeros(0, 0),
                lam: Vec::new(),
                d,
                off,
            });
        }
        let s = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                st.diag[i]
            } else if j == i + 1 {
                off[i]
            } else if i == j + 1 {
                off[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(s);
        Ok(Modes {
            q: eig.eigenvectors,
            lam: eig.eigenvalues.iter().copied().collect(),
            d,
            off,
        })
    }
}

/// Solver for `L psi = w` with zero axis data and given far-edge data.
///
/// Each step solves for a correction from the current residual, so any
/// round-off in the direct solve is removed by iterative refinement; the
/// loop stops when `max |L psi - w| <= tol * scale`, where `scale` is the
/// larger of `max |w|` and the residual of the boundary data alone.
#[derive(Debug, Clone)]
pub struct EllipticSolver {
    grid: Grid,
    cfg: SymmetryConfig,
    kind: SolverKind,
    pub tol: f64,
    pub max_iter: usize,
    r: Modes,
    s: Modes,
}

impl EllipticSolver {
    pub fn new(grid: Grid, cfg: SymmetryConfig, kind: SolverKind, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::Validation {
                rule: "tol > 0".into(),
                message: format!("tol = {tol}"),
            });
        }
        let st = Stencil2d::new(&grid, &cfg);
        let eig = kind == SolverKind::FastDiagonalization;
        Ok(EllipticSolver {
            grid,
            cfg,
            kind,
            tol,
            max_iter: match kind {
                SolverKind::FastDiagonalization => 8,
                SolverKind::ConjugateGradient => 20 * (grid.nr + grid.ns) + 1000,
            },
            r: Modes::new(&st.r, eig)?,
            s: Modes::new(&st.s, eig)?,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kind(&self) -> SolverKind {
        self.kind
    }

    /// Solves `L psi = w` at interior nodes. Axis rows of the result are
    /// zero and far rows carry `far`.
    pub fn solve(&self, w: &GridField, far: &FarBoundary) -> Result<(GridField, SolveReport)> {
        let g = self.grid;
        let mut psi = GridField::zeros(g, "psi");
        for j in 1..g.height() {
            psi.set(g.nr + 1, j, far.at_r_max[j]);
        }
        for i in 1..g.width() {
            psi.set(i, g.ns + 1, far.at_s_max[i]);
        }
        let st = Stencil2d::new(&g, &self.cfg);
        let (nr, ns) = (g.nr, g.ns);
        let mut res = vec![0.0; nr * ns];
        let residual = |psi: &GridField, res: &mut [f64]| -> f64 {
            let mut m: f64 = 0.0;
            for i in 1..=nr {
                for j in 1..=ns {
                    let v = w.at(i, j) - st.apply_at(psi, i, j);
                    res[(i - 1) * ns + (j - 1)] = v;
                    m = m.max(v.abs());
                }
            }
            m
        };
        let mut rn = residual(&psi, &mut res);
        let scale = w.interior_max_abs().max(rn);
        if scale == 0.0 {
            return Ok((
                psi,
                SolveReport {
                    iterations: 0,
                    residual: 0.0,
                    scale,
                },
            ));
        }
        let target = self.tol * scale;
        let mut iterations = 0;
        while rn > target {
            if iterations >= self.max_iter {
                return Err(Error::NoConvergence {
                    iterations,
                    residual: rn,
                });
            }
            let delta = match self.kind {
                SolverKind::FastDiagonalization => {
                    iterations += 1;
                    self.fast_correction(&res)
                }
                SolverKind::ConjugateGradient => {
                    let (dx, its) =
                        self.cg_correction(&st, &res, 0.5 * target, self.max_iter - iterations)?;
                    iterations += its.max(1);
                    dx
                }
            };
            for i in 1..=nr {
                for j in 1..=ns {
                    let k = g.idx(i, j);
                    psi.values[k] += delta[(i - 1) * ns + (j - 1)];
                }
            }
            let prev = rn;
            rn = residual(&psi, &mut res);
            if !rn.is_finite() || (self.kind == SolverKind::FastDiagonalization && rn >= prev) {
                if rn <= target {
                    break;
                }
                return Err(Error::NoConvergence {
                    iterations,
                    residual: rn,
                });
            }
        }
        Ok((
            psi,
            SolveReport {
                iterations,
                residual: rn,
                scale,
            },
        ))
    }

    /// Exact solve of the stencil system with zero boundary data.
    fn fast_correction(&self, res: &[f64]) -> Vec<f64> {
        let (nr, ns) = (self.grid.nr, self.grid.ns);
        let (r, s) = (&self.r, &self.s);
        let f = DMatrix::from_fn(nr, ns, |i, j| r.d[i] * res[i * ns + j] * s.d[j]);
        let mut x = r.q.tr_mul(&f) * &s.q;
        for j in 0..ns {
            for i in 0..nr {
                x[(i, j)] /= r.lam[i] + s.lam[j];
            }
        }
        let y = &r.q * x * s.q.transpose();
        let mut out = vec![0.0; nr * ns];
        for i in 0..nr {
            for j in 0..ns {
                out[i * ns + j] = y[(i, j)] / (r.d[i] * s.d[j]);
            }
        }
        out
    }

    /// CG on `-S z = -D res`, `delta = D^-1 z`, stopped when the unscaled
    /// residual drops below `target`.
    fn cg_correction(
        &self,
        st: &Stencil2d,
        res: &[f64],
        target: f64,
        cap: usize,
    ) -> Result<(Vec<f64>, usize)> {
        let (nr, ns) = (self.grid.nr, self.grid.ns);
        let (r, s) = (&self.r, &self.s);
        let n = nr * ns;
        let dd: Vec<f64> = (0..n).map(|k| r.d[k / ns] * s.d[k % ns]).collect();
        let diag: Vec<f64> = (0..n)
            .map(|k| -(st.r.diag[k / ns] + st.s.diag[k % ns]))
            .collect();
        // A = -S
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..nr {
                for j in 0..ns {
                    let k = i * ns + j;
                    let mut v = -diag[k] * x[k];
                    if i > 0 {
                        v += r.off[i - 1] * x[k - ns];
                    }
                    if i + 1 < nr {
                        v += r.off[i] * x[k + ns];
                    }
                    if j > 0 {
                        v += s.off[j - 1] * x[k - 1];
                    }
                    if j + 1 < ns {
                        v += s.off[j] * x[k + 1];
                    }
                    y[k] = -v;
                }
            }
        };
        let mut z = vec![0.0; n];
        let mut rr: Vec<f64> = (0..n).map(|k| -dd[k] * res[k]).collect();
        let unscaled = |rr: &[f64]| {
            rr.iter()
                .zip(&dd)
                .fold(0.0f64, |a, (v, d)| a.max((v / d).abs()))
        };
        let mut zp: Vec<f64> = rr.iter().zip(&diag).map(|(v, d)| v / d).collect();
        let mut p = zp.clone();
        let mut rz: f64 = rr.iter().zip(&zp).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; n];
        for it in 1..=cap {
            apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                return Err(Error::NoConvergence {
                    iterations: it,
                    residual: unscaled(&rr),
                });
            }
            let alpha = rz / pap;
            for k in 0..n {
                z[k] += alpha * p[k];
                rr[k] -= alpha * ap[k];
            }
            if unscaled(&rr) <= target {
                let dx = z.iter().zip(&dd).map(|(v, d)| v / d).collect();
                return Ok((dx, it));
            }
            for k in 0..n {
                zp[k] = rr[k] / diag[k];
            }
            let rz_new: f64 = rr.iter().zip(&zp).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = zp[k] + beta * p[k];
            }
        }
        Err(Error::NoConvergence {
            iterations: cap,
            residual: unscaled(&rr),
        })
    }
}
