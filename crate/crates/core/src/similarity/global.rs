//! The global solve of `∂̄P = AP` on the whole domain through
//! `(I − T∘A)Q = T(A)`, with restarted GMRES.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::beltrami_residual;
use super::gluing::{GluingCertificate, Transition};
use super::majorant::MajorantCertificate;
use super::matrix::{Mat2, MatrixField};
use super::neumann::{neumann_series, LocalSolve};
use crate::cauchy::CauchyOp;
use crate::field::{ComplexField, Grid, Margin, C64};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalConfig {
    /// Relative residual of the discrete linear system.
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    /// Sum the Neumann series when the certified contraction is below this.
    pub neumann_below: f64,
    pub margin: Margin,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        GlobalConfig { tol: 1e-10, restart: 60, max_iter: 3000, neumann_below: 0.5, margin: Margin::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Neumann,
    Gmres,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Certificates {
    pub gluing: Option<GluingCertificate>,
    pub majorant: Option<MajorantCertificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeltramiSolution {
    pub p: MatrixField,
    pub p_inv: MatrixField,
    /// Interior `sup|∂̄P − AP| / sup|P|`.
    pub residual: f64,
    pub method: Method,
    pub iterations: usize,
    /// Relative linear residual after each iteration (GMRES) or the
    /// term sizes (Neumann).
    pub history: Vec<f64>,
    /// `sup |P·P⁻¹ − I|`.
    pub inverse_defect: f64,
    pub locals: Vec<LocalSolve>,
    pub transitions: Vec<Transition>,
    pub gluing: Vec<MatrixField>,
    pub certificates: Certificates,
}

impl BeltramiSolution {
    /// `‖P‖_∞ + ‖P⁻¹‖_∞` in the pointwise operator norm.
    pub fn norm_sum(&self) -> f64 {
        self.p.sup_opnorm() + self.p_inv.sup_opnorm()
    }
}

const CHUNK: usize = 4096;

/// `Σ conj(a_k) b_k`, summed in fixed chunks so the result does not
/// depend on the thread count.
fn dot(a: &[C64], b: &[C64]) -> C64 {
    let parts: Vec<C64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p.conj() * q).sum())
        .collect();
    parts.into_iter().sum()
}

fn norm(a: &[C64]) -> f64 {
    let parts: Vec<f64> = a.par_chunks(CHUNK).map(|x| x.iter().map(|v| v.norm_sqr()).sum()).collect();
    parts.into_iter().sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], s: C64, x: &[C64]) {
    y.par_chunks_mut(CHUNK).zip(x.par_chunks(CHUNK)).for_each(|(yc, xc)| {
        for (u, v) in yc.iter_mut().zip(xc) {
            *u += s * v;
        }
    });
}

pub struct GmresOutcome {
    pub x: Vec<C64>,
    pub iterations: usize,
    pub history: Vec<f64>,
}

/// Restarted GMRES for `L x = b` from `x = 0`, stopping when
/// `|b − Lx| ≤ tol |b|`. A restart cycle that fails to reduce the
/// residual by at least 1% counts as stagnation.
pub fn gmres(apply: impl Fn(&[C64]) -> Result<Vec<C64>>, b: &[C64], tol: f64, restart: usize, max_iter: usize) -> Result<GmresOutcome> {
    let bnorm = norm(b);
    let mut x = vec![C64::new(0.0, 0.0); b.len()];
    let mut history = Vec::new();
    if bnorm == 0.0 {
        return Ok(GmresOutcome { x, iterations: 0, history });
    }
    let restart = restart.max(1);
    let mut iterations = 0;
    let mut r = b.to_vec();
    loop {
        let beta = norm(&r);
        let cycle_start = beta / bnorm;
        if cycle_start <= tol {
            return Ok(GmresOutcome { x, iterations, history });
        }
        let mut v: Vec<Vec<C64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut hcols: Vec<Vec<C64>> = Vec::new();
        let mut cs: Vec<(f64, C64)> = Vec::new();
        let mut g = vec![C64::new(beta, 0.0)];
        let mut rel = cycle_start;
        for j in 0..restart {
            let mut w = apply(&v[j])?;
            let mut h = vec![C64::new(0.0, 0.0); j + 2];
            for (i, vi) in v.iter().enumerate() {
                h[i] = dot(vi, &w);
                axpy(&mut w, -h[i], vi);
            }
            let wn = norm(&w);
            h[j + 1] = C64::new(wn, 0.0);
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (a, b2) = (h[i], h[i + 1]);
                h[i] = c * a + s * b2;
                h[i + 1] = -s.conj() * a + c * b2;
            }
            let (a, b2) = (h[j], h[j + 1]);
            let rr = (a.norm_sqr() + b2.norm_sqr()).sqrt();
            let (c, s) = if a.norm() == 0.0 {
                (0.0, if b2.norm() == 0.0 { C64::new(1.0, 0.0) } else { b2.conj() / b2.norm() })
            } else {
                (a.norm() / rr, (a / a.norm()) * b2.conj() / rr)
            };
            h[j] = c * a + s * b2;
            h[j + 1] = C64::new(0.0, 0.0);
            cs.push((c, s));
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s.conj() * gj);
            hcols.push(h);
            iterations += 1;
            rel = g[j + 1].norm() / bnorm;
            history.push(rel);
            if rel <= tol || iterations >= max_iter || wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|z| z / wn).collect());
        }
        let m = hcols.len();
        let mut y = vec![C64::new(0.0, 0.0); m];
        for i in (0..m).rev() {
            let mut s = g[i];
            for k in i + 1..m {
                s -= hcols[k][i] * y[k];
            }
            y[i] = s / hcols[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            axpy(&mut x, *yi, &v[i]);
        }
        let lx = apply(&x)?;
        r = b.iter().zip(&lx).map(|(p, q)| p - q).collect();
        let true_rel = norm(&r) / bnorm;
        if true_rel <= tol {
            return Ok(GmresOutcome { x, iterations, history });
        }
        if iterations >= max_iter {
            return Err(Error::NotConverged { iterations, residual: true_rel });
        }
        if true_rel > 0.99 * cycle_start && rel > tol {
            return Err(Error::Stagnation { history });
        }
    }
}

fn flatten(m: &MatrixField) -> Vec<C64> {
    m.entries().iter().flat_map(|e| e.values().iter().copied()).collect()
}

fn unflatten(grid: Grid, x: &[C64]) -> Result<MatrixField> {
    let n = grid.len();
    let part = |k: usize| ComplexField::new(grid, x[k * n..(k + 1) * n].to_vec());
    MatrixField::from_entries(part(0)?, part(1)?, part(2)?, part(3)?)
}

/// `P = I + Q` with `Q − T(AQ) = T(A)` on `op`'s grid.
pub fn global_solve(a: &MatrixField, op: &CauchyOp, cfg: &GlobalConfig) -> Result<BeltramiSolution> {
    a.a11.check_same(op.grid())?;
    let grid = *a.grid();
    let rho = op.linf_bound() * a.sup_opnorm();
    let (q, method, history) = if rho < cfg.neumann_below {
        let (q, inc) = neumann_series(a, op, cfg.tol, cfg.max_iter)?;
        (q, Method::Neumann, inc)
    } else {
        let b = flatten(&a.transform(op)?);
        let apply = |x: &[C64]| -> Result<Vec<C64>> {
            let qx = unflatten(grid, x)?;
            let t = a.mul(&qx)?.transform(op)?;
            Ok(x.iter().zip(flatten(&t)).map(|(u, v)| u - v).collect())
        };
        let out = gmres(apply, &b, cfg.tol, cfg.restart, cfg.max_iter)?;
        (unflatten(grid, &out.x)?, Method::Gmres, out.history)
    };
    let p = q.map(|m| m + Mat2::IDENTITY)?;
    let p_inv = p.inverse()?;
    let inverse_defect = p.mul(&p_inv)?.map(|m| m - Mat2::IDENTITY)?.sup_opnorm();
    Ok(BeltramiSolution {
        residual: beltrami_residual(&p, a, cfg.margin)?,
        iterations: history.len(),
        p,
        p_inv,
        method,
        history,
        inverse_defect,
        locals: vec![],
        transitions: vec![],
        gluing: vec![],
        certificates: Certificates::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{dbar, Grid};
    use crate::similarity::sweep::RandomMatrix;

    fn unit(n: usize) -> Grid {
        Grid::rect(0.0, 0.0, 1.0 / n as f64, n, n).unwrap()
    }

    #[test]
    fn gmres_solves_small_dense_system() {
        let m = [[4.0, 1.0, 0.5], [0.0, 3.0, 1.0], [1.0, 0.0, 2.0]];
        let apply = |x: &[C64]| -> Result<Vec<C64>> {
            Ok((0..3).map(|i| (0..3).map(|j| x[j] * m[i][j]).sum()).collect())
        };
        let b = vec![C64::new(1.0, 2.0), C64::new(0.0, -1.0), C64::new(3.0, 0.5)];
        let out = gmres(apply, &b, 1e-13, 2, 100).unwrap();
        let r = apply(&out.x).unwrap();
        for (p, q) in r.iter().zip(&b) {
            assert!((p - q).norm() < 1e-11);
        }
    }

    #[test]
    fn zero_gives_identity() {
        let g = unit(32);
        let s = global_solve(&MatrixField::zeros(g), &CauchyOp::new(g), &GlobalConfig::default()).unwrap();
        assert_eq!(s.p, MatrixField::identity(g));
        assert_eq!(s.norm_sum(), 2.0);
    }

    #[test]
    fn constant_scalar_a() {
        // ∂̄P = aP, so e^{−a z̄}P is holomorphic.
        let a = C64::new(1.5, -0.7);
        let mut errs = vec![];
        for n in [32, 64] {
            let g = unit(n);
            let am = MatrixField::constant(g, Mat2::scalar(a));
            let s = global_solve(&am, &CauchyOp::new(g), &GlobalConfig::default()).unwrap();
            assert_eq!(s.method, Method::Gmres);
            let f = ComplexField::from_fn(g, |z| (-a * z.conj()).exp());
            let h = s.p.a11.zip_with(&f, |p, e| p * e).unwrap();
            let d = dbar(&h);
            errs.push(d.interior_sup(Margin::Width(0.25)) / h.max_modulus());
        }
        assert!(errs[1] < 0.5 * errs[0], "{errs:?}");
        assert!(errs[1] < 1e-2, "{errs:?}");
    }

    #[test]
    fn gmres_and_neumann_agree() {
        let g = unit(24);
        let op = CauchyOp::new(g);
        let a = RandomMatrix::new(5, 0.3).sample(g);
        let neu = global_solve(&a, &op, &GlobalConfig::default()).unwrap();
        assert_eq!(neu.method, Method::Neumann);
        let cfg = GlobalConfig { neumann_below: 0.0, ..Default::default() };
        let kry = global_solve(&a, &op, &cfg).unwrap();
        assert_eq!(kry.method, Method::Gmres);
        let diff = neu.p.sub(&kry.p).unwrap().sup_opnorm();
        assert!(diff < 1e-8, "{diff}");
        assert!(kry.inverse_defect < 1e-8);
    }

    #[test]
    fn large_m_converges() {
        let g = unit(32);
        let a = RandomMatrix::new(11, 8.0).sample(g);
        let s = global_solve(&a, &CauchyOp::new(g), &GlobalConfig::default()).unwrap();
        assert!(s.history.last().unwrap() <= &1e-10);
        assert!(s.inverse_defect < 1e-8);
    }
}
