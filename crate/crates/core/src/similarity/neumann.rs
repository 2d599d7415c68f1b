//! Local solves of `∂̄P = AP` on a strip by the Neumann series for
//! `Q − T(AQ) = T(A)`.

use serde::{Deserialize, Serialize};

use super::beltrami_residual;
use super::matrix::MatrixField;
use crate::cauchy::CauchyOp;
use crate::field::Margin;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeumannConfig {
    /// Stop once the sup opnorm of the newest term is below this.
    pub tol: f64,
    pub max_terms: usize,
    /// Largest certified contraction accepted.
    pub rho_max: f64,
    pub margin: Margin,
}

impl Default for NeumannConfig {
    fn default() -> Self {
        NeumannConfig { tol: 1e-10, max_terms: 400, rho_max: 1.0 / 3.0, margin: Margin::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeumannCertificate {
    /// Rigorous bound on the discrete `L∞ → L∞` norm of `T`.
    pub op_norm: f64,
    /// `sup_z ‖A(z)‖`.
    pub a_norm: f64,
    /// `ρ = op_norm · a_norm`; every term is at most `ρ` times the last.
    pub rho: f64,
    pub q_sup: f64,
    /// `ρ/(1−ρ)`, the series bound on `‖Q‖_∞`.
    pub q_bound: f64,
    pub p_sup: f64,
    pub p_inv_sup: f64,
    pub min_abs_det: f64,
    /// Sup opnorm of each term `(T∘A)ᵏ I`, `k ≥ 1`.
    pub increments: Vec<f64>,
    /// Largest observed ratio of consecutive increments.
    pub measured_rate: f64,
    /// Truncation bound `last · ρ/(1−ρ)`.
    pub tail_bound: f64,
    pub residual: f64,
    /// `‖Q‖_∞ ≤ 1/2`, `‖P‖ < 3` and `‖P⁻¹‖ < 3`.
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSolve {
    pub strip: usize,
    pub p: MatrixField,
    pub p_inv: MatrixField,
    pub certificate: NeumannCertificate,
}

/// `Q = Σ_{k≥1} (T∘A)ᵏ I` summed until the newest term drops below `tol`.
/// Requires only `ρ < 1`; the caller decides how small `ρ` must be.
pub(crate) fn neumann_series(a: &MatrixField, op: &CauchyOp, tol: f64, max_terms: usize) -> Result<(MatrixField, Vec<f64>)> {
    a.a11.check_same(op.grid())?;
    let mut term = a.transform(op)?;
    let mut q = term.clone();
    let mut inc = vec![term.sup_opnorm()];
    while *inc.last().unwrap() > tol {
        if inc.len() >= max_terms {
            return Err(Error::NotConverged { iterations: inc.len(), residual: *inc.last().unwrap() });
        }
        term = a.mul(&term)?.transform(op)?;
        q = q.add(&term)?;
        inc.push(term.sup_opnorm());
    }
    Ok((q, inc))
}

/// Solve on one strip. `op` must live on the strip grid.
pub fn local_neumann_solve(a: &MatrixField, strip: usize, op: &CauchyOp, cfg: &NeumannConfig) -> Result<LocalSolve> {
    let op_norm = op.linf_bound();
    let a_norm = a.sup_opnorm();
    let rho = op_norm * a_norm;
    if rho > cfg.rho_max {
        return Err(Error::ContractionNotCertified { value: rho });
    }
    let (q, increments) = neumann_series(a, op, cfg.tol, cfg.max_terms)?;
    let p = q.map(|m| m + super::matrix::Mat2::IDENTITY)?;
    let min_abs_det = (0..p.grid().len()).map(|k| p.at(k).det().norm()).fold(f64::INFINITY, f64::min);
    if min_abs_det < 1e-6 {
        return Err(Error::Degenerate(format!("|det P_{strip}| = {min_abs_det:.3e} < 1e-6")));
    }
    let p_inv = p.inverse()?;
    let measured_rate = increments.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).fold(0.0, f64::max);
    let q_sup = q.sup_opnorm();
    let (p_sup, p_inv_sup) = (p.sup_opnorm(), p_inv.sup_opnorm());
    let q_bound = rho / (1.0 - rho);
    let certificate = NeumannCertificate {
        op_norm,
        a_norm,
        rho,
        q_sup,
        q_bound,
        p_sup,
        p_inv_sup,
        min_abs_det,
        tail_bound: increments.last().copied().unwrap_or(0.0) * q_bound,
        increments,
        measured_rate,
        residual: beltrami_residual(&p, a, cfg.margin)?,
        certified: q_sup <= 0.5 && p_sup < 3.0 && p_inv_sup < 3.0,
    };
    Ok(LocalSolve { strip, p, p_inv, certificate })
}
