//! Transition matrices `H_i = P_{i−1}⁻¹P_i` on overlaps and the gluing
//! family `g_i = P_i⁻¹P` derived from a global solution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::global::{global_solve, BeltramiSolution, GlobalConfig};
use super::majorant::{majorant, MajorantSchedule};
use super::matrix::MatrixField;
use super::neumann::{local_neumann_solve, LocalSolve, NeumannConfig};
use super::partition::StripPartition;
use crate::cauchy::CauchyOp;
use crate::field::{Grid, Margin};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    /// `H_i` lives on `U_{i−1} ∩ U_i`.
    pub index: usize,
    pub h: MatrixField,
    pub h_inv: MatrixField,
    pub sup_norm: f64,
    pub sup_inv_norm: f64,
    /// Interior `sup|∂̄H_i|`.
    pub holomorphy: f64,
}

impl Transition {
    pub fn bounded(&self) -> bool {
        self.sup_norm <= 10.0 && self.sup_inv_norm <= 10.0
    }
}

fn overlap_of(part: &StripPartition, m: usize, i: usize) -> Result<Grid> {
    Ok(part.window(part.overlap_span(i), m)?.1)
}

/// `H_i` for consecutive strips. `locals[i]` must be strip `i` at `m`
/// cells per unit of `part`.
pub fn transition_matrices(part: &StripPartition, m: usize, locals: &[LocalSolve], margin: Margin) -> Result<Vec<Transition>> {
    check_locals(part, locals)?;
    (1..=part.i0)
        .map(|i| {
            let ov = overlap_of(part, m, i)?;
            let h = locals[i - 1].p_inv.restrict(&ov)?.mul(&locals[i].p.restrict(&ov)?)?;
            let h_inv = locals[i].p_inv.restrict(&ov)?.mul(&locals[i - 1].p.restrict(&ov)?)?;
            Ok(Transition {
                index: i,
                sup_norm: h.sup_opnorm(),
                sup_inv_norm: h_inv.sup_opnorm(),
                holomorphy: h.dbar().interior_sup_opnorm(margin),
                h,
                h_inv,
            })
        })
        .collect()
}

fn check_locals(part: &StripPartition, locals: &[LocalSolve]) -> Result<()> {
    if locals.len() != part.i0 + 1 || locals.iter().enumerate().any(|(i, l)| l.strip != i) {
        return Err(Error::InvalidParameter(format!("expected locals for strips 0..={}", part.i0)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gluing {
    pub g: Vec<MatrixField>,
    pub g_inv: Vec<MatrixField>,
    /// Interior `sup|∂̄g_i|` per strip.
    pub holomorphy: Vec<f64>,
    /// `sup_i sup_{overlap} |g_{i−1} − H_i g_i| / sup|g_i|`.
    pub factorization: f64,
}

/// `g_i = P_i⁻¹ P` on `U_i`; then `H_i g_i = g_{i−1}` on every overlap.
pub fn derive_gluing(
    part: &StripPartition,
    global: &BeltramiSolution,
    locals: &[LocalSolve],
    transitions: &[Transition],
    margin: Margin,
) -> Result<Gluing> {
    check_locals(part, locals)?;
    let mut g = Vec::with_capacity(locals.len());
    let mut g_inv = Vec::with_capacity(locals.len());
    for l in locals {
        let sg = *l.p.grid();
        g.push(l.p_inv.mul(&global.p.restrict(&sg)?)?);
        g_inv.push(global.p_inv.restrict(&sg)?.mul(&l.p)?);
    }
    let holomorphy = g.iter().map(|gi| gi.dbar().interior_sup_opnorm(margin)).collect();
    let mut factorization = 0.0f64;
    for t in transitions {
        let i = t.index;
        let ov = *t.h.grid();
        let lhs = g[i - 1].restrict(&ov)?;
        let gi = g[i].restrict(&ov)?;
        let d = lhs.sub(&t.h.mul(&gi)?)?.sup_opnorm();
        factorization = factorization.max(d / gi.sup_opnorm().max(f64::MIN_POSITIVE));
    }
    Ok(Gluing { g, g_inv, holomorphy, factorization })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapBound {
    pub index: usize,
    /// `‖H_i‖ ≤ 10` and `‖H_i⁻¹‖ ≤ 10`, the lemma's hypothesis.
    pub hypothesis: bool,
    /// Range of `|g_{i−1}|/|g_i|` over the overlap.
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Range of `|g_{i−1}⁻¹|/|g_i⁻¹|`.
    pub inv_ratio_min: f64,
    pub inv_ratio_max: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GluingCertificate {
    pub delta: f64,
    pub overlaps: Vec<OverlapBound>,
    /// Every overlap whose hypothesis holds satisfies the ratio bounds.
    pub ratios_ok: bool,
    pub factorization: f64,
    pub factorization_ok: bool,
    /// `sup_i sup_{U_i} (|g_i|² + |g_i⁻¹|²)`.
    pub sup_g_sq: f64,
    /// `δ² ln(sup_g_sq)`.
    pub c_hat: f64,
    /// The family is not normalized on `∂R`, so the boundary bound
    /// `2/10² ≤ |g_i|² ≤ 2·10²` is reported, not asserted.
    pub boundary_normalized: bool,
    pub boundary_min: f64,
    pub boundary_max: f64,
    pub boundary_ok: Option<bool>,
}

/// Cells of strip `i`'s grid that lie on the boundary ring of the square.
fn boundary_cells(part: &StripPartition, i: usize, g: &Grid) -> Vec<usize> {
    let mut out = vec![];
    for j in 0..g.ny {
        for c in 0..g.nx {
            let edge_y = j == 0 || j + 1 == g.ny;
            let edge_x = (i == 0 && c == 0) || (i == part.i0 && c + 1 == g.nx);
            if edge_y || edge_x {
                out.push(g.index(c, j));
            }
        }
    }
    out
}

pub fn verify_gluing_bounds(part: &StripPartition, gl: &Gluing, transitions: &[Transition]) -> Result<GluingCertificate> {
    let mut overlaps = vec![];
    for t in transitions {
        let i = t.index;
        let ov = *t.h.grid();
        let (a, b) = (gl.g[i - 1].restrict(&ov)?, gl.g[i].restrict(&ov)?);
        let (ai, bi) = (gl.g_inv[i - 1].restrict(&ov)?, gl.g_inv[i].restrict(&ov)?);
        let (mut rmin, mut rmax, mut imin, mut imax) = (f64::INFINITY, 0.0f64, f64::INFINITY, 0.0f64);
        for k in 0..ov.len() {
            let r = a.at(k).frobenius() / b.at(k).frobenius();
            let s = ai.at(k).frobenius() / bi.at(k).frobenius();
            rmin = rmin.min(r);
            rmax = rmax.max(r);
            imin = imin.min(s);
            imax = imax.max(s);
        }
        let within = |lo: f64, hi: f64| lo >= 0.1 && hi <= 10.0;
        overlaps.push(OverlapBound {
            index: i,
            hypothesis: t.bounded(),
            ratio_min: rmin,
            ratio_max: rmax,
            inv_ratio_min: imin,
            inv_ratio_max: imax,
            holds: within(rmin, rmax) && within(imin, imax),
        });
    }
    let mut sup_g_sq = 0.0f64;
    let (mut bmin, mut bmax) = (f64::INFINITY, 0.0f64);
    for (i, (g, gi)) in gl.g.iter().zip(&gl.g_inv).enumerate() {
        for k in 0..g.grid().len() {
            sup_g_sq = sup_g_sq.max(g.at(k).frobenius_sq() + gi.at(k).frobenius_sq());
        }
        for k in boundary_cells(part, i, g.grid()) {
            let v = g.at(k).frobenius_sq();
            bmin = bmin.min(v);
            bmax = bmax.max(v);
        }
    }
    Ok(GluingCertificate {
        delta: part.delta,
        ratios_ok: overlaps.iter().all(|o| !o.hypothesis || o.holds),
        overlaps,
        factorization: gl.factorization,
        factorization_ok: gl.factorization <= 1e-6,
        sup_g_sq,
        c_hat: part.delta * part.delta * sup_g_sq.ln(),
        boundary_normalized: false,
        boundary_min: bmin,
        boundary_max: bmax,
        boundary_ok: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    /// Cells per unit `δ/2`.
    pub m: usize,
    pub neumann: NeumannConfig,
    pub global: GlobalConfig,
    /// Margin for the holomorphy residuals of `H_i` and `g_i`.
    pub margin: Margin,
    /// Relative tolerance (times `h²`) in the discrete subharmonicity check.
    pub subharmonic_tol: f64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            m: 12,
            neumann: NeumannConfig::default(),
            global: GlobalConfig::default(),
            margin: Margin::Cells(1),
            subharmonic_tol: 1.0,
        }
    }
}

/// The full chain on the unit square: global solve, local strip solves,
/// transitions, gluing and both certificates. `a` is sampled on
/// `part.grid(cfg.m)`.
pub fn solve_on_partition(a: &MatrixField, part: &StripPartition, cfg: &PartitionConfig) -> Result<BeltramiSolution> {
    let grid = part.grid(cfg.m)?;
    a.a11.check_same(&grid)?;
    let mut sol = global_solve(a, &CauchyOp::new(grid), &cfg.global)?;
    let locals = (0..=part.i0)
        .into_par_iter()
        .map(|i| {
            let (_, sg) = part.window(part.strip_span(i), cfg.m)?;
            local_neumann_solve(&a.restrict(&sg)?, i, &CauchyOp::new(sg), &cfg.neumann)
        })
        .collect::<Result<Vec<_>>>()?;
    let transitions = transition_matrices(part, cfg.m, &locals, cfg.margin)?;
    let gl = derive_gluing(part, &sol, &locals, &transitions, cfg.margin)?;
    let gcert = verify_gluing_bounds(part, &gl, &transitions)?;
    let schedule = MajorantSchedule::new(part.delta)?;
    let (_, mcert) = majorant(part, cfg.m, &gl.g, &schedule, cfg.subharmonic_tol)?;
    sol.locals = locals;
    sol.transitions = transitions;
    sol.gluing = gl.g;
    sol.certificates.gluing = Some(gcert);
    sol.certificates.majorant = Some(mcert);
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::partition::make_partition;
    use crate::similarity::sweep::RandomMatrix;

    #[test]
    fn zero_a_is_all_identity() {
        let part = make_partition(2.0 / 7.0).unwrap();
        let cfg = PartitionConfig { m: 4, ..Default::default() };
        let g = part.grid(cfg.m).unwrap();
        let s = solve_on_partition(&MatrixField::zeros(g), &part, &cfg).unwrap();
        for t in &s.transitions {
            assert_eq!(t.sup_norm, 1.0);
            assert_eq!(t.sup_inv_norm, 1.0);
            assert!(t.holomorphy <= 1e-10);
        }
        for gi in &s.gluing {
            assert_eq!(*gi, MatrixField::identity(*gi.grid()));
        }
        let c = s.certificates.gluing.unwrap();
        assert!(c.ratios_ok);
        assert!(c.overlaps.iter().all(|o| o.ratio_min == 1.0 && o.ratio_max == 1.0));
    }

    #[test]
    fn random_a_suite() {
        let part = make_partition(2.0 / 7.0).unwrap();
        let cfg = PartitionConfig::default();
        let g = part.grid(cfg.m).unwrap();
        let a = RandomMatrix::new(4, 0.3).sample(g);
        let s = solve_on_partition(&a, &part, &cfg).unwrap();
        assert!(s.locals.iter().all(|l| l.certificate.certified));
        assert!(s.transitions.iter().all(|t| t.bounded()));
        let c = s.certificates.gluing.unwrap();
        assert!(c.ratios_ok);
        assert!(c.factorization_ok, "{}", c.factorization);
    }

    #[test]
    fn holomorphy_improves_under_refinement() {
        let part = make_partition(0.4).unwrap();
        let mut hs = vec![];
        for m in [6, 12, 24] {
            let cfg = PartitionConfig { m, margin: Margin::Width(0.05), ..Default::default() };
            let a = RandomMatrix::new(9, 0.3).sample(part.grid(m).unwrap());
            let s = solve_on_partition(&a, &part, &cfg).unwrap();
            hs.push(s.transitions[0].holomorphy);
        }
        let order = (hs[1] / hs[2]).log2();
        assert!(order >= 0.9, "{hs:?}");
    }
}
