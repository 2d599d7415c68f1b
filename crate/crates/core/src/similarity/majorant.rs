//! The piecewise subharmonic majorant built from `|g_i|²` and exponential
//! weights, assembled and checked in log-space.

use std::f64::consts::LN_10;

use serde::{Deserialize, Serialize};

use super::matrix::MatrixField;
use super::partition::StripPartition;
use crate::field::RealField;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorantSchedule {
    pub delta: f64,
    pub i0: usize,
    pub a_const: f64,
    pub b_const: f64,
    pub c_plus: Vec<f64>,
    pub b_plus: Vec<f64>,
    /// `c_i^- = c_{i−1}^+`; index 0 is unused and holds 0.
    pub c_minus: Vec<f64>,
    pub b_minus: Vec<f64>,
}

impl MajorantSchedule {
    pub fn new(delta: f64) -> Result<Self> {
        let i0f = 1.0 / delta - 1.5;
        if !(i0f.is_finite() && (i0f - i0f.round()).abs() <= 1e-9 && i0f.round() >= 1.0) {
            return Err(Error::InvalidParameter(format!("delta = {delta} is not 2/(2k+3)")));
        }
        let i0 = i0f.round() as usize;
        let (a, b) = (10.5 * LN_10, 3.0 * LN_10);
        let c_plus: Vec<f64> = (0..=i0).map(|i| i as f64 * a / delta).collect();
        let b_plus: Vec<f64> = (0..=i0).map(|i| -((i * (i + 1)) as f64 / 2.0) * a - i as f64 * b).collect();
        let shift = |v: &[f64]| std::iter::once(0.0).chain(v[..i0].iter().copied()).collect();
        Ok(MajorantSchedule { delta, i0, a_const: a, b_const: b, c_minus: shift(&c_plus), b_minus: shift(&b_plus), c_plus, b_plus })
    }

    /// `c_i^+ x + b_i^+`.
    #[inline]
    pub fn weight(&self, i: usize, x: f64) -> f64 {
        self.c_plus[i] * x + self.b_plus[i]
    }

    /// `ln 2 + (i₀(i₀+1)/2)A − i₀B`, the stated bound for `ln v` on `∂R`.
    pub fn boundary_log_bound(&self) -> f64 {
        let i0 = self.i0 as f64;
        2f64.ln() + i0 * (i0 + 1.0) / 2.0 * self.a_const - i0 * self.b_const
    }

    /// `ln 2 + (i₀(i₀+2)/2)A − i₀B`, the value of `ln v` at `x = 1` for the
    /// identity family.
    pub fn right_edge_log_value(&self) -> f64 {
        let i0 = self.i0 as f64;
        2f64.ln() + i0 * (i0 + 2.0) / 2.0 * self.a_const - i0 * self.b_const
    }
}

/// Band widths, in units of `δ`, next to `x_i^-` and `x_i^+` inside which
/// the continuity argument fixes the active branch. The right band solves
/// `10² e^{Aε + B − A/2} ≤ 1`.
pub const LEFT_BAND: f64 = 1.0 / 10.5;
pub const RIGHT_BAND: f64 = 1.0 / 42.0;
pub const RIGHT_BAND_AS_STATED: f64 = 11.0 / 21.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceCheck {
    pub index: usize,
    pub left_cells: usize,
    pub left_violations: usize,
    pub right_cells: usize,
    pub right_violations: usize,
    /// Same check over the wider band `11δ/21`.
    pub stated_band_cells: usize,
    pub stated_band_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorantCertificate {
    pub interfaces: Vec<InterfaceCheck>,
    /// Every band holds at least one cell and no cell picks the wrong branch.
    pub continuity_ok: bool,
    pub stated_band_ok: bool,
    /// `max (1 − mean₄(v)/v) / h²` over interior cells.
    pub subharmonic_defect: f64,
    pub subharmonic_tol: f64,
    pub subharmonic_ok: bool,
    pub boundary_log_max: f64,
    pub boundary_log_bound: f64,
    pub boundary_ok: bool,
    pub right_edge_log_value: f64,
    /// `max ln v` over the square, and `δ² max ln v`.
    pub log_sup: f64,
    pub c_estimate: f64,
}

impl MajorantCertificate {
    pub fn passed(&self) -> bool {
        self.continuity_ok && self.subharmonic_ok && self.boundary_ok
    }
}

/// Assemble `ln v` on `part.grid(m)` from `g_i` on the strip grids.
pub fn majorant(part: &StripPartition, m: usize, g: &[MatrixField], schedule: &MajorantSchedule, subharmonic_tol: f64) -> Result<(RealField, MajorantCertificate)> {
    if g.len() != part.i0 + 1 || schedule.i0 != part.i0 {
        return Err(Error::InvalidParameter("gluing family and schedule do not match the partition".into()));
    }
    let grid = part.grid(m)?;
    for (i, gi) in g.iter().enumerate() {
        if !gi.grid().matches(&part.window(part.strip_span(i), m)?.1) {
            return Err(Error::GridMismatch);
        }
    }
    let branch = |j: usize, c: usize, row: usize| -> f64 {
        let local = g[j].grid().index(c - 2 * m * j, row);
        g[j].at(local).frobenius_sq().ln() + schedule.weight(j, grid.x(c))
    };
    let overlap_at = |c: usize| -> Option<usize> {
        let u = c / m;
        (u % 2 == 0 && u >= 2 && u <= 2 * part.i0).then_some(u / 2)
    };
    let w_at = |c: usize| -> usize {
        let u = c / m;
        if u == 0 { 0 } else if u % 2 == 1 { (u - 1) / 2 } else { part.i0 }
    };
    let mut s = vec![0.0; grid.len()];
    for row in 0..grid.ny {
        for c in 0..grid.nx {
            s[grid.index(c, row)] = match overlap_at(c) {
                Some(i) => branch(i - 1, c, row).max(branch(i, c, row)),
                None => branch(w_at(c), c, row),
            };
        }
    }
    let log_v = RealField::new(grid, s)?;

    let delta = part.delta;
    let mut interfaces = vec![];
    for i in 1..=part.i0 {
        let (xm, xp) = part.interfaces(i);
        let mut chk = InterfaceCheck { index: i, left_cells: 0, left_violations: 0, right_cells: 0, right_violations: 0, stated_band_cells: 0, stated_band_violations: 0 };
        for c in 2 * m * i..2 * m * i + m {
            let x = grid.x(c);
            for row in 0..grid.ny {
                let (lo, hi) = (branch(i - 1, c, row), branch(i, c, row));
                if x - xm < LEFT_BAND * delta {
                    chk.left_cells += 1;
                    chk.left_violations += usize::from(lo < hi);
                }
                if xp - x < RIGHT_BAND * delta {
                    chk.right_cells += 1;
                    chk.right_violations += usize::from(hi < lo);
                }
                if xp - x < RIGHT_BAND_AS_STATED * delta {
                    chk.stated_band_cells += 1;
                    chk.stated_band_violations += usize::from(hi < lo);
                }
            }
        }
        interfaces.push(chk);
    }
    let continuity_ok = interfaces
        .iter()
        .all(|c| c.left_cells > 0 && c.right_cells > 0 && c.left_violations == 0 && c.right_violations == 0);
    let stated_band_ok = interfaces.iter().all(|c| c.stated_band_violations == 0);

    let h2 = grid.h * grid.h;
    let lv = log_v.values();
    let mut defect = f64::NEG_INFINITY;
    for row in 1..grid.ny - 1 {
        for c in 1..grid.nx - 1 {
            let s0 = lv[grid.index(c, row)];
            let nb = [grid.index(c - 1, row), grid.index(c + 1, row), grid.index(c, row - 1), grid.index(c, row + 1)];
            let mean = nb.iter().map(|&k| (lv[k] - s0).exp()).sum::<f64>() / 4.0;
            defect = defect.max((1.0 - mean) / h2);
        }
    }
    let mut boundary_log_max = f64::NEG_INFINITY;
    for row in 0..grid.ny {
        for c in 0..grid.nx {
            if row == 0 || c == 0 || row + 1 == grid.ny || c + 1 == grid.nx {
                boundary_log_max = boundary_log_max.max(lv[grid.index(c, row)]);
            }
        }
    }
    let boundary_log_bound = schedule.boundary_log_bound();
    let log_sup = log_v.max_value();
    let cert = MajorantCertificate {
        interfaces,
        continuity_ok,
        stated_band_ok,
        subharmonic_defect: defect,
        subharmonic_tol,
        subharmonic_ok: defect <= subharmonic_tol,
        boundary_log_max,
        boundary_log_bound,
        boundary_ok: boundary_log_max <= boundary_log_bound + 1e-12 * boundary_log_bound.abs(),
        right_edge_log_value: schedule.right_edge_log_value(),
        log_sup,
        c_estimate: delta * delta * log_sup,
    };
    Ok((log_v, cert))
}
