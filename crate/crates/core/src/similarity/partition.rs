//! Strip partitions of the unit square and the choice of δ.
//!
//! Admissible widths are `δ = 2/(2k+3)`, so every endpoint is an integer
//! multiple of the unit `δ/2 = 1/(2k+3)`. All geometry is kept in those
//! integer units and only converted to reals on the way out.

use serde::{Deserialize, Serialize};

use crate::cauchy::rect_integral_abs_inv;
use crate::field::Grid;
use crate::{Error, Result};

/// `M₀`: smallest `M` for which `δ = c₁/(M ln M)` is used.
pub const M0: f64 = 2.0;

/// A `c₁` small enough that the contraction constraint holds for every
/// `M ≥ M₀` with the strip norm computed by [`strip_norm`].
pub const DEFAULT_C1: f64 = 0.025;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }
}

/// `[start, end)` in units of `δ/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripPartition {
    pub delta: f64,
    /// `δ = 2/(2k+3)`; `i₀ = k`.
    pub k: usize,
    pub i0: usize,
    pub v: Vec<(f64, f64)>,
    pub u: Vec<Rect>,
    /// `overlaps[i-1] = U_{i-1} ∩ U_i`, `i = 1..=i₀`.
    pub overlaps: Vec<Rect>,
    pub w: Vec<Rect>,
}

fn denom(k: usize) -> usize {
    2 * k + 3
}

/// `2/(2k+3)`.
pub fn admissible(k: usize) -> f64 {
    2.0 / denom(k) as f64
}

/// Largest admissible `δ ≤ raw` (with `k ≥ 1`), and its `k`.
pub fn admissible_floor(raw: f64) -> Result<(usize, f64)> {
    if !(raw > 0.0) || !raw.is_finite() {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {raw}")));
    }
    let mut k = ((2.0 / raw - 3.0) / 2.0).ceil().max(1.0) as usize;
    while k > 1 && admissible(k - 1) <= raw {
        k -= 1;
    }
    while admissible(k) > raw {
        k += 1;
    }
    Ok((k, admissible(k)))
}

fn rect(span: Span, k: usize) -> Rect {
    let d = denom(k) as f64;
    Rect { x0: span.start as f64 / d, x1: span.end as f64 / d, y0: 0.0, y1: 1.0 }
}

impl StripPartition {
    /// `U_i` in units.
    pub fn strip_span(&self, i: usize) -> Span {
        Span { start: 2 * i, end: 2 * i + 3 }
    }

    /// `U_{i-1} ∩ U_i` in units, `1 ≤ i ≤ i₀`.
    pub fn overlap_span(&self, i: usize) -> Span {
        Span { start: 2 * i, end: 2 * i + 1 }
    }

    pub fn w_span(&self, i: usize) -> Span {
        let start = if i == 0 { 0 } else { 2 * i + 1 };
        let end = if i == self.i0 { 2 * i + 3 } else { 2 * i + 2 };
        Span { start, end }
    }

    /// Number of units across `[0, 1]`.
    pub fn units(&self) -> usize {
        denom(self.k)
    }

    /// The unit square at `m` cells per unit, i.e. `n = (2k+3)m`.
    pub fn grid(&self, m: usize) -> Result<Grid> {
        let n = self.units() * m;
        Grid::rect(0.0, 0.0, 1.0 / n as f64, n, n)
    }

    /// Column window `[start·m, end·m)` of the square grid at `m` cells per unit.
    pub fn window(&self, span: Span, m: usize) -> Result<(usize, Grid)> {
        let g = self.grid(m)?;
        let i0 = span.start * m;
        Ok((i0, g.window(i0, 0, (span.end - span.start) * m, g.ny)?))
    }

    /// `x_i^- = iδ` and `x_i^+ = iδ + δ/2`.
    pub fn interfaces(&self, i: usize) -> (f64, f64) {
        let d = denom(self.k) as f64;
        ((2 * i) as f64 / d, (2 * i + 1) as f64 / d)
    }
}

/// The partition for an admissible `δ`.
pub fn make_partition(delta: f64) -> Result<StripPartition> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let i0f = 1.0 / delta - 1.5;
    let k = i0f.round();
    if (i0f - k).abs() > 1e-9 || k < 1.0 {
        let (kb, below) = admissible_floor(delta)?;
        let above = if kb > 1 { admissible(kb - 1) } else { below };
        return Err(Error::InadmissibleDelta { delta, below, above });
    }
    let k = k as usize;
    let mut p = StripPartition { delta: admissible(k), k, i0: k, v: vec![], u: vec![], overlaps: vec![], w: vec![] };
    for i in 0..=k {
        let r = rect(p.strip_span(i), k);
        p.v.push((r.x0, r.x1));
        p.u.push(r);
        p.w.push(rect(p.w_span(i), k));
    }
    for i in 1..=k {
        p.overlaps.push(rect(p.overlap_span(i), k));
    }
    Ok(p)
}

/// `sup_{z∈R_δ} (1/π)∫_{R_δ} dA/|z−ξ|` for `R_δ = [0, 1.5δ] × [0, 1]`,
/// evaluated exactly at the center where the potential peaks. This bounds
/// the `L∞ → L∞` norm of `T_{R_δ}`, continuous or discretized on cells.
pub fn strip_norm(delta: f64) -> f64 {
    let a = 0.75 * delta;
    rect_integral_abs_inv(-a, a, -0.5, 0.5) / std::f64::consts::PI
}

/// `Ĉ₁(δ)` with `‖T_{R_δ}‖ = Ĉ₁ δ ln(1/δ)`.
pub fn c1_hat(delta: f64) -> f64 {
    strip_norm(delta) / (delta * (1.0 / delta).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaChoice {
    pub m: f64,
    pub c1: f64,
    /// `c₁/(M ln M)`.
    pub raw: f64,
    pub k: usize,
    pub delta: f64,
    /// `Ĉ₁ δ ln(1/δ) M`, required `≤ 1/3`.
    pub constraint: f64,
}

/// `δ = c₁/(M ln M)` rounded down to an admissible value, then checked
/// against `Ĉ₁ δ ln(1/δ) M ≤ 1/3`.
pub fn choose_delta(m: f64, c1: f64) -> Result<DeltaChoice> {
    if !(m >= M0) {
        return Err(Error::InvalidParameter(format!("M = {m} below M0 = {M0}")));
    }
    if !(c1 > 0.0) {
        return Err(Error::InvalidParameter(format!("c1 must be positive, got {c1}")));
    }
    let raw = c1 / (m * m.ln());
    let (k, delta) = admissible_floor(raw)?;
    let constraint = strip_norm(delta) * m;
    if constraint > 1.0 / 3.0 {
        return Err(Error::InvalidParameter(format!(
            "c1 = {c1} gives delta = {delta:.6} with C1*delta*ln(1/delta)*M = {constraint:.4} > 1/3; use a smaller c1"
        )));
    }
    Ok(DeltaChoice { m, c1, raw, k, delta, constraint })
}

/// Largest admissible `δ` meeting the constraint directly.
pub fn auto_delta(m: f64) -> Result<DeltaChoice> {
    if !(m > 0.0) {
        return Err(Error::InvalidParameter(format!("M must be positive, got {m}")));
    }
    let mut k = 1;
    while strip_norm(admissible(k)) * m > 1.0 / 3.0 {
        k = if k < 64 { k + 1 } else { k + k / 8 };
    }
    while k > 1 && strip_norm(admissible(k - 1)) * m <= 1.0 / 3.0 {
        k -= 1;
    }
    let delta = admissible(k);
    Ok(DeltaChoice { m, c1: f64::NAN, raw: delta, k, delta, constraint: strip_norm(delta) * m })
}
