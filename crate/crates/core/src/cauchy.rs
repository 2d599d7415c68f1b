//! The Cauchy–Pompeiu transform `T F(z) = (1/π) ∫ F(ξ)/(z − ξ) dA(ξ)` on
//! cell-centered grids.
//!
//! `F` is taken piecewise constant on cells, so the transform is a discrete
//! convolution against the cell weights `W(d) = (1/π) ∫_{cell(d)} dA(t)/t`.
//! Near the singularity the weights are the closed-form cell integrals; far
//! away the midpoint value `h²/(πd)` is used, which is fourth order because
//! `1/t` is harmonic.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::field::{dbar, ComplexField, Grid, Margin, C64};
use crate::{Error, Result};

/// Cells within this Chebyshev offset get the exact integral.
const NEAR: f64 = 8.5;

/// `x ln|...|`-type terms vanish at the axes; keep the limits explicit.
fn g1(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    if r2 == 0.0 {
        return 0.0;
    }
    let a = if x == 0.0 { 0.0 } else { x * (y / x).atan() };
    0.5 * y * r2.ln() - y + a
}

/// Mixed antiderivative of `1/|t|`: `∂x∂y K = 1/sqrt(x²+y²)`.
fn k_abs(x: f64, y: f64) -> f64 {
    let a = if x == 0.0 { 0.0 } else { x * (y / x.abs()).asinh() };
    let b = if y == 0.0 { 0.0 } else { y * (x / y.abs()).asinh() };
    a + b
}

fn rect_eval(f: impl Fn(f64, f64) -> f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    f(x1, y1) - f(x0, y1) - f(x1, y0) + f(x0, y0)
}

/// `∫_{[x0,x1]×[y0,y1]} dA(t)/t`, exact.
pub fn rect_integral_inv(x0: f64, x1: f64, y0: f64, y1: f64) -> C64 {
    // 1/t = (x − iy)/|t|²; the y/|t|² part is the x/|t|² part with axes swapped.
    let re = rect_eval(g1, x0, x1, y0, y1);
    let im = rect_eval(|x, y| g1(y, x), x0, x1, y0, y1);
    C64::new(re, -im)
}

/// `∫_{[x0,x1]×[y0,y1]} dA(t)/|t|`, exact.
pub fn rect_integral_abs_inv(x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    rect_eval(k_abs, x0, x1, y0, y1)
}

/// Weight of a source cell whose center sits at `z − d`.
#[inline]
pub fn cell_weight(d: C64, h: f64) -> C64 {
    let (u, v) = (d.re / h, d.im / h);
    if u.abs().max(v.abs()) <= NEAR {
        rect_integral_inv(u - 0.5, u + 0.5, v - 0.5, v + 0.5) * (h / PI)
    } else {
        h * h / (PI * d)
    }
}

/// `(1/π) ∫_{cell(d)} dA(t)/|t|`, exact at every offset. Dominates `|W(d)|`.
#[inline]
pub fn cell_mass(d: C64, h: f64) -> f64 {
    let (u, v) = (d.re / h, d.im / h);
    rect_integral_abs_inv(u - 0.5, u + 0.5, v - 0.5, v + 0.5) * (h / PI)
}

struct Convolver {
    lx: usize,
    ly: usize,
    khat: Vec<C64>,
    fwd_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

fn fft_rows(data: &mut [C64], len: usize, plan: &Arc<dyn Fft<f64>>) {
    data.par_chunks_mut(len).for_each_init(
        || vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()],
        |scratch, row| plan.process_with_scratch(row, scratch),
    );
}

fn transpose(src: &[C64], rows: usize, cols: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); src.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = src[r * cols + c];
        }
    }
    out
}

impl Convolver {
    /// Linear convolution on an `nx × ny` lattice with kernel `k(di, dj)`.
    fn new(nx: usize, ny: usize, k: impl Fn(isize, isize) -> C64 + Sync) -> Self {
        let (lx, ly) = (2 * nx, 2 * ny);
        let mut planner = FftPlanner::new();
        let fwd_x = planner.plan_fft_forward(lx);
        let fwd_y = planner.plan_fft_forward(ly);
        let inv_x = planner.plan_fft_inverse(lx);
        let inv_y = planner.plan_fft_inverse(ly);
        let wrap = |i: usize, l: usize| if i < l / 2 { i as isize } else { i as isize - l as isize };
        let kern: Vec<C64> = (0..lx * ly)
            .into_par_iter()
            .map(|p| {
                let (i, j) = (wrap(p % lx, lx), wrap(p / lx, ly));
                if i.unsigned_abs() < nx && j.unsigned_abs() < ny { k(i, j) } else { C64::new(0.0, 0.0) }
            })
            .collect();
        let mut c = Convolver { lx, ly, khat: kern, fwd_x, fwd_y, inv_x, inv_y };
        let mut khat = std::mem::take(&mut c.khat);
        c.forward(&mut khat);
        c.khat = khat;
        c
    }

    fn forward(&self, data: &mut Vec<C64>) {
        fft_rows(data, self.lx, &self.fwd_x);
        let mut t = transpose(data, self.ly, self.lx);
        fft_rows(&mut t, self.ly, &self.fwd_y);
        *data = t;
    }

    /// Input: `nx × ny` row-major values. Output: same shape.
    fn apply(&self, values: &[C64], nx: usize, ny: usize) -> Vec<C64> {
        let (lx, ly) = (self.lx, self.ly);
        let mut buf = vec![C64::new(0.0, 0.0); lx * ly];
        for j in 0..ny {
            buf[j * lx..j * lx + nx].copy_from_slice(&values[j * nx..(j + 1) * nx]);
        }
        self.forward(&mut buf);
        // buf is now column-major (ly-long rows per x index), as is khat.
        buf.par_iter_mut().zip(&self.khat).for_each(|(b, k)| *b *= k);
        fft_rows(&mut buf, ly, &self.inv_y);
        let mut t = transpose(&buf, lx, ly);
        fft_rows(&mut t, lx, &self.inv_x);
        let scale = 1.0 / (lx * ly) as f64;
        let mut out = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            out.extend(t[j * lx..j * lx + nx].iter().map(|v| v * scale));
        }
        out
    }
}

/// Source-side domain restriction used for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Mask {
    Full,
    Disk { center: C64, radius: f64 },
}

impl Mask {
    #[inline]
    fn keeps(&self, z: C64) -> bool {
        match *self {
            Mask::Full => true,
            Mask::Disk { center, radius } => (z - center).norm_sqr() <= radius * radius,
        }
    }
}

/// `T` with source cells on `grid` (optionally masked to a disk).
pub struct CauchyOp {
    grid: Grid,
    mask: Mask,
    conv: OnceLock<Convolver>,
    mass: OnceLock<Convolver>,
}

impl fmt::Debug for CauchyOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CauchyOp").field("grid", &self.grid).field("mask", &self.mask).finish()
    }
}

impl Clone for CauchyOp {
    fn clone(&self) -> Self {
        CauchyOp::with_mask(self.grid, self.mask)
    }
}

impl CauchyOp {
    pub fn new(grid: Grid) -> Self {
        Self::with_mask(grid, Mask::Full)
    }

    pub fn disk(grid: Grid, center: C64, radius: f64) -> Self {
        Self::with_mask(grid, Mask::Disk { center, radius })
    }

    pub fn with_mask(grid: Grid, mask: Mask) -> Self {
        CauchyOp { grid, mask, conv: OnceLock::new(), mass: OnceLock::new() }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mask(&self) -> Mask {
        self.mask
    }

    fn masked(&self, f: &ComplexField) -> Result<Vec<C64>> {
        f.check_same(&self.grid)?;
        Ok(match self.mask {
            Mask::Full => f.values().to_vec(),
            m => f
                .values()
                .iter()
                .enumerate()
                .map(|(k, &v)| if m.keeps(self.grid.point_at(k)) { v } else { C64::new(0.0, 0.0) })
                .collect(),
        })
    }

    fn conv(&self) -> &Convolver {
        self.conv.get_or_init(|| {
            let h = self.grid.h;
            Convolver::new(self.grid.nx, self.grid.ny, move |i, j| {
                cell_weight(C64::new(i as f64 * h, j as f64 * h), h)
            })
        })
    }

    /// `T F` at every cell center of the source grid (FFT path).
    pub fn transform(&self, f: &ComplexField) -> Result<ComplexField> {
        let src = self.masked(f)?;
        let out = self.conv().apply(&src, self.grid.nx, self.grid.ny);
        ComplexField::new(self.grid, out)
    }

    /// `T F` at arbitrary points by direct summation.
    pub fn transform_at(&self, f: &ComplexField, targets: &[C64]) -> Result<Vec<C64>> {
        let src = self.masked(f)?;
        let g = self.grid;
        Ok(targets
            .par_iter()
            .map(|&z| {
                let mut acc = C64::new(0.0, 0.0);
                for (k, &v) in src.iter().enumerate() {
                    if v != C64::new(0.0, 0.0) {
                        acc += v * cell_weight(z - g.point_at(k), g.h);
                    }
                }
                acc
            })
            .collect())
    }

    /// Direct summation at the source cell centers; reference for the FFT path.
    pub fn transform_naive(&self, f: &ComplexField) -> Result<ComplexField> {
        let targets: Vec<C64> = (0..self.grid.len()).map(|k| self.grid.point_at(k)).collect();
        ComplexField::new(self.grid, self.transform_at(f, &targets)?)
    }

    /// `(1/π) ∫_domain dA(ξ)/|z − ξ|` at every cell center, summed from
    /// exact cell integrals over the unmasked cells.
    pub fn mass_field(&self) -> ComplexField {
        let conv = self.mass.get_or_init(|| {
            let h = self.grid.h;
            Convolver::new(self.grid.nx, self.grid.ny, move |i, j| {
                C64::new(cell_mass(C64::new(i as f64 * h, j as f64 * h), h), 0.0)
            })
        });
        let ind = ComplexField::constant(self.grid, C64::new(1.0, 0.0));
        let src = self.masked(&ind).expect("own grid");
        ComplexField::from_parts(*self.grid(), conv.apply(&src, self.grid.nx, self.grid.ny))
    }

    /// Upper bound on the discrete `L∞ → L∞` norm: `max_z Σ_cells |W|`,
    /// dominated by the exact mass of the kernel.
    pub fn linf_bound(&self) -> f64 {
        let g = self.grid;
        let m = self.mass_field();
        (0..g.len())
            .filter(|&k| self.mask.keeps(g.point_at(k)))
            .map(|k| m.values()[k].re)
            .fold(0.0, f64::max)
    }
}

/// Interior sup of `|∂̄(T F) − F χ|` over `sup |F|`. Only cells at least
/// `margin` inside the domain (grid edge and, for a disk, the circle) count.
pub fn dbar_inverse_residual(op: &CauchyOp, f: &ComplexField, margin: Margin) -> Result<f64> {
    let scale = f.max_modulus();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let tf = op.transform(f)?;
    let r = dbar(&tf);
    let g = op.grid();
    let w = g.margin_cells(margin) as f64 * g.h;
    let mut sup = 0.0f64;
    let mut seen = false;
    for k in g.interior(margin) {
        let z = g.point_at(k);
        let inside = match op.mask() {
            Mask::Full => true,
            Mask::Disk { center, radius } => (z - center).norm() <= radius - w - 0.5 * g.h,
        };
        if inside {
            seen = true;
            sup = sup.max((r.values()[k] - f.values()[k]).norm());
        }
    }
    if !seen {
        return Err(Error::EmptyRegion);
    }
    Ok(sup / scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
    Disk { center: C64, radius: f64 },
}

impl Domain {
    pub fn square(center: C64, half_side: f64) -> Self {
        Domain::Rect { x0: center.re - half_side, x1: center.re + half_side, y0: center.im - half_side, y1: center.im + half_side }
    }

    /// The strip `[0, 1.5δ] × [0, 1]`.
    pub fn strip(delta: f64) -> Self {
        Domain::Rect { x0: 0.0, x1: 1.5 * delta, y0: 0.0, y1: 1.0 }
    }
}

/// `sup_z ∫_domain dA(ξ)/|z − ξ|`, maximized over `n × n` sample points.
///
/// Rectangles use the exact integral at each sample; disks are covered by
/// the cells of an `n × n` grid on the bounding square.
pub fn kernel_mass(domain: Domain, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::GridTooSmall { min: 2, got: n });
    }
    match domain {
        Domain::Rect { x0, x1, y0, y1 } => {
            if !(x1 > x0 && y1 > y0) {
                return Err(Error::InvalidParameter("empty rectangle".into()));
            }
            let (hx, hy) = ((x1 - x0) / n as f64, (y1 - y0) / n as f64);
            Ok((0..n * n)
                .into_par_iter()
                .map(|k| {
                    let x = x0 + ((k % n) as f64 + 0.5) * hx;
                    let y = y0 + ((k / n) as f64 + 0.5) * hy;
                    rect_integral_abs_inv(x0 - x, x1 - x, y0 - y, y1 - y)
                })
                .reduce(|| 0.0, f64::max))
        }
        Domain::Disk { center, radius } => {
            let g = Grid::square(center, radius, n)?;
            Ok(PI * CauchyOp::disk(g, center, radius).linf_bound())
        }
    }
}

/// `(1/π) max_{s ∈ [1, 3/2]} kernel_mass(Q_s)`, sampled at `n_samples`
/// equally spaced `s`, each on an `n × n` sample lattice.
pub fn c_infty_estimate(n_samples: usize, n: usize) -> Result<f64> {
    let samples = n_samples.max(1);
    let mut best = 0.0f64;
    for k in 0..samples {
        let s = if samples == 1 { 1.5 } else { 1.0 + 0.5 * k as f64 / (samples - 1) as f64 };
        best = best.max(kernel_mass(Domain::square(C64::new(0.0, 0.0), s), n)?);
    }
    Ok(best / PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(f: impl Fn(f64, f64) -> C64, x0: f64, x1: f64, y0: f64, y1: f64, m: usize) -> C64 {
        let (hx, hy) = ((x1 - x0) / m as f64, (y1 - y0) / m as f64);
        let mut s = C64::new(0.0, 0.0);
        for j in 0..m {
            for i in 0..m {
                s += f(x0 + (i as f64 + 0.5) * hx, y0 + (j as f64 + 0.5) * hy);
            }
        }
        s * hx * hy
    }

    #[test]
    fn closed_forms_match_brute_force_off_singularity() {
        let (x0, x1, y0, y1) = (0.3, 1.1, -0.4, 0.7);
        let exact = rect_integral_inv(x0, x1, y0, y1);
        let approx = brute(|x, y| 1.0 / C64::new(x, y), x0, x1, y0, y1, 2000);
        assert!((exact - approx).norm() < 1e-6, "{exact} {approx}");
        let exact = rect_integral_abs_inv(x0, x1, y0, y1);
        let approx = brute(|x, y| C64::new(1.0 / x.hypot(y), 0.0), x0, x1, y0, y1, 2000).re;
        assert!((exact - approx).abs() < 1e-6);
    }

    #[test]
    fn centered_cell_integral_vanishes_and_mass_is_known() {
        assert!(rect_integral_inv(-0.5, 0.5, -0.5, 0.5).norm() < 1e-15);
        // ∫_{[-1,1]²} 1/|t| = 8 asinh(1).
        let m = rect_integral_abs_inv(-1.0, 1.0, -1.0, 1.0);
        assert!((m - 8.0 * 1f64.asinh()).abs() < 1e-13);
    }

    #[test]
    fn integral_across_an_axis_is_additive() {
        let whole = rect_integral_inv(-0.3, 0.8, -0.6, 0.2);
        let left = rect_integral_inv(-0.3, 0.0, -0.6, 0.2);
        let right = rect_integral_inv(0.0, 0.8, -0.6, 0.2);
        assert!((whole - left - right).norm() < 1e-14);
    }

    #[test]
    fn far_weight_switch_is_smooth() {
        let h = 0.01;
        let d_in = C64::new(8.0 * h, 3.0 * h);
        let d_out = C64::new(9.0 * h, 3.0 * h);
        let exact_out = rect_integral_inv(8.5, 9.5, 2.5, 3.5) * (h / PI);
        assert!((cell_weight(d_out, h) - exact_out).norm() < 1e-5 * exact_out.norm());
        assert!(cell_weight(d_in, h).norm() > 0.0);
    }

    #[test]
    fn fft_and_naive_paths_agree() {
        let g = Grid::square(C64::new(0.1, -0.2), 1.0, 24).unwrap();
        let f = ComplexField::from_fn(g, |z| (z * C64::new(0.3, 1.2)).sin() + z.conj());
        let op = CauchyOp::new(g);
        let a = op.transform(&f).unwrap();
        let b = op.transform_naive(&f).unwrap();
        let err = a.try_sub(&b).unwrap().max_modulus();
        assert!(err < 1e-10 * b.max_modulus(), "{err}");
    }

    #[test]
    fn transform_of_one_on_disk_is_zbar() {
        let n = 96;
        let g = Grid::square(C64::new(0.0, 0.0), 1.2, n).unwrap();
        let op = CauchyOp::disk(g, C64::new(0.0, 0.0), 1.0);
        let t = op.transform(&ComplexField::constant(g, C64::new(1.0, 0.0))).unwrap();
        let mut err = 0.0f64;
        for k in 0..g.len() {
            let z = g.point_at(k);
            if z.norm() <= 1.0 {
                err = err.max((t.values()[k] - z.conj()).norm());
            }
        }
        assert!(err <= 5.0 * g.h, "{err}");
    }

    #[test]
    fn linf_bound_dominates_transform() {
        let g = Grid::square(C64::new(0.0, 0.0), 1.0, 32).unwrap();
        let op = CauchyOp::new(g);
        let f = ComplexField::from_fn(g, |z| C64::from_polar(1.0, 3.0 * z.re - z.im * z.im));
        let t = op.transform(&f).unwrap();
        assert!(t.max_modulus() <= op.linf_bound() + 1e-12);
    }

    #[test]
    fn kernel_mass_of_disk_and_square_scaling() {
        let disk = kernel_mass(Domain::Disk { center: C64::new(0.0, 0.0), radius: 0.7 }, 128).unwrap();
        assert!((disk / (2.0 * PI * 0.7) - 1.0).abs() < 0.03, "{disk}");
        let a = kernel_mass(Domain::square(C64::new(0.0, 0.0), 0.5), 64).unwrap();
        let b = kernel_mass(Domain::square(C64::new(0.0, 0.0), 1.0), 64).unwrap();
        assert!((b / a - 2.0).abs() < 1e-12);
    }

    #[test]
    fn c_infty_is_attained_at_the_largest_cube() {
        let at = |s: f64| kernel_mass(Domain::square(C64::new(0.0, 0.0), s), 64).unwrap() / PI;
        let c = c_infty_estimate(3, 64).unwrap();
        assert!(at(1.5) >= at(1.25) && at(1.25) >= at(1.0));
        assert!((c - at(1.5)).abs() < 1e-14);
    }
}
