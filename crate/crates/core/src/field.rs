//! Cell-centered uniform grids, sampled fields and the finite-difference
//! calculus every other module is written against.
//!
//! A [`Grid`] is a rectangle of `nx * ny` square cells of side `h`; field
//! values live at cell centers, stored row-major from the bottom-left cell.
//! No sample ever sits on the boundary of the footprint.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type C64 = Complex64;

/// Minimum cells per side for a square working grid.
pub const MIN_SQUARE_CELLS: usize = 8;

/// Smallest extent along any axis for which the one-sided second-order
/// stencils are defined.
const MIN_AXIS_CELLS: usize = 3;

pub trait Scalar:
    Copy
    + Send
    + Sync
    + Default
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + 'static
{
    fn modulus(self) -> f64;
    fn finite(self) -> bool;
    fn to_complex(self) -> C64;
}

impl Scalar for f64 {
    #[inline]
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn finite(self) -> bool {
        self.is_finite()
    }
    #[inline]
    fn to_complex(self) -> C64 {
        C64::new(self, 0.0)
    }
}

impl Scalar for C64 {
    #[inline]
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn to_complex(self) -> C64 {
        self
    }
}

/// Uniform cell-centered lattice over the rectangle
/// `[x0, x0 + nx*h] x [y0, y0 + ny*h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    /// The cube `Q_{half_side}(center)` cut into `n x n` cells.
    pub fn square(center: C64, half_side: f64, n: usize) -> Result<Self> {
        if n < MIN_SQUARE_CELLS {
            return Err(Error::GridTooSmall { min: MIN_SQUARE_CELLS, got: n });
        }
        if !(half_side > 0.0 && half_side.is_finite()) {
            return Err(Error::InvalidParameter(format!("half_side must be positive, got {half_side}")));
        }
        Ok(Grid {
            x0: center.re - half_side,
            y0: center.im - half_side,
            h: 2.0 * half_side / n as f64,
            nx: n,
            ny: n,
        })
    }

    pub fn rect(x0: f64, y0: f64, h: f64, nx: usize, ny: usize) -> Result<Self> {
        let min = nx.min(ny);
        if min < MIN_AXIS_CELLS {
            return Err(Error::GridTooSmall { min: MIN_AXIS_CELLS, got: min });
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("spacing must be positive, got {h}")));
        }
        Ok(Grid { x0, y0, h, nx, ny })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.h
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + (j as f64 + 0.5) * self.h
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> C64 {
        C64::new(self.x(i), self.y(j))
    }

    #[inline]
    pub fn point_at(&self, k: usize) -> C64 {
        let (i, j) = self.coords(k);
        self.point(i, j)
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.nx as f64 * self.h
    }

    pub fn y_max(&self) -> f64 {
        self.y0 + self.ny as f64 * self.h
    }

    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.x0 + self.x_max()), 0.5 * (self.y0 + self.y_max()))
    }

    pub fn is_square(&self) -> bool {
        self.nx == self.ny
    }

    pub fn half_side(&self) -> f64 {
        0.5 * self.nx as f64 * self.h
    }

    /// Equality up to floating-point noise in the geometry.
    pub fn matches(&self, other: &Grid) -> bool {
        let tol = 1e-12 * (1.0 + self.x0.abs().max(self.y0.abs()) + self.half_side());
        self.nx == other.nx
            && self.ny == other.ny
            && (self.x0 - other.x0).abs() <= tol
            && (self.y0 - other.y0).abs() <= tol
            && (self.h - other.h).abs() <= 1e-12 * self.h
    }

    /// Sub-lattice of `nx x ny` cells starting at cell `(i0, j0)`.
    pub fn window(&self, i0: usize, j0: usize, nx: usize, ny: usize) -> Result<Grid> {
        if i0 + nx > self.nx || j0 + ny > self.ny {
            return Err(Error::OutsideFootprint);
        }
        Grid::rect(self.x0 + i0 as f64 * self.h, self.y0 + j0 as f64 * self.h, self.h, nx, ny)
    }

    /// Cells whose centers lie in `[xmin, xmax] x [ymin, ymax]`, as an
    /// aligned window. Returns the offset of the window and the window.
    pub fn window_within(&self, xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<(usize, usize, Grid)> {
        let eps = 1e-9 * self.h;
        let lo = |a0: f64, v: f64| ((v - a0) / self.h - 0.5 - eps).ceil().max(0.0) as usize;
        let hi = |a0: f64, v: f64, n: usize| {
            let k = ((v - a0) / self.h - 0.5 + eps).floor();
            if k < 0.0 { None } else { Some((k as usize).min(n - 1)) }
        };
        let i0 = lo(self.x0, xmin);
        let j0 = lo(self.y0, ymin);
        let (i1, j1) = match (hi(self.x0, xmax, self.nx), hi(self.y0, ymax, self.ny)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::EmptyRegion),
        };
        if i1 < i0 || j1 < j0 {
            return Err(Error::EmptyRegion);
        }
        Ok((i0, j0, self.window(i0, j0, i1 - i0 + 1, j1 - j0 + 1)?))
    }

    /// Offset of an aligned sub-lattice inside `self`.
    pub fn offset_of(&self, sub: &Grid) -> Result<(usize, usize)> {
        if (sub.h - self.h).abs() > 1e-12 * self.h {
            return Err(Error::GridMismatch);
        }
        let fi = (sub.x0 - self.x0) / self.h;
        let fj = (sub.y0 - self.y0) / self.h;
        let (ri, rj) = (fi.round(), fj.round());
        if (fi - ri).abs() > 1e-6 || (fj - rj).abs() > 1e-6 || ri < 0.0 || rj < 0.0 {
            return Err(Error::GridMismatch);
        }
        let (i0, j0) = (ri as usize, rj as usize);
        if i0 + sub.nx > self.nx || j0 + sub.ny > self.ny {
            return Err(Error::OutsideFootprint);
        }
        Ok((i0, j0))
    }

    /// Same footprint, `factor` times as many cells per side.
    pub fn refined(&self, factor: usize) -> Grid {
        Grid {
            x0: self.x0,
            y0: self.y0,
            h: self.h / factor as f64,
            nx: self.nx * factor,
            ny: self.ny * factor,
        }
    }

    /// Number of cells trimmed from each side for a given margin.
    pub fn margin_cells(&self, margin: Margin) -> usize {
        match margin {
            Margin::Cells(k) => k,
            Margin::Width(w) => (w / self.h - 0.5 - 1e-9).ceil().max(0.0) as usize,
        }
    }

    /// Indices of the cells at least `margin` away from the footprint edge.
    pub fn interior(&self, margin: Margin) -> impl Iterator<Item = usize> + '_ {
        let k = self.margin_cells(margin);
        let (i1, j1) = (self.nx.saturating_sub(k), self.ny.saturating_sub(k));
        (k..j1).flat_map(move |j| (k..i1).map(move |i| self.index(i, j)))
    }

    fn contains_rect(&self, xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> bool {
        let eps = 1e-9 * self.h;
        xmin >= self.x0 - eps && xmax <= self.x_max() + eps && ymin >= self.y0 - eps && ymax <= self.y_max() + eps
    }
}

/// How far from the footprint edge a residual is allowed to look.
///
/// `Width` is the one to use for refinement studies: it pins a physical
/// interior shared by every resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Margin {
    Cells(usize),
    Width(f64),
}

impl Default for Margin {
    fn default() -> Self {
        Margin::Cells(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Cube { center: C64, half_side: f64 },
    Ball { center: C64, radius: f64 },
}

impl Region {
    pub fn ball(center: C64, radius: f64) -> Self {
        Region::Ball { center, radius }
    }

    pub fn cube(center: C64, half_side: f64) -> Self {
        Region::Cube { center, half_side }
    }

    #[inline]
    pub fn contains(&self, z: C64) -> bool {
        match *self {
            Region::Cube { center, half_side } => {
                let d = z - center;
                d.re.abs() <= half_side && d.im.abs() <= half_side
            }
            Region::Ball { center, radius } => (z - center).norm_sqr() <= radius * radius,
        }
    }

    fn bbox(&self) -> (f64, f64, f64, f64) {
        let (c, r) = match *self {
            Region::Cube { center, half_side } => (center, half_side),
            Region::Ball { center, radius } => (center, radius),
        };
        (c.re - r, c.re + r, c.im - r, c.im + r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field<T> {
    grid: Grid,
    values: Vec<T>,
}

pub type RealField = Field<f64>;
pub type ComplexField = Field<C64>;

impl<T: Scalar> Field<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(Field { grid, values })
    }

    /// Construction without the finiteness scan, for values produced by
    /// operations on already-validated fields.
    pub(crate) fn from_parts(grid: Grid, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(C64) -> T) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.point_at(k))).collect();
        Field { grid, values }
    }

    pub fn constant(grid: Grid, c: T) -> Self {
        Field { grid, values: vec![c; grid.len()] }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, T::default())
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[self.grid.index(i, j)]
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with<S: Scalar, U: Scalar>(&self, other: &Field<S>, f: impl Fn(T, S) -> U) -> Result<Field<U>> {
        self.check_same(other.grid())?;
        Ok(Field {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self.grid.matches(other) { Ok(()) } else { Err(Error::GridMismatch) }
    }

    pub fn try_add(&self, other: &Field<T>) -> Result<Field<T>> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Field<T>) -> Result<Field<T>> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Field<T> {
        self.map(|v| v * s)
    }

    pub fn to_complex(&self) -> ComplexField {
        self.map(|v| v.to_complex())
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }

    /// Values on an aligned sub-lattice.
    pub fn restrict(&self, sub: &Grid) -> Result<Field<T>> {
        let (i0, j0) = self.grid.offset_of(sub)?;
        let mut values = Vec::with_capacity(sub.len());
        for j in 0..sub.ny {
            let row = (j0 + j) * self.grid.nx + i0;
            values.extend_from_slice(&self.values[row..row + sub.nx]);
        }
        Ok(Field { grid: *sub, values })
    }

    /// Bilinear interpolation between cell centers. `None` outside the hull
    /// of the cell centers.
    pub fn sample(&self, z: C64) -> Option<T> {
        let g = &self.grid;
        let fx = (z.re - g.x0) / g.h - 0.5;
        let fy = (z.im - g.y0) / g.h - 0.5;
        let eps = 1e-9;
        if fx < -eps || fy < -eps || fx > (g.nx - 1) as f64 + eps || fy > (g.ny - 1) as f64 + eps {
            return None;
        }
        let i = (fx.max(0.0).floor() as usize).min(g.nx - 2);
        let j = (fy.max(0.0).floor() as usize).min(g.ny - 2);
        let tx = (fx - i as f64).clamp(0.0, 1.0);
        let ty = (fy - j as f64).clamp(0.0, 1.0);
        let f00 = self.at(i, j);
        let f10 = self.at(i + 1, j);
        let f01 = self.at(i, j + 1);
        let f11 = self.at(i + 1, j + 1);
        Some(f00 * ((1.0 - tx) * (1.0 - ty)) + f10 * (tx * (1.0 - ty)) + f01 * ((1.0 - tx) * ty) + f11 * (tx * ty))
    }

    /// Largest modulus over the interior cells.
    pub fn interior_sup(&self, margin: Margin) -> f64 {
        self.grid.interior(margin).fold(0.0, |m, k| m.max(self.values[k].modulus()))
    }
}

impl RealField {
    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl ComplexField {
    pub fn conj(&self) -> ComplexField {
        self.map(|v| v.conj())
    }

    pub fn re(&self) -> RealField {
        self.map(|v| v.re)
    }

    pub fn im(&self) -> RealField {
        self.map(|v| v.im)
    }

    pub fn abs(&self) -> RealField {
        self.map(|v| v.norm())
    }
}

/// First derivative along one axis: centered differences inside, the
/// three-point one-sided second-order formula on the boundary ring.
fn axis_derivative<T: Scalar>(f: &Field<T>, along_x: bool) -> Field<T> {
    let g = f.grid;
    let inv2h = 0.5 / g.h;
    let (n_along, stride) = if along_x { (g.nx, 1) } else { (g.ny, g.nx) };
    let v = &f.values;
    let mut out = vec![T::default(); g.len()];
    for k in 0..g.len() {
        let (i, j) = g.coords(k);
        let p = if along_x { i } else { j };
        out[k] = if p == 0 {
            (v[k] * -3.0 + v[k + stride] * 4.0 - v[k + 2 * stride]) * inv2h
        } else if p == n_along - 1 {
            (v[k] * 3.0 - v[k - stride] * 4.0 + v[k - 2 * stride]) * inv2h
        } else {
            (v[k + stride] - v[k - stride]) * inv2h
        };
    }
    Field::from_parts(g, out)
}

pub fn d_dx<T: Scalar>(f: &Field<T>) -> Field<T> {
    axis_derivative(f, true)
}

pub fn d_dy<T: Scalar>(f: &Field<T>) -> Field<T> {
    axis_derivative(f, false)
}

/// `∂̄f = ½(∂x + i∂y) f`.
pub fn dbar<T: Scalar>(f: &Field<T>) -> ComplexField {
    let fx = d_dx(f);
    let fy = d_dy(f);
    let values = fx
        .values
        .iter()
        .zip(&fy.values)
        .map(|(&a, &b)| 0.5 * (a.to_complex() + C64::i() * b.to_complex()))
        .collect();
    Field::from_parts(f.grid, values)
}

/// `∂f = ½(∂x − i∂y) f`.
pub fn del<T: Scalar>(f: &Field<T>) -> ComplexField {
    let fx = d_dx(f);
    let fy = d_dy(f);
    let values = fx
        .values
        .iter()
        .zip(&fy.values)
        .map(|(&a, &b)| 0.5 * (a.to_complex() - C64::i() * b.to_complex()))
        .collect();
    Field::from_parts(f.grid, values)
}

pub fn gradient(f: &RealField) -> (RealField, RealField) {
    (d_dx(f), d_dy(f))
}

/// Five-point Laplacian; the boundary ring uses the four-point one-sided
/// second derivative (exact on cubics) in the normal direction.
pub fn laplacian<T: Scalar>(f: &Field<T>) -> Field<T> {
    let g = f.grid;
    let inv_h2 = 1.0 / (g.h * g.h);
    let v = &f.values;
    let second = |k: usize, p: usize, n: usize, s: usize| -> T {
        if p == 0 {
            v[k] * 2.0 - v[k + s] * 5.0 + v[k + 2 * s] * 4.0 - v[k + 3 * s]
        } else if p == n - 1 {
            v[k] * 2.0 - v[k - s] * 5.0 + v[k - 2 * s] * 4.0 - v[k - 3 * s]
        } else {
            v[k + s] + v[k - s] - v[k] * 2.0
        }
    };
    let out = (0..g.len())
        .map(|k| {
            let (i, j) = g.coords(k);
            (second(k, i, g.nx, 1) + second(k, j, g.ny, g.nx)) * inv_h2
        })
        .collect();
    Field::from_parts(g, out)
}

fn region_cells<'a, T: Scalar>(f: &'a Field<T>, r: &Region) -> Result<impl Iterator<Item = T> + 'a> {
    let (x0, x1, y0, y1) = r.bbox();
    if !f.grid.contains_rect(x0, x1, y0, y1) {
        return Err(Error::OutsideFootprint);
    }
    let r = *r;
    let g = f.grid;
    let mut it = (0..g.len()).filter(move |&k| r.contains(g.point_at(k))).map(move |k| f.values[k]).peekable();
    if it.peek().is_none() {
        return Err(Error::EmptyRegion);
    }
    Ok(it)
}

/// Supremum of `|f|` over the cells whose centers lie in `r`.
pub fn sup_norm<T: Scalar>(f: &Field<T>, r: &Region) -> Result<f64> {
    Ok(region_cells(f, r)?.fold(0.0, |m, v| m.max(v.modulus())))
}

/// `h² Σ |f|²` over the cells whose centers lie in `r`.
pub fn l2_sq<T: Scalar>(f: &Field<T>, r: &Region) -> Result<f64> {
    let h2 = f.grid.h * f.grid.h;
    Ok(h2 * region_cells(f, r)?.map(|v| v.modulus().powi(2)).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        Grid::square(C64::new(0.0, 0.0), 1.0, n).unwrap()
    }

    #[test]
    fn dbar_and_del_of_linear_functions() {
        let g = grid(32);
        let zbar = ComplexField::from_fn(g, |z| z.conj());
        let z = ComplexField::from_fn(g, |z| z);
        let one = C64::new(1.0, 0.0);
        assert!(dbar(&zbar).values().iter().all(|v| (v - one).norm() < 1e-12));
        assert!(dbar(&z).values().iter().all(|v| v.norm() < 1e-12));
        assert!(del(&z).values().iter().all(|v| (v - one).norm() < 1e-12));
        assert!(del(&zbar).values().iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn dbar_of_exp_converges_at_second_order() {
        let err = |n| {
            let f = ComplexField::from_fn(grid(n), |z| z.exp());
            dbar(&f).interior_sup(Margin::Width(2.0 / 64.0 * 2.0))
        };
        let (e64, e256) = (err(64), err(256));
        let order = (e64 / e256).log2() / 2.0;
        assert!(order >= 1.8, "order {order}");
    }

    #[test]
    fn conjugation_identity() {
        let g = grid(24);
        let f = ComplexField::from_fn(g, |z| (z * z).sin() + C64::new(0.0, 1.0) * z.conj() * z);
        let lhs = del(&f).conj();
        let rhs = dbar(&f.conj());
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn dbar_plus_del_recovers_partials() {
        let g = grid(20);
        let f = ComplexField::from_fn(g, |z| (z.re * 3.0).cos() * C64::new(1.0, z.im).exp());
        let (fx, fy) = (d_dx(&f), d_dy(&f));
        let (db, dl) = (dbar(&f), del(&f));
        for k in 0..g.len() {
            let a = db.values()[k] + dl.values()[k] - fx.values()[k];
            let b = (db.values()[k] - dl.values()[k]) / C64::i() - fy.values()[k];
            assert!(a.norm() < 1e-12 && b.norm() < 1e-12);
        }
    }

    #[test]
    fn laplacian_exact_on_quadratics() {
        let g = grid(16);
        let saddle = RealField::from_fn(g, |z| z.re * z.re - z.im * z.im);
        let bowl = RealField::from_fn(g, |z| z.re * z.re + z.im * z.im);
        assert!(laplacian(&saddle).values().iter().all(|v| v.abs() < 1e-10));
        assert!(laplacian(&bowl).values().iter().all(|v| (v - 4.0).abs() < 1e-10));
    }

    #[test]
    fn laplacian_matches_four_del_dbar() {
        let f = |z: C64| (1.3 * z.re).sin() * (0.7 * z.im).cosh() + z.re * z.im * z.im;
        let err = |n| {
            let u = RealField::from_fn(grid(n), f);
            let lap = laplacian(&u).to_complex();
            let dd = del(&dbar(&u)).scale(4.0);
            lap.try_sub(&dd).unwrap().interior_sup(Margin::Width(0.125))
        };
        let (e1, e2) = (err(32), err(64));
        assert!((e1 / e2).log2() >= 1.8, "{e1} {e2}");
    }

    #[test]
    fn norms_of_constants_and_monotonicity() {
        let g = grid(64);
        let c = RealField::constant(g, -3.0);
        let ball = Region::ball(C64::new(0.0, 0.0), 0.5);
        assert_eq!(sup_norm(&c, &ball).unwrap(), 3.0);
        let area = l2_sq(&c, &ball).unwrap() / 9.0;
        let exact = std::f64::consts::PI * 0.25;
        assert!((area - exact).abs() < 4.0 * g.h);

        let x = RealField::from_fn(g, |z| z.re);
        let s = sup_norm(&x, &Region::ball(C64::new(0.0, 0.0), 1.0)).unwrap();
        assert!((s - 1.0).abs() <= 2.0 * g.h);
    }

    #[test]
    fn empty_and_outside_regions_are_errors() {
        let g = grid(8);
        let f = RealField::constant(g, 1.0);
        assert!(matches!(
            sup_norm(&f, &Region::ball(C64::new(0.0, 0.0), 1e-3)),
            Err(Error::EmptyRegion)
        ));
        assert!(matches!(
            sup_norm(&f, &Region::cube(C64::new(0.5, 0.0), 1.0)),
            Err(Error::OutsideFootprint)
        ));
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = RealField::constant(grid(8), 1.0);
        let b = RealField::constant(grid(16), 1.0);
        assert!(matches!(a.try_add(&b), Err(Error::GridMismatch)));
        assert!(Grid::square(C64::new(0.0, 0.0), 1.0, 4).is_err());
    }

    #[test]
    fn restrict_and_window_within() {
        let g = grid(16);
        let f = RealField::from_fn(g, |z| z.re + 10.0 * z.im);
        let (i0, j0, w) = g.window_within(-0.5, 0.5, -0.25, 0.25).unwrap();
        assert_eq!((w.nx, w.ny), (8, 4));
        let r = f.restrict(&w).unwrap();
        assert_eq!(r.at(0, 0), f.at(i0, j0));
        assert!((w.point(0, 0) - g.point(i0, j0)).norm() < 1e-15);
    }

    #[test]
    fn bilinear_sample_is_exact_on_affine() {
        let g = grid(10);
        let f = RealField::from_fn(g, |z| 2.0 * z.re - z.im + 0.5);
        let z = C64::new(0.313, -0.71);
        assert!((f.sample(z).unwrap() - (2.0 * z.re - z.im + 0.5)).abs() < 1e-13);
        assert!(f.sample(C64::new(0.999, 0.0)).is_none());
    }
}
