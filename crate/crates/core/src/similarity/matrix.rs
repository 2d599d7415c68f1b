//! 2×2 complex matrices and matrix-valued fields.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::cauchy::CauchyOp;
use crate::field::{dbar, ComplexField, Grid, Margin, C64};
use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: ONE, b: ZERO, c: ZERO, d: ONE };
    pub const ZERO: Mat2 = Mat2 { a: ZERO, b: ZERO, c: ZERO, d: ZERO };

    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn scalar(s: C64) -> Self {
        Mat2 { a: s, b: ZERO, c: ZERO, d: s }
    }

    #[inline]
    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det.norm() == 0.0 || !det.is_finite() {
            return None;
        }
        let s = 1.0 / det;
        Some(Mat2 { a: self.d * s, b: -self.b * s, c: -self.c * s, d: self.a * s })
    }

    pub fn adjoint(&self) -> Mat2 {
        Mat2 { a: self.a.conj(), b: self.c.conj(), c: self.b.conj(), d: self.d.conj() }
    }

    pub fn scale(&self, s: C64) -> Mat2 {
        Mat2 { a: self.a * s, b: self.b * s, c: self.c * s, d: self.d * s }
    }

    /// `|A| = sqrt(tr A*A)`.
    #[inline]
    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    #[inline]
    pub fn frobenius_sq(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()
    }

    /// Largest singular value, from `σ₁² + σ₂² = |A|²` and `σ₁σ₂ = |det A|`.
    #[inline]
    pub fn opnorm(&self) -> f64 {
        let f2 = self.frobenius_sq();
        let det = self.det().norm();
        let disc = (f2 * f2 - 4.0 * det * det).max(0.0).sqrt();
        (0.5 * (f2 + disc)).sqrt()
    }

    /// Largest entry modulus.
    pub fn max_entry(&self) -> f64 {
        self.a.norm().max(self.b.norm()).max(self.c.norm()).max(self.d.norm())
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2 { a: self.a + o.a, b: self.b + o.b, c: self.c + o.c, d: self.d + o.d }
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2 { a: self.a - o.a, b: self.b - o.b, c: self.c - o.c, d: self.d - o.d }
    }
}

/// A 2×2 matrix at every cell of a grid, stored as four entry fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixField {
    pub a11: ComplexField,
    pub a12: ComplexField,
    pub a21: ComplexField,
    pub a22: ComplexField,
}

impl MatrixField {
    pub fn from_entries(a11: ComplexField, a12: ComplexField, a21: ComplexField, a22: ComplexField) -> Result<Self> {
        let g = *a11.grid();
        a12.check_same(&g)?;
        a21.check_same(&g)?;
        a22.check_same(&g)?;
        Ok(MatrixField { a11, a12, a21, a22 })
    }

    pub fn from_mats(grid: Grid, mats: &[Mat2]) -> Result<Self> {
        if mats.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: mats.len() });
        }
        let pick = |f: fn(&Mat2) -> C64| ComplexField::new(grid, mats.iter().map(f).collect());
        Ok(MatrixField { a11: pick(|m| m.a)?, a12: pick(|m| m.b)?, a21: pick(|m| m.c)?, a22: pick(|m| m.d)? })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(C64) -> Mat2) -> Result<Self> {
        let mats: Vec<Mat2> = (0..grid.len()).map(|k| f(grid.point_at(k))).collect();
        Self::from_mats(grid, &mats)
    }

    pub fn constant(grid: Grid, m: Mat2) -> Self {
        MatrixField {
            a11: ComplexField::constant(grid, m.a),
            a12: ComplexField::constant(grid, m.b),
            a21: ComplexField::constant(grid, m.c),
            a22: ComplexField::constant(grid, m.d),
        }
    }

    pub fn identity(grid: Grid) -> Self {
        Self::constant(grid, Mat2::IDENTITY)
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, Mat2::ZERO)
    }

    pub fn grid(&self) -> &Grid {
        self.a11.grid()
    }

    #[inline]
    pub fn at(&self, k: usize) -> Mat2 {
        Mat2 { a: self.a11.values()[k], b: self.a12.values()[k], c: self.a21.values()[k], d: self.a22.values()[k] }
    }

    pub fn mats(&self) -> Vec<Mat2> {
        (0..self.grid().len()).map(|k| self.at(k)).collect()
    }

    pub fn map(&self, f: impl Fn(Mat2) -> Mat2) -> Result<Self> {
        let mats: Vec<Mat2> = (0..self.grid().len()).map(|k| f(self.at(k))).collect();
        Self::from_mats(*self.grid(), &mats)
    }

    pub fn zip(&self, o: &MatrixField, f: impl Fn(Mat2, Mat2) -> Mat2) -> Result<Self> {
        self.a11.check_same(o.grid())?;
        let mats: Vec<Mat2> = (0..self.grid().len()).map(|k| f(self.at(k), o.at(k))).collect();
        Self::from_mats(*self.grid(), &mats)
    }

    pub fn mul(&self, o: &MatrixField) -> Result<Self> {
        self.zip(o, |a, b| a * b)
    }

    pub fn add(&self, o: &MatrixField) -> Result<Self> {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &MatrixField) -> Result<Self> {
        self.zip(o, |a, b| a - b)
    }

    /// Pointwise inverse; fails where the determinant vanishes.
    pub fn inverse(&self) -> Result<Self> {
        let mut out = Vec::with_capacity(self.grid().len());
        for k in 0..self.grid().len() {
            let m = self.at(k);
            match m.inverse() {
                Some(inv) => out.push(inv),
                None => return Err(Error::Degenerate(format!("singular matrix at cell {k}"))),
            }
        }
        Self::from_mats(*self.grid(), &out)
    }

    pub fn apply(&self, v: &[ComplexField; 2]) -> Result<[ComplexField; 2]> {
        v[0].check_same(self.grid())?;
        v[1].check_same(self.grid())?;
        let n = self.grid().len();
        let (mut x, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for k in 0..n {
            let r = self.at(k).apply([v[0].values()[k], v[1].values()[k]]);
            x.push(r[0]);
            y.push(r[1]);
        }
        Ok([ComplexField::new(*self.grid(), x)?, ComplexField::new(*self.grid(), y)?])
    }

    pub fn entries(&self) -> [&ComplexField; 4] {
        [&self.a11, &self.a12, &self.a21, &self.a22]
    }

    pub fn map_entries(&self, f: impl Fn(&ComplexField) -> Result<ComplexField>) -> Result<Self> {
        Self::from_entries(f(&self.a11)?, f(&self.a12)?, f(&self.a21)?, f(&self.a22)?)
    }

    pub fn dbar(&self) -> Self {
        self.map_entries(|e| Ok(dbar(e))).expect("shared grid")
    }

    pub fn transform(&self, op: &CauchyOp) -> Result<Self> {
        self.map_entries(|e| op.transform(e))
    }

    pub fn restrict(&self, sub: &Grid) -> Result<Self> {
        self.map_entries(|e| e.restrict(sub))
    }

    pub fn sup_opnorm(&self) -> f64 {
        (0..self.grid().len()).map(|k| self.at(k).opnorm()).fold(0.0, f64::max)
    }

    pub fn sup_frobenius(&self) -> f64 {
        (0..self.grid().len()).map(|k| self.at(k).frobenius()).fold(0.0, f64::max)
    }

    /// `‖A‖_∞ = max_{ij} ‖a_ij‖_{L∞}`.
    pub fn sup_entry(&self) -> f64 {
        self.entries().iter().map(|e| e.max_modulus()).fold(0.0, f64::max)
    }

    pub fn interior_sup_opnorm(&self, margin: Margin) -> f64 {
        self.grid().interior(margin).map(|k| self.at(k).opnorm()).fold(0.0, f64::max)
    }

    pub fn interior_sup_frobenius(&self, margin: Margin) -> f64 {
        self.grid().interior(margin).map(|k| self.at(k).frobenius()).fold(0.0, f64::max)
    }
}
