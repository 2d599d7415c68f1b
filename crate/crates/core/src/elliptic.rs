//! Admissible potentials, the Dirichlet solver for `−Δu + Vu = f`, and the
//! rescaling map of the Landis iteration.

use serde::{Deserialize, Serialize};

use crate::field::{laplacian, Grid, RealField, C64};
use crate::random::{substream, TrigSeries, MAX_MODES};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialMode {
    Local,
    /// `V₋` additionally damped by `exp(−c₀|z|^{1+ε₀})`.
    Global { c0: f64, eps0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub v_plus: RealField,
    pub v_minus: RealField,
    pub lambda: f64,
    pub delta: f64,
    pub seed: u64,
    pub mode: PotentialMode,
}

impl Potential {
    pub fn grid(&self) -> &Grid {
        self.v_plus.grid()
    }

    /// `V = V₊ − V₋`.
    pub fn v(&self) -> RealField {
        self.v_plus.try_sub(&self.v_minus).expect("shared grid")
    }
}

/// Map a series with analytic bound `b` into `[0, top]` and clip.
fn unit_range(s: &TrigSeries, z: C64, top: f64) -> f64 {
    let b = s.bound();
    let t = if b > 0.0 { 0.5 * (s.eval(z) + b) / b } else { 0.5 };
    (t * top).clamp(0.0, top)
}

pub fn gen_potential(seed: u64, lambda: f64, delta: f64, grid: Grid, mode: PotentialMode) -> Result<Potential> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be nonnegative, got {delta}")));
    }
    if !(lambda >= 1.0 && lambda >= delta) || delta > 1.0 {
        return Err(Error::InvalidParameter(format!("need lambda >= 1 >= delta, got lambda={lambda}, delta={delta}")));
    }
    if let PotentialMode::Global { c0, eps0 } = mode {
        if !(c0 > 0.0 && eps0 > 0.0) {
            return Err(Error::InvalidParameter("global mode needs c0 > 0 and eps0 > 0".into()));
        }
    }
    let plus = TrigSeries::random(&mut substream(seed, 1), MAX_MODES, 3.0);
    let minus = TrigSeries::random(&mut substream(seed, 2), MAX_MODES, 3.0);
    let (l2, d2) = (lambda * lambda, delta * delta);
    let v_plus = RealField::from_fn(grid, |z| unit_range(&plus, z, l2));
    let v_minus = RealField::from_fn(grid, |z| {
        if d2 == 0.0 {
            return 0.0;
        }
        let damp = match mode {
            PotentialMode::Local => 1.0,
            PotentialMode::Global { c0, eps0 } => (-c0 * z.norm().powf(1.0 + eps0)).exp(),
        };
        (unit_range(&minus, z, d2) * damp).clamp(0.0, d2)
    });
    Ok(Potential { v_plus, v_minus, lambda, delta, seed, mode })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig { tol: 1e-10, max_iter: 50_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub u: RealField,
    pub iterations: usize,
    pub residual: f64,
    pub preconditioned: bool,
}

/// First Dirichlet eigenvalue of the discrete `−Δ` on the interior unknowns.
pub fn mu1(grid: &Grid) -> f64 {
    let s = |n: usize| (std::f64::consts::PI / (2.0 * (n as f64 - 1.0))).sin().powi(2);
    4.0 / (grid.h * grid.h) * (s(grid.nx) + s(grid.ny))
}

/// `(−Δ_h + V)u` everywhere, using the one-sided Laplacian on the ring.
pub fn apply_operator(u: &RealField, v: &RealField) -> Result<RealField> {
    let lap = laplacian(u);
    lap.zip_with(v, |l, _| l)?;
    let out = lap.values().iter().zip(v.values()).zip(u.values()).map(|((l, vv), uu)| -l + vv * uu).collect();
    RealField::new(*u.grid(), out)
}

/// Interior sup of `|(−Δ_h + V)u − f|` relative to `scale`.
pub fn residual(u: &RealField, v: &RealField, f: &RealField, scale: f64) -> Result<f64> {
    let r = apply_operator(u, v)?.try_sub(f)?;
    let g = *u.grid();
    let mut sup = 0.0f64;
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            sup = sup.max(r.at(i, j).abs());
        }
    }
    Ok(sup / scale.max(f64::MIN_POSITIVE))
}

struct Interior<'a> {
    nx: usize,
    ny: usize,
    inv_h2: f64,
    v: &'a [f64],
}

impl Interior<'_> {
    #[inline]
    fn len(&self) -> usize {
        (self.nx - 2) * (self.ny - 2)
    }

    /// Interior unknown `(i, j)` with `1 ≤ i < nx−1` maps to `(j−1)(nx−2) + i−1`.
    fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let (mx, my) = (self.nx - 2, self.ny - 2);
        for b in 0..my {
            for a in 0..mx {
                let k = b * mx + a;
                let mut s = 4.0 * x[k];
                if a > 0 {
                    s -= x[k - 1];
                }
                if a + 1 < mx {
                    s -= x[k + 1];
                }
                if b > 0 {
                    s -= x[k - mx];
                }
                if b + 1 < my {
                    s -= x[k + mx];
                }
                let vk = self.v[(b + 1) * self.nx + a + 1];
                y[k] = s * self.inv_h2 + vk * x[k];
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients on `A x = b`, optionally Jacobi preconditioned.
/// Returns the iteration count and the final relative residual.
fn cg(op: &Interior, b: &[f64], x: &mut [f64], diag: Option<&[f64]>, tol: f64, max_iter: usize) -> (usize, f64, bool) {
    let n = b.len();
    let bn = dot(b, b).sqrt();
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return (0, 0.0, true);
    }
    let mut r = vec![0.0; n];
    op.matvec(x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    let precond = |r: &[f64], z: &mut [f64]| match diag {
        Some(d) => z.iter_mut().zip(r).zip(d).for_each(|((z, r), d)| *z = r / d),
        None => z.copy_from_slice(r),
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = dot(&r, &r).sqrt() / bn;
    for it in 0..max_iter {
        if rel <= tol {
            return (it, rel, true);
        }
        op.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return (it, rel, false);
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        rel = dot(&r, &r).sqrt() / bn;
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    (max_iter, rel, rel <= tol)
}

/// Solve `(−Δ_h + V)u = f` at the interior cells. The boundary ring of
/// `data` holds the Dirichlet values; its interior is the initial guess.
pub fn solve_with(v: &RealField, data: &RealField, f: &RealField, cfg: &SolveConfig) -> Result<SolveReport> {
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    data.check_same(v.grid())?;
    f.check_same(v.grid())?;
    let g = *v.grid();
    let m1 = mu1(&g);
    let inf_v = v.min_value();
    if inf_v <= -m1 {
        return Err(Error::Indefinite { inf_v, neg_mu1: -m1 });
    }
    let inv_h2 = 1.0 / (g.h * g.h);
    let op = Interior { nx: g.nx, ny: g.ny, inv_h2, v: v.values() };
    let (mx, my) = (g.nx - 2, g.ny - 2);
    let mut b = vec![0.0; op.len()];
    let mut x = vec![0.0; op.len()];
    for bj in 0..my {
        for ai in 0..mx {
            let (i, j) = (ai + 1, bj + 1);
            let k = bj * mx + ai;
            let mut s = f.at(i, j);
            for (ii, jj) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                if ii == 0 || jj == 0 || ii == g.nx - 1 || jj == g.ny - 1 {
                    s += data.at(ii, jj) * inv_h2;
                }
            }
            b[k] = s;
            x[k] = data.at(i, j);
        }
    }
    let x0 = x.clone();
    let (mut iterations, mut rel, ok) = cg(&op, &b, &mut x, None, cfg.tol, cfg.max_iter);
    let mut preconditioned = false;
    if !ok {
        x = x0;
        let diag: Vec<f64> = (0..op.len())
            .map(|k| 4.0 * inv_h2 + v.values()[(k / mx + 1) * g.nx + k % mx + 1])
            .collect();
        let (it2, rel2, ok2) = cg(&op, &b, &mut x, Some(&diag), cfg.tol, cfg.max_iter);
        iterations += it2;
        rel = rel2;
        preconditioned = true;
        if !ok2 {
            return Err(Error::NotConverged { iterations, residual: rel });
        }
    }
    let mut out = data.values().to_vec();
    for bj in 0..my {
        let row = (bj + 1) * g.nx + 1;
        out[row..row + mx].copy_from_slice(&x[bj * mx..(bj + 1) * mx]);
    }
    Ok(SolveReport { u: RealField::new(g, out)?, iterations, residual: rel, preconditioned })
}

/// Dirichlet solve with boundary values `g` sampled on the boundary ring.
pub fn solve_dirichlet(v: &RealField, g: impl Fn(C64) -> f64, f: &RealField, cfg: &SolveConfig) -> Result<RealField> {
    let grid = *v.grid();
    let mut data = RealField::zeros(grid);
    for k in 0..grid.len() {
        let (i, j) = grid.coords(k);
        if i == 0 || j == 0 || i == grid.nx - 1 || j == grid.ny - 1 {
            data.values_mut()[k] = g(grid.point_at(k));
        }
    }
    Ok(solve_with(v, &data, f, cfg)?.u)
}

/// `ũ(z) = u(z₁ + Tz)`, `Ṽ(z) = T²V(z₁ + Tz)` sampled on `target`.
pub fn rescale(u: &RealField, v: &RealField, z1: C64, t: f64, target: Grid) -> Result<(RealField, RealField)> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {t}")));
    }
    u.check_same(v.grid())?;
    let mut uu = Vec::with_capacity(target.len());
    let mut vv = Vec::with_capacity(target.len());
    for k in 0..target.len() {
        let w = z1 + target.point_at(k) * t;
        match (u.sample(w), v.sample(w)) {
            (Some(a), Some(b)) => {
                uu.push(a);
                vv.push(t * t * b);
            }
            _ => return Err(Error::OutsideFootprint),
        }
    }
    Ok((RealField::new(target, uu)?, RealField::new(target, vv)?))
}
