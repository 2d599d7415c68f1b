//! The positive multiplier `φ` with `Δφ = V_δ φ`, built by monotone
//! iteration down from the constant supersolution `e^{√8λ}`.
//!
//! Everything is stored as `log φ`. Internally the iteration runs on
//! `ψ = φ e^{−√8λ} ∈ (0, 1]`, which keeps large λ in range.

use serde::{Deserialize, Serialize};

use crate::elliptic::{solve_with, Potential, SolveConfig};
use crate::field::{gradient, laplacian, sup_norm, Grid, Margin, RealField, Region, C64};
use crate::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// `V_δ = V₊ − V₋ + δ²`, checked against `0 ≤ V_δ ≤ 2λ²`.
pub fn shifted_potential(p: &Potential) -> Result<RealField> {
    let d2 = p.delta * p.delta;
    let vd = p.v().map(|v| v + d2);
    let top = 2.0 * p.lambda * p.lambda;
    let slack = 1e-12 * top.max(1.0);
    let (lo, hi) = (vd.min_value(), vd.max_value());
    if lo < -slack || hi > top + slack {
        return Err(Error::HypothesisBreach(format!("V_delta range [{lo:.6e}, {hi:.6e}] not inside [0, {top}]")));
    }
    Ok(vd)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub solve: SolveConfig,
}

impl Default for MultiplierConfig {
    fn default() -> Self {
        MultiplierConfig { tol: 1e-8, max_iter: 200, solve: SolveConfig { tol: 1e-11, max_iter: 50_000 } }
    }
}

/// Dirichlet data for the iteration.
pub enum Boundary<'a> {
    /// The constant supersolution `e^{√8λ}`.
    Supersolution,
    /// `log φ` on the boundary ring.
    LogData(&'a dyn Fn(C64) -> f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsCertificate {
    pub min_log_phi: f64,
    pub max_log_phi: f64,
    /// `−√8λ` and `√8λ`.
    pub log_lower: f64,
    pub log_upper: f64,
    pub within_bounds: bool,
    /// `φ ≥ e^{√2λx}`; `None` when the boundary data does not dominate it.
    pub subsolution_ok: Option<bool>,
    pub max_monotone_violation: f64,
    /// Interior sup of `|Δ_hφ − V_δφ|` over `2λ² sup φ`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    pub log_phi: RealField,
    pub lambda: f64,
    pub delta: f64,
    pub iterations: usize,
    pub certificate: BoundsCertificate,
}

impl Multiplier {
    /// A multiplier given in closed form, with no iteration behind it.
    pub fn from_log(log_phi: RealField, lambda: f64, delta: f64) -> Self {
        let l = (8.0f64).sqrt() * lambda;
        let (lo, hi) = (log_phi.min_value(), log_phi.max_value());
        let certificate = BoundsCertificate {
            min_log_phi: lo,
            max_log_phi: hi,
            log_lower: -l,
            log_upper: l,
            within_bounds: lo >= -l && hi <= l,
            subsolution_ok: None,
            max_monotone_violation: 0.0,
            residual: 0.0,
        };
        Multiplier { log_phi, lambda, delta, iterations: 0, certificate }
    }

    pub fn grid(&self) -> &Grid {
        self.log_phi.grid()
    }

    pub fn phi(&self) -> RealField {
        self.log_phi.map(f64::exp)
    }

    /// `α = ∂̄ log φ`.
    pub fn alpha(&self) -> crate::ComplexField {
        crate::field::dbar(&self.log_phi)
    }
}

fn on_ring(g: &Grid, k: usize) -> bool {
    let (i, j) = g.coords(k);
    i == 0 || j == 0 || i == g.nx - 1 || j == g.ny - 1
}

pub fn build_multiplier(v_delta: &RealField, lambda: f64, delta: f64, boundary: Boundary, cfg: &MultiplierConfig) -> Result<Multiplier> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let g = *v_delta.grid();
    let two_l2 = 2.0 * lambda * lambda;
    let slack = 1e-12 * two_l2.max(1.0);
    if v_delta.min_value() < -slack || v_delta.max_value() > two_l2 + slack {
        return Err(Error::HypothesisBreach("V_delta outside [0, 2 lambda^2]".into()));
    }
    let half = g.half_side().max((g.x0.abs()).max(g.x_max().abs()));
    if half > 2.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!("footprint must lie in Q_2 so that phi_1 <= phi_2, got extent {half}")));
    }
    let top = (8.0f64).sqrt() * lambda;
    // Boundary ring of ψ; interior starts at the supersolution ψ = 1.
    let mut data = RealField::constant(g, 1.0);
    let mut dominates_sub = true;
    if let Boundary::LogData(f) = &boundary {
        for k in 0..g.len() {
            if on_ring(&g, k) {
                let z = g.point_at(k);
                let lp = f(z);
                dominates_sub &= lp >= SQRT2 * lambda * z.re - 1e-12;
                data.values_mut()[k] = (lp - top).exp();
            }
        }
    }
    let shift = RealField::constant(g, two_l2);
    let mut psi = data.clone();
    let mut max_violation = 0.0f64;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        let rhs = v_delta.zip_with(&psi, |vd, p| (two_l2 - vd) * p)?;
        let next = solve_with(&shift, &psi, &rhs, &cfg.solve)?.u;
        iterations += 1;
        let scale = psi.max_value();
        let mut step = 0.0f64;
        for (a, b) in next.values().iter().zip(psi.values()) {
            step = step.max((a - b).abs());
            max_violation = max_violation.max((a - b) / scale);
        }
        psi = next;
        if max_violation > 10.0 * cfg.tol {
            return Err(Error::HypothesisBreach(format!(
                "monotone iteration increased by {max_violation:.3e} (relative); grid too coarse"
            )));
        }
        if step <= cfg.tol * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged { iterations, residual: f64::NAN });
    }
    if let Some(k) = psi.values().iter().position(|&p| !(p > 0.0)) {
        return Err(Error::HypothesisBreach(format!("positivity lost at cell {k}")));
    }
    let log_phi = psi.map(|p| p.ln() + top);

    let lap = laplacian(&psi);
    let mut res = 0.0f64;
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let k = g.index(i, j);
            res = res.max((lap.values()[k] - v_delta.values()[k] * psi.values()[k]).abs());
        }
    }
    let residual = res / (two_l2 * psi.max_value());

    let subsolution_ok = if dominates_sub {
        let ok = (0..g.len()).all(|k| {
            let x = g.point_at(k).re;
            let lp = log_phi.values()[k];
            lp >= SQRT2 * lambda * x - 1e-7
        });
        if !ok {
            return Err(Error::HypothesisBreach("lower bound phi >= exp(sqrt(2) lambda x) violated".into()));
        }
        Some(true)
    } else {
        None
    };
    let (lo, hi) = (log_phi.min_value(), log_phi.max_value());
    let certificate = BoundsCertificate {
        min_log_phi: lo,
        max_log_phi: hi,
        log_lower: -top,
        log_upper: top,
        within_bounds: lo >= -top && hi <= top + 1e-12,
        subsolution_ok,
        max_monotone_violation: max_violation.max(0.0),
        residual,
    };
    Ok(Multiplier { log_phi, lambda, delta, iterations, certificate })
}

/// `max_{Q_d} |∇ log φ| / λ` with `d = 1 + 1/(2F)`, centered on the grid.
pub fn log_gradient_bound(m: &Multiplier, f_lambda: f64) -> Result<f64> {
    let d = 1.0 + 1.0 / (2.0 * f_lambda);
    let (gx, gy) = gradient(&m.log_phi);
    let norm = gx.zip_with(&gy, |a, b| a.hypot(b))?;
    let c = m.grid().center();
    Ok(sup_norm(&norm, &Region::cube(c, d))? / m.lambda)
}

/// `‖∇ log φ/(C λ)‖²_{L²(B_r(z))} / r²`.
pub fn caccioppoli_check(m: &Multiplier, z: C64, r: f64, c_norm: f64) -> Result<f64> {
    let (gx, gy) = gradient(&m.log_phi);
    let s = 1.0 / (c_norm * m.lambda);
    let norm = gx.zip_with(&gy, |a, b| a.hypot(b) * s)?;
    Ok(crate::field::l2_sq(&norm, &Region::ball(z, r))? / (r * r))
}

/// `r · sup_{B_r}|∇f| / (λ² sup_{B_{αr}} |f|)`, balls about the grid center.
pub fn gradient_estimate_check(f: &RealField, lambda: f64, r: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must exceed 1, got {alpha}")));
    }
    let c = f.grid().center();
    let (gx, gy) = gradient(f);
    let norm = gx.zip_with(&gy, |a, b| a.hypot(b))?;
    let top = sup_norm(&norm, &Region::ball(c, r))?;
    let bottom = sup_norm(f, &Region::ball(c, alpha * r))?;
    if bottom == 0.0 {
        return Ok(0.0);
    }
    Ok(r * top / (lambda * lambda * bottom))
}

/// Interior sup of `|ΔΦ + |∇Φ|² − V_δ|` for `Φ = log φ`.
pub fn log_identity_residual(m: &Multiplier, v_delta: &RealField, margin: Margin) -> Result<f64> {
    let lap = laplacian(&m.log_phi);
    let (gx, gy) = gradient(&m.log_phi);
    let mut r = lap.zip_with(v_delta, |l, v| l - v)?;
    for (k, v) in r.values_mut().iter_mut().enumerate() {
        *v += gx.values()[k].powi(2) + gy.values()[k].powi(2);
    }
    Ok(r.interior_sup(margin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{gen_potential, PotentialMode};

    fn grid(n: usize) -> Grid {
        Grid::square(C64::new(0.0, 0.0), 1.0, n).unwrap()
    }

    #[test]
    fn shifted_potential_examples() {
        let g = grid(8);
        let p = gen_potential(1, 1.0, 0.1, g, PotentialMode::Local).unwrap();
        let zero = Potential { v_plus: RealField::zeros(g), v_minus: RealField::zeros(g), ..p.clone() };
        let vd = shifted_potential(&zero).unwrap();
        assert!(vd.values().iter().all(|&v| (v - 0.01).abs() < 1e-15));
        let flat = Potential { v_minus: RealField::constant(g, 0.01), ..p.clone() };
        let vd = shifted_potential(&flat).unwrap();
        assert!(vd.try_sub(&p.v_plus).unwrap().max_modulus() < 1e-15);
        let bad = Potential { v_plus: RealField::constant(g, 5.0), ..p };
        assert!(matches!(shifted_potential(&bad), Err(Error::HypothesisBreach(_))));
    }

    #[test]
    fn exact_exponential_with_custom_data() {
        let g = grid(64);
        let c = 1.2;
        let vd = RealField::constant(g, c * c);
        let m = build_multiplier(&vd, 1.0, 0.0, Boundary::LogData(&|z: C64| c * z.re), &MultiplierConfig::default()).unwrap();
        let err = m.phi().try_sub(&RealField::from_fn(g, |z| (c * z.re).exp())).unwrap().max_modulus();
        assert!(err < 10.0 * g.h * g.h, "{err}");
    }

    #[test]
    fn subsolution_data_is_a_fixed_point() {
        let g = grid(32);
        let vd = RealField::constant(g, 2.0);
        let m = build_multiplier(&vd, 1.0, 0.0, Boundary::LogData(&|z: C64| SQRT2 * z.re), &MultiplierConfig::default()).unwrap();
        let err = m.phi().try_sub(&RealField::from_fn(g, |z| (SQRT2 * z.re).exp())).unwrap().max_modulus();
        assert!(err < 10.0 * g.h * g.h, "{err}");
        assert_eq!(m.certificate.subsolution_ok, Some(true));
    }

    #[test]
    fn random_potential_certificate() {
        let g = grid(48);
        let p = gen_potential(9, 2.0, 0.1, g, PotentialMode::Local).unwrap();
        let vd = shifted_potential(&p).unwrap();
        let m = build_multiplier(&vd, 2.0, 0.1, Boundary::Supersolution, &MultiplierConfig::default()).unwrap();
        assert!(m.certificate.within_bounds);
        assert_eq!(m.certificate.subsolution_ok, Some(true));
        assert!(m.certificate.max_monotone_violation <= 1e-7);
        assert!(m.certificate.residual < 1e-7, "{}", m.certificate.residual);
    }

    #[test]
    fn log_gradient_and_caccioppoli_closed_forms() {
        let g = Grid::square(C64::new(0.0, 0.0), 1.5, 96).unwrap();
        let c = 0.8;
        let m = Multiplier::from_log(RealField::from_fn(g, |z| c * z.re), 2.0, 0.0);
        assert!((log_gradient_bound(&m, 2.0).unwrap() - c / 2.0).abs() < 1e-12);
        let flat = Multiplier::from_log(RealField::constant(g, 0.3), 2.0, 0.0);
        assert_eq!(log_gradient_bound(&flat, 2.0).unwrap(), 0.0);
        assert_eq!(caccioppoli_check(&flat, C64::new(0.0, 0.0), 0.25, 1.0).unwrap(), 0.0);
        let v = caccioppoli_check(&m, C64::new(0.0, 0.0), 0.5, 1.0).unwrap();
        let exact = (c / 2.0).powi(2) * std::f64::consts::PI;
        assert!((v - exact).abs() < 8.0 * g.h * exact, "{v} {exact}");
    }

    #[test]
    fn gradient_estimate_ratio_decreases_in_alpha() {
        let g = grid(64);
        let f = RealField::from_fn(g, |z| (2.0 * z.re).exp());
        assert!(gradient_estimate_check(&RealField::constant(g, 2.0), 2.0, 0.25, 2.0).unwrap() == 0.0);
        let a = gradient_estimate_check(&f, 2.0, 0.25, 1.5).unwrap();
        let b = gradient_estimate_check(&f, 2.0, 0.25, 3.0).unwrap();
        assert!(a.is_finite() && a >= b);
    }
}
