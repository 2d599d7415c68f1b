//! Holomorphic factors, Hadamard three-circle checks, the `θ` exponent, the
//! three-ball chain and vanishing-order fits.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::field::{dbar, sup_norm, ComplexField, Margin, RealField, Region, C64};
use crate::multiplier::Multiplier;
use crate::similarity::BeltramiSolution;
use crate::stream::StreamData;
use crate::{Error, Result};

/// Choice of `F(λ)` with `1 ≤ F(λ) ≤ λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FMode {
    One,
    Sqrt,
    Lambda,
}

impl FMode {
    pub const ALL: [FMode; 3] = [FMode::One, FMode::Sqrt, FMode::Lambda];

    pub fn eval(&self, lambda: f64) -> f64 {
        match self {
            FMode::One => 1.0,
            FMode::Sqrt => lambda.sqrt(),
            FMode::Lambda => lambda,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FMode::One => "one",
            FMode::Sqrt => "sqrt",
            FMode::Lambda => "lambda",
        }
    }
}

impl std::str::FromStr for FMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" | "1" => Ok(FMode::One),
            "sqrt" => Ok(FMode::Sqrt),
            "lambda" => Ok(FMode::Lambda),
            _ => Err(Error::InvalidParameter(format!("unknown F mode {s:?} (one | sqrt | lambda)"))),
        }
    }
}

/// `b = 1 + 1/F` and `d = 1 + 1/(2F)`.
pub fn radii(f_lambda: f64) -> (f64, f64) {
    (1.0 + 1.0 / f_lambda, 1.0 + 0.5 / f_lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolomorphicFactor {
    pub h: [ComplexField; 2],
    /// Interior `sup|∂̄h| / sup|h|`.
    pub holomorphy_residual: f64,
    /// `sup|Ph − w̃| / sup|w̃|`.
    pub reconstruction: f64,
}

/// `h = P⁻¹w̃`.
pub fn holomorphic_factor(w: &[ComplexField; 2], sol: &BeltramiSolution, margin: Margin) -> Result<HolomorphicFactor> {
    let h = sol.p_inv.apply(w)?;
    let scale = h[0].max_modulus().max(h[1].max_modulus());
    let dh = dbar(&h[0]).interior_sup(margin).max(dbar(&h[1]).interior_sup(margin));
    let back = sol.p.apply(&h)?;
    let wscale = w[0].max_modulus().max(w[1].max_modulus());
    let rec = back[0].try_sub(&w[0])?.max_modulus().max(back[1].try_sub(&w[1])?.max_modulus());
    Ok(HolomorphicFactor {
        h,
        holomorphy_residual: if scale == 0.0 { 0.0 } else { dh / scale },
        reconstruction: if wscale == 0.0 { rec } else { rec / wscale },
    })
}

/// Fewest samples taken on any circle.
pub const MIN_CIRCLE_SAMPLES: usize = 256;

/// `max |f|` over `samples` equispaced points of a circle.
pub fn circle_max_by(f: impl Fn(C64) -> Option<C64>, center: C64, radius: f64, samples: usize) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let n = samples.max(MIN_CIRCLE_SAMPLES);
    let mut best = 0.0f64;
    for k in 0..n {
        let z = center + C64::from_polar(radius, TAU * k as f64 / n as f64);
        best = best.max(f(z).ok_or(Error::OutsideFootprint)?.norm());
    }
    Ok(best)
}

/// `max |f|` on a circle, bilinear samples at a spacing of about `h/4`.
pub fn circle_max(f: &ComplexField, center: C64, radius: f64) -> Result<f64> {
    let n = (4.0 * TAU * radius / f.grid().h).ceil() as usize;
    circle_max_by(|z| f.sample(z), center, radius, n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeCircle {
    pub radii: [f64; 3],
    pub theta: f64,
    pub log_max: [f64; 3],
    /// `θ ln M(r₁) + (1−θ) ln M(r₃) − ln M(r₂)`.
    pub margin: f64,
}

fn three_circle_from(log_max: [f64; 3], r1: f64, r2: f64, r3: f64) -> ThreeCircle {
    let theta = (r3 / r2).ln() / (r3 / r1).ln();
    ThreeCircle {
        radii: [r1, r2, r3],
        theta,
        log_max,
        margin: theta * log_max[0] + (1.0 - theta) * log_max[2] - log_max[1],
    }
}

fn check_radii(r1: f64, r2: f64, r3: f64) -> Result<()> {
    if !(0.0 < r1 && r1 < r2 && r2 < r3) {
        return Err(Error::InvalidParameter(format!("need 0 < r1 < r2 < r3, got {r1}, {r2}, {r3}")));
    }
    Ok(())
}

/// Three-circle margin for an exactly evaluated function.
pub fn three_circle_check_fn(h: impl Fn(C64) -> C64, center: C64, r1: f64, r2: f64, r3: f64) -> Result<ThreeCircle> {
    check_radii(r1, r2, r3)?;
    let samples = 4096;
    let m = |r| circle_max_by(|z| Some(h(z)), center, r, samples).map(f64::ln);
    Ok(three_circle_from([m(r1)?, m(r2)?, m(r3)?], r1, r2, r3))
}

/// Three-circle margin for a field, on circles about the grid center.
pub fn three_circle_check(h: &ComplexField, r1: f64, r2: f64, r3: f64) -> Result<ThreeCircle> {
    check_radii(r1, r2, r3)?;
    let c = h.grid().center();
    let m = |r| circle_max(h, c, r).map(f64::ln);
    Ok(three_circle_from([m(r1)?, m(r2)?, m(r3)?], r1, r2, r3))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub r: f64,
    pub f_lambda: f64,
    pub d: f64,
    /// `1/θ = ln(2d/r) / ln d`.
    pub inv_theta: f64,
    pub theta: f64,
    /// `(1/θ) / (F |ln r|)`.
    pub ratio: f64,
}

/// `θ` from `−1/θ = ln(r/(2d)) / ln d`, `d = 1 + 1/(2F)`.
pub fn theta_exponent(r: f64, f_lambda: f64) -> Result<Theta> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 < r < 1, got {r}")));
    }
    if !(f_lambda >= 1.0 && f_lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("need F(lambda) >= 1, got {f_lambda}")));
    }
    let d = radii(f_lambda).1;
    let inv_theta = (2.0 * d / r).ln() / d.ln();
    Ok(Theta { r, f_lambda, d, inv_theta, theta: 1.0 / inv_theta, ratio: inv_theta / (f_lambda * r.ln().abs()) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeBallRecord {
    pub lambda: f64,
    pub f_lambda: f64,
    pub delta: f64,
    pub r: f64,
    pub b: f64,
    pub d: f64,
    /// Radius actually used for `B_d` norms of fields living on `Q_d`.
    pub d_eff: f64,
    pub theta: f64,
    pub norm_u_b1: f64,
    pub norm_u_br: f64,
    pub norm_u_br2: f64,
    pub norm_u_bd: f64,
    pub norm_u_bb: f64,
    pub norm_w1_b1: f64,
    pub norm_w1_br2: f64,
    pub norm_w2_br2: f64,
    pub norm_w1_bd: f64,
    pub norm_w2_bd: f64,
    /// `ln(‖w̃₁‖_{B_{r/2}} / ‖u‖_{B_{r/2}})`.
    pub w1_log_const: f64,
    /// `ln(δ r ‖w̃₂‖_{B_{r/2}} / ‖u‖_{B_r})`.
    pub w2_log_const: f64,
    /// Three-circle margins of `h₁`, `h₂` on `r/2 < 1 < d_eff`.
    pub h_margins: [f64; 2],
    pub holomorphy_residual: f64,
    pub reconstruction: f64,
    /// Smallest `E` with `‖u‖_{B₁} ≤ δ⁻¹ e^E (r⁻¹‖u‖_{B_r})^θ ‖u‖_{B_b}^{1−θ}`.
    pub implied_c: f64,
    /// Same for `‖u‖_{B₁} ≤ e^E [‖u‖_{B_{r/2}} + δ⁻¹r⁻¹‖u‖_{B_r}]^θ [‖u‖_{B_d} + δ⁻¹‖u‖_{B_b}]^{1−θ}`.
    pub precursor_c: f64,
    pub holds: bool,
}

impl ThreeBallRecord {
    /// The chain's constant per unit `λ`.
    pub fn c_per_lambda(&self) -> f64 {
        self.implied_c / self.lambda
    }
}

fn ball(f: &RealField, r: f64) -> Result<f64> {
    sup_norm(f, &Region::ball(f.grid().center(), r))
}

fn cball(f: &ComplexField, r: f64) -> Result<f64> {
    sup_norm(f, &Region::ball(f.grid().center(), r))
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Degenerate(format!("{name} = {v}")))
    }
}

/// Evaluate every norm of the three-ball chain for one instance and solve
/// for the implied constant. `u` lives on `Q_b`, the reduction and `sol`
/// on `Q_d`.
pub fn three_ball_experiment(u: &RealField, m: &Multiplier, s: &StreamData, sol: &BeltramiSolution, r: f64, f_lambda: f64) -> Result<ThreeBallRecord> {
    let th = theta_exponent(r, f_lambda)?;
    let (b, d) = radii(f_lambda);
    u.check_same(m.grid())?;
    let red = s.reduction.as_ref().ok_or_else(|| Error::InvalidParameter("stream data has no reduction".into()))?;
    if u.grid().half_side() + 1e-9 < b {
        return Err(Error::OutsideFootprint);
    }
    let qd = *red.w1t.grid();
    let d_eff = d.min(qd.half_side() - 0.5 * qd.h - 1e-9 * qd.h);

    let nu = |name, rad| positive(name, ball(u, rad)?);
    let (u1, ur, ur2, ud, ub) = (nu("|u|_B1", 1.0)?, nu("|u|_Br", r)?, nu("|u|_Br/2", 0.5 * r)?, nu("|u|_Bd", d)?, nu("|u|_Bb", b)?);
    let (w1, w2) = (&red.w1t, &red.w2t);
    let w1_b1 = cball(w1, 1.0)?;
    let (w1_br2, w2_br2) = (cball(w1, 0.5 * r)?, cball(w2, 0.5 * r)?);
    let (w1_bd, w2_bd) = (cball(w1, d_eff)?, cball(w2, d_eff)?);

    let hf = holomorphic_factor(&[w1.clone(), w2.clone()], sol, Margin::Cells(2))?;
    let margin_of = |h: &ComplexField| -> Result<f64> {
        if h.max_modulus() == 0.0 {
            return Ok(0.0);
        }
        Ok(three_circle_check(h, 0.5 * r, 1.0, d_eff)?.margin)
    };
    let h_margins = [margin_of(&hf.h[0])?, margin_of(&hf.h[1])?];

    let delta = s.delta;
    let theta = th.theta;
    let implied_c = u1.ln() + delta.ln() - theta * (ur / r).ln() - (1.0 - theta) * ub.ln();
    let near = ur2 + ur / (delta * r);
    let far = ud + ub / delta;
    let precursor_c = u1.ln() - theta * near.ln() - (1.0 - theta) * far.ln();
    let rhs = -delta.ln() + implied_c + theta * (ur / r).ln() + (1.0 - theta) * ub.ln();
    Ok(ThreeBallRecord {
        lambda: m.lambda,
        f_lambda,
        delta,
        r,
        b,
        d,
        d_eff,
        theta,
        norm_u_b1: u1,
        norm_u_br: ur,
        norm_u_br2: ur2,
        norm_u_bd: ud,
        norm_u_bb: ub,
        norm_w1_b1: w1_b1,
        norm_w1_br2: w1_br2,
        norm_w2_br2: w2_br2,
        norm_w1_bd: w1_bd,
        norm_w2_bd: w2_bd,
        w1_log_const: (w1_br2 / ur2).ln(),
        w2_log_const: (delta * r * w2_br2 / ur).ln(),
        h_margins,
        holomorphy_residual: hf.holomorphy_residual,
        reconstruction: hf.reconstruction,
        implied_c,
        precursor_c,
        holds: u1.ln() <= rhs + 1e-12 * rhs.abs().max(1.0),
    })
}

/// Constants of the vanishing-order hypotheses `‖u‖_{B_b} ≤ e^{C₁λ}` and
/// `‖u‖_{B₁} ≥ e^{−c₁λ^p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub c_upper: f64,
    pub c_lower: f64,
    pub p: f64,
}

impl Default for Hypotheses {
    fn default() -> Self {
        Hypotheses { c_upper: 5.0, c_lower: 4.0, p: 1.0 }
    }
}

impl Hypotheses {
    /// `q = max{1, p}`.
    pub fn q(&self) -> f64 {
        self.p.max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishingRecord {
    pub lambda: f64,
    pub f_lambda: f64,
    pub r_grid: Vec<f64>,
    pub log_norms: Vec<f64>,
    pub fitted_exponent: f64,
    pub intercept: f64,
    /// `λ^q F(λ)`.
    pub scale: f64,
    /// `Ĉ` and `Ĉ λ^q F(λ)`, filled in by [`calibrate`].
    pub c_hat: f64,
    pub bound_exponent: f64,
    /// `h / r_min`, the size of the grid bias at the smallest radius.
    pub resolution_bias: f64,
}

impl VanishingRecord {
    pub fn within_bound(&self) -> bool {
        self.fitted_exponent <= self.bound_exponent * (1.0 + 1e-12)
    }
}

/// `m` radii log-spaced from `1/2` down to `16h`, decreasing.
pub fn default_r_grid(h: f64, count: usize) -> Result<Vec<f64>> {
    let (hi, lo) = (0.5, 16.0 * h);
    if count < 2 || !(lo < hi) {
        return Err(Error::InvalidParameter(format!("no radii in [16h, 1/2] = [{lo}, {hi}]")));
    }
    let step = (lo / hi).ln() / (count - 1) as f64;
    Ok((0..count).map(|k| hi * (step * k as f64).exp()).collect())
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `ln ‖u‖_{B_r}` against `ln r`, after checking the theorem's
/// hypotheses on `u`.
pub fn vanishing_order_experiment(u: &RealField, lambda: f64, f_lambda: f64, r_grid: &[f64], hyp: &Hypotheses) -> Result<VanishingRecord> {
    if r_grid.len() < 6 {
        return Err(Error::InvalidParameter(format!("need at least 6 radii, got {}", r_grid.len())));
    }
    if r_grid.windows(2).any(|w| !(w[1] < w[0])) || r_grid[r_grid.len() - 1] <= 0.0 {
        return Err(Error::InvalidParameter("radii must be positive and strictly decreasing".into()));
    }
    let (b, _) = radii(f_lambda);
    let nb = ball(u, b)?;
    if nb.ln() > hyp.c_upper * lambda {
        return Err(Error::HypothesisBreach(format!("|u|_B_b = {nb:.6e} exceeds exp(C1 lambda) with C1 = {}", hyp.c_upper)));
    }
    let n1 = ball(u, 1.0)?;
    if !(n1.ln() >= -hyp.c_lower * lambda.powf(hyp.p)) {
        return Err(Error::HypothesisBreach(format!("|u|_B_1 = {n1:.6e} below exp(-c1 lambda^p) with c1 = {}, p = {}", hyp.c_lower, hyp.p)));
    }
    let mut log_norms = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        log_norms.push(positive("|u|_Br", ball(u, r)?)?.ln());
    }
    let x: Vec<f64> = r_grid.iter().map(|r| r.ln()).collect();
    let (slope, intercept) = least_squares(&x, &log_norms);
    Ok(VanishingRecord {
        lambda,
        f_lambda,
        r_grid: r_grid.to_vec(),
        log_norms,
        fitted_exponent: slope,
        intercept,
        scale: lambda.powf(hyp.q()) * f_lambda,
        c_hat: f64::NAN,
        bound_exponent: f64::NAN,
        resolution_bias: u.grid().h / r_grid[r_grid.len() - 1],
    })
}

/// Fit `Ĉ = max slope / (λ^q F(λ))` over a run and fill in every record's
/// bound.
pub fn calibrate(records: &mut [VanishingRecord]) -> f64 {
    let c = records.iter().map(|r| r.fitted_exponent / r.scale).fold(0.0, f64::max);
    for r in records.iter_mut() {
        r.c_hat = c;
        r.bound_exponent = c * r.scale;
    }
    c
}

/// `max|v| / min|v|` when every value is finite, nonzero and of one sign;
/// infinite otherwise.
pub fn signed_band(values: &[f64]) -> f64 {
    let ok = !values.is_empty()
        && values.iter().all(|v| v.is_finite() && *v != 0.0)
        && (values.iter().all(|v| *v > 0.0) || values.iter().all(|v| *v < 0.0));
    if !ok {
        return f64::INFINITY;
    }
    let a: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    a.iter().cloned().fold(0.0, f64::max) / a.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::random::{gaussian_coefficients, polyval, rng};
    use proptest::prelude::*;

    fn grid(half: f64, n: usize) -> Grid {
        Grid::square(C64::new(0.0, 0.0), half, n).unwrap()
    }

    #[test]
    fn theta_example() {
        let t = theta_exponent(0.5, 10.0).unwrap();
        assert!((t.d - 1.05).abs() < 1e-15);
        assert!((t.inv_theta - 29.41).abs() < 5e-3, "{}", t.inv_theta);
        assert!((t.theta - 0.0340).abs() < 5e-5);
        let lim = |f: f64| {
            let d = radii(f).1;
            d.ln() / (2.0 * d).ln()
        };
        let near = theta_exponent(0.999, 3.0).unwrap().theta;
        assert!((near / lim(3.0) - 1.0).abs() < 0.01);
        assert!(theta_exponent(1.0, 2.0).is_err() && theta_exponent(0.5, 0.5).is_err());
    }

    #[test]
    fn theta_ratio_bounded_below() {
        for l in [4.0, 10.0, 25.0] {
            for r in [0.1, 0.5] {
                let t = theta_exponent(r, l).unwrap();
                assert!(t.ratio >= 1.0 && t.ratio <= 10.0, "{l} {r} {}", t.ratio);
            }
        }
    }

    #[test]
    fn circle_max_examples() {
        let g = grid(1.0, 128);
        let z = ComplexField::from_fn(g, |z| z);
        assert!((circle_max(&z, C64::new(0.0, 0.0), 0.6).unwrap() - 0.6).abs() <= 2.0 * g.h);
        let c = ComplexField::constant(g, C64::new(0.3, -0.4));
        assert!((circle_max(&c, C64::new(0.1, 0.0), 0.5).unwrap() - 0.5).abs() < 1e-14);
        assert!(circle_max(&c, C64::new(0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn circle_max_matches_thin_annulus() {
        let g = grid(1.0, 256);
        let f = ComplexField::from_fn(g, |z| (z * 2.0).exp() + z * z);
        let rho = 0.7;
        let cm = circle_max(&f, C64::new(0.0, 0.0), rho).unwrap();
        let ann = (0..g.len())
            .filter(|&k| (g.point_at(k).norm() - rho).abs() <= g.h)
            .map(|k| f.values()[k].norm())
            .fold(0.0, f64::max);
        assert!((cm - ann).abs() <= 10.0 * g.h * cm, "{cm} {ann}");
    }

    #[test]
    fn powers_are_the_equality_case() {
        for n in 1..6 {
            let t = three_circle_check_fn(|z| z.powu(n), C64::new(0.0, 0.0), 0.2, 0.5, 0.9).unwrap();
            assert!(t.margin.abs() < 1e-9, "{n} {}", t.margin);
        }
        let g = grid(1.0, 256);
        let f = ComplexField::from_fn(g, |z| z.powu(3));
        assert!(three_circle_check(&f, 0.2, 0.5, 0.9).unwrap().margin.abs() < 1e-3);
    }

    #[test]
    fn exponential_and_random_polynomials() {
        let t = three_circle_check_fn(|z| z.exp(), C64::new(0.0, 0.0), 0.25, 0.5, 0.75).unwrap();
        assert!(t.margin >= -1e-3);
        let mut r = rng(17);
        for _ in 0..100 {
            let c = gaussian_coefficients(&mut r, 10);
            let t = three_circle_check_fn(|z| polyval(&c, z), C64::new(0.0, 0.0), 0.3, 0.6, 0.95).unwrap();
            let scale = t.log_max.iter().map(|v| v.abs()).fold(1.0, f64::max);
            assert!(t.margin >= -1e-3 * scale, "{}", t.margin);
        }
    }

    #[test]
    fn powers_vanish_at_their_order() {
        let g = grid(2.0, 1024);
        let rg = default_r_grid(g.h, 8).unwrap();
        for n in 1..=3u32 {
            let u = RealField::from_fn(g, |z| z.powu(n).re);
            let rec = vanishing_order_experiment(&u, 1.0, 1.0, &rg, &Hypotheses::default()).unwrap();
            assert!((rec.fitted_exponent - n as f64).abs() < 0.05, "{n} {}", rec.fitted_exponent);
        }
    }

    #[test]
    fn exponential_does_not_vanish() {
        let g = grid(2.0, 1024);
        let slope = |lo: f64| {
            let rg: Vec<f64> = (0..6).map(|k| lo * 0.5f64.powi(k)).collect();
            let u = RealField::from_fn(g, |z| (2.0 * z.re).exp());
            vanishing_order_experiment(&u, 2.0, 1.0, &rg, &Hypotheses::default()).unwrap().fitted_exponent
        };
        let (a, b) = (slope(0.5), slope(0.125));
        assert!(b < a && b < 0.25, "{a} {b}");
    }

    #[test]
    fn hypothesis_failures_are_named() {
        let g = grid(2.0, 64);
        let rg = default_r_grid(g.h / 4.0, 6).unwrap();
        let big = RealField::from_fn(g, |z| (20.0 * z.re).exp());
        let e = vanishing_order_experiment(&big, 1.0, 1.0, &rg, &Hypotheses::default()).unwrap_err();
        assert!(e.to_string().contains("C1"), "{e}");
        let tiny = RealField::constant(g, 1e-6);
        let e = vanishing_order_experiment(&tiny, 1.0, 1.0, &rg, &Hypotheses::default()).unwrap_err();
        assert!(e.to_string().contains("c1"), "{e}");
        assert!(vanishing_order_experiment(&tiny, 1.0, 1.0, &rg[..4], &Hypotheses::default()).is_err());
    }

    #[test]
    fn calibration_bounds_every_record() {
        let g = grid(2.0, 512);
        let rg = default_r_grid(g.h, 6).unwrap();
        let mut recs: Vec<VanishingRecord> = [1.0, 2.0]
            .iter()
            .map(|&l| {
                let u = RealField::from_fn(g, |z| 1.0 + l * z.re + z.im * z.im);
                vanishing_order_experiment(&u, l, 1.0, &rg, &Hypotheses::default()).unwrap()
            })
            .collect();
        let c = calibrate(&mut recs);
        assert!(c > 0.0 && recs.iter().all(|r| r.within_bound()));
    }

    #[test]
    fn signed_bands() {
        assert_eq!(signed_band(&[-1.0, -3.0]), 3.0);
        assert_eq!(signed_band(&[2.0, 4.0]), 2.0);
        assert!(signed_band(&[-1.0, 1.0]).is_infinite());
    }

    proptest! {
        #[test]
        fn theta_is_monotone(r in 0.01f64..0.95, f in 1.0f64..50.0, df in 0.01f64..10.0, dr in 0.01f64..0.9) {
            let t = theta_exponent(r, f).unwrap();
            prop_assert!(theta_exponent(r, f + df).unwrap().theta < t.theta);
            prop_assert!(theta_exponent(r * (1.0 - dr), f).unwrap().theta < t.theta);
            prop_assert!(t.theta > 0.0 && t.theta < 1.0);
        }

        #[test]
        fn three_circle_margin_nonnegative_for_polynomials(seed in any::<u64>(), deg in 0usize..=10) {
            let c = gaussian_coefficients(&mut rng(seed), deg);
            let t = three_circle_check_fn(|z| polyval(&c, z), C64::new(0.0, 0.0), 0.2, 0.45, 0.9).unwrap();
            let scale = t.log_max.iter().map(|v| v.abs()).fold(1.0, f64::max);
            prop_assert!(t.margin >= -1e-3 * scale);
        }
    }
}
