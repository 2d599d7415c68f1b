//! The Landis iteration: one rescaling step and the full schedule of
//! exponents `α_n` down to `1/(1 − ε₁)`.
//!
//! Radii grow like iterated powers, so `S_n` is carried as `ln S_n`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInput {
    pub s: f64,
    pub alpha: f64,
    pub eps: f64,
    pub eps0: f64,
    pub c0: f64,
    pub c_big0: f64,
    pub m: f64,
}

/// How the rescaled problem feeds the order-of-vanishing estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterMapping {
    /// `λ = T`.
    pub lambda: f64,
    /// `b = 1 + λ^{−ε}`.
    pub b: f64,
    /// `C₁ = 5C₀`.
    pub c_upper: f64,
    /// `c₁ = 4 ≥ 2^α`.
    pub c_lower: f64,
    /// `p = α(1 − ε)`.
    pub p: f64,
    /// `q = max{p, 1} + ε`.
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum StepCase {
    /// `α > 1/(1−ε)`: the bound `exp(−R^β)` at radius `R`.
    Case1 { beta: f64 },
    /// `α ≤ 1/(1−ε)`: the bound `exp(−C R^{exponent} log R)`.
    Case2 { exponent: f64, log_factor: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub t: f64,
    pub r: f64,
    pub case: StepCase,
    pub mapping: ParameterMapping,
}

fn check_eps(eps: f64, eps0: f64) -> Result<()> {
    if !(eps0 > 0.0 && eps > 0.0 && eps < eps0 / (1.0 + eps0)) {
        return Err(Error::InvalidParameter(format!("need 0 < eps < eps0/(1+eps0), got eps = {eps}, eps0 = {eps0}")));
    }
    Ok(())
}

/// `1/(1 − ε)`, the exponent below which the iteration stops.
pub fn critical_alpha(eps: f64) -> f64 {
    1.0 / (1.0 - eps)
}

/// `α − ((α − 1)/2) ε`.
pub fn next_alpha(alpha: f64, eps: f64) -> f64 {
    alpha - 0.5 * (alpha - 1.0) * eps
}

pub fn step(inp: &StepInput) -> Result<Step> {
    let StepInput { s, alpha, eps, eps0, c_big0, .. } = *inp;
    if !(alpha > 1.0) || alpha > 2.0 {
        return Err(Error::InvalidParameter(format!("need alpha in (1, 2], got {alpha}")));
    }
    check_eps(eps, eps0)?;
    if !(s > 2.0) {
        return Err(Error::InvalidParameter(format!("need S > 2, got {s}")));
    }
    let t = (0.5 * s).powf(1.0 / (1.0 - eps));
    let p = alpha * (1.0 - eps);
    let mapping = ParameterMapping { lambda: t, b: 1.0 + t.powf(-eps), c_upper: 5.0 * c_big0, c_lower: 4.0, p, q: p.max(1.0) + eps };
    let case = if alpha > critical_alpha(eps) {
        StepCase::Case1 { beta: next_alpha(alpha, eps) }
    } else {
        StepCase::Case2 { exponent: 1.0 + eps, log_factor: true }
    };
    Ok(Step { t, r: s + t - 1.0, case, mapping })
}

/// `ln(e^a + e^b)` without overflow.
fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln S_{n+1}` from `ln S_n` for `S_{n+1} = S_n + (S_n/2)^{1/(1−ε)} − 1`.
pub fn next_log_radius(ln_s: f64, eps: f64) -> f64 {
    let ln_t = (ln_s - std::f64::consts::LN_2) / (1.0 - eps);
    let sum = log_add(ln_s, ln_t);
    sum + (-(-sum).exp()).ln_1p()
}

/// `(1+ε₀) ln(S/2 − 1) − ln(S/2)/(1−ε) − ln(3m/c₀)` at `ln S`; the
/// admissibility inequality holds where this is nonnegative.
pub fn admissibility_gap(ln_s: f64, eps: f64, eps0: f64, m_hat: f64, c0: f64) -> f64 {
    let ln_half = ln_s - std::f64::consts::LN_2;
    let ln_half_m1 = ln_half + (-(-ln_half).exp()).ln_1p();
    (1.0 + eps0) * ln_half_m1 - ln_half / (1.0 - eps) - (3.0 * m_hat / c0).ln()
}

/// `(S/2 − 1)^{1+ε₀} / (S/2)^{1/(1−ε)} ≥ 3m/c₀`.
pub fn admissibility(s: f64, eps: f64, eps0: f64, m_hat: f64, c0: f64) -> bool {
    s > 2.0 && admissibility_gap(s.ln(), eps, eps0, m_hat, c0) >= 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub ln_s: f64,
    /// `e^{ln_s}`, infinite when it overflows.
    pub s: f64,
    /// `(1+ε₀) − 1/(1−ε)`, the rate at which the gap grows in `ln S`.
    pub exponent_gap: f64,
    /// Set when the threshold is beyond `f64` range.
    pub flagged: bool,
}

/// Smallest `S` at which the admissibility inequality holds.
pub fn admissibility_threshold(eps: f64, eps0: f64, m_hat: f64, c0: f64) -> Result<Threshold> {
    if !(m_hat > 0.0 && c0 > 0.0) {
        return Err(Error::InvalidParameter(format!("need m > 0 and c0 > 0, got {m_hat}, {c0}")));
    }
    let exponent_gap = (1.0 + eps0) - 1.0 / (1.0 - eps);
    if !(exponent_gap > 0.0) || eps <= 0.0 {
        return Err(Error::InvalidParameter(format!("exponents equalize: (1+eps0) - 1/(1-eps) = {exponent_gap:.3e} <= 0")));
    }
    let gap = |y| admissibility_gap(y, eps, eps0, m_hat, c0);
    // The gap is increasing in S: −∞ at S = 2⁺ and growing like
    // exponent_gap · ln S.
    let mut lo = std::f64::consts::LN_2;
    let mut hi = 2.0f64;
    while gap(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InvalidParameter("admissibility never holds".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let s = hi.exp();
    Ok(Threshold { ln_s: hi, s, exponent_gap, flagged: !s.is_finite() })
}

/// `ln S` above which `C S^{1+ε₁} ln S ≤ S^{1+ε}`, i.e. `ln C + ln ln S ≤ ε₁ ln S`.
pub fn final_threshold(eps1: f64, c: f64) -> Result<f64> {
    let gap = |y: f64| eps1 * y - c.ln() - y.ln();
    // The gap has its minimum at y = 1/ε₁ and increases past it.
    let mut lo = (1.0 / eps1).max(1.0);
    if gap(lo) >= 0.0 {
        return Ok(0.0);
    }
    let mut hi = 2.0 * lo;
    while gap(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InvalidParameter("final inequality never holds".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Inputs of the schedule; [`ScheduleConfig::symbolic`] sets every constant
/// to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub eps: f64,
    pub eps0: f64,
    pub s0: f64,
    /// Growth constant in `|u| ≤ exp(C₀|z|)`.
    pub c_big0: f64,
    /// Constant of the initial estimate `exp(−c S₀^{4/3} log S₀)`.
    pub c: f64,
    /// Decay constant of `V₋`.
    pub c0: f64,
    /// `m = 2 c_∞ C₃`.
    pub m_hat: f64,
    /// Lumped constant `C` of the step estimates.
    pub c_step: f64,
    /// Start from this `α₀` instead of deriving it from `S₀`.
    pub alpha0: Option<f64>,
}

impl ScheduleConfig {
    pub fn symbolic(eps: f64, eps0: f64, s0: f64) -> Self {
        ScheduleConfig { eps, eps0, s0, c_big0: 1.0, c: 1.0, c0: 1.0, m_hat: 1.0, c_step: 1.0, alpha0: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub n: usize,
    pub ln_s: f64,
    pub alpha: f64,
    /// `1 + (α₀ − 1)(1 − ε₁/2)ⁿ`.
    pub closed_form: f64,
    /// `α_{n+1}/α_n`, for steps taken in the first case.
    pub ratio: Option<f64>,
    pub ratio_ok: bool,
    pub admissible: bool,
    /// `(S/2)^{ε²/(2(1−ε)²)} / ln(S/2) ≥ C/(1−ε)`.
    pub large_ok: bool,
}

impl ScheduleStep {
    /// `S_n`, infinite once it leaves `f64` range.
    pub fn s(&self) -> f64 {
        self.ln_s.exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub eps: f64,
    pub eps1: f64,
    pub alpha0: f64,
    /// `c S₀^{4/3} ln S₀ ≤ S₀^{α}` holds from this `α` on.
    pub alpha0_required: f64,
    pub s0: f64,
    pub s_tilde: Threshold,
    pub trajectory: Vec<ScheduleStep>,
    pub n_final: usize,
    /// `ln S_{N+1}`.
    pub ln_s_final: f64,
    pub final_threshold_ln_s: f64,
    pub final_ok: bool,
    pub final_exponent: f64,
    pub ratio_ok: bool,
    pub admissible: bool,
    pub closed_form_error: f64,
}

impl Schedule {
    pub fn certified(&self) -> bool {
        self.ratio_ok && self.admissible && self.final_ok
    }
}

/// `⌈ln((α₀−1)(1−ε₁)/ε₁) / (−ln(1−ε₁/2))⌉ + 1`, an upper bound on `N`.
pub fn n_bound(alpha0: f64, eps1: f64) -> usize {
    let v = ((alpha0 - 1.0) * (1.0 - eps1) / eps1).ln() / -(1.0 - 0.5 * eps1).ln();
    v.max(0.0).ceil() as usize + 1
}

pub fn run_schedule(cfg: &ScheduleConfig) -> Result<Schedule> {
    let ScheduleConfig { eps, eps0, s0, c, c0, m_hat, c_step, .. } = *cfg;
    check_eps(eps, eps0)?;
    let eps1 = 0.5 * eps;
    let s_tilde = admissibility_threshold(eps1, eps0, m_hat, c0)?;
    if !(s0 > 2.0) || s0.ln() < s_tilde.ln_s {
        return Err(Error::HypothesisBreach(format!("S0 = {s0} below the admissibility threshold {:.6e}", s_tilde.s)));
    }
    let l = s0.ln();
    let alpha0_required = 4.0 / 3.0 + (c * l).ln() / l;
    let alpha0 = match cfg.alpha0 {
        Some(a) if a > 1.0 && a <= 2.0 => a,
        Some(a) => return Err(Error::InvalidParameter(format!("need alpha0 in (1, 2], got {a}"))),
        None if alpha0_required <= 2.0 => alpha0_required.max(4.0 / 3.0),
        None => {
            let need = final_threshold(2.0 / 3.0, c)?.exp();
            return Err(Error::HypothesisBreach(format!("no alpha0 <= 2 at S0 = {s0}: need S0 >= {need:.6e}")));
        }
    };

    let crit = critical_alpha(eps1);
    let bound = 1.0 - 0.5 * eps1 * eps1;
    let large_pow = eps1 * eps1 / (2.0 * (1.0 - eps1) * (1.0 - eps1));
    let large = |ln_s: f64| {
        let ln_half = ln_s - std::f64::consts::LN_2;
        ln_half > 0.0 && large_pow * ln_half - ln_half.ln() >= (c_step / (1.0 - eps1)).ln()
    };
    let (mut alpha, mut ln_s) = (alpha0, l);
    let mut trajectory = vec![];
    let mut err = 0.0f64;
    for n in 0.. {
        let closed = 1.0 + (alpha0 - 1.0) * (1.0 - 0.5 * eps1).powi(n as i32);
        err = err.max((alpha - closed).abs());
        let admissible = admissibility_gap(ln_s, eps1, eps0, m_hat, c0) >= 0.0;
        if alpha <= crit {
            trajectory.push(ScheduleStep { n, ln_s, alpha, closed_form: closed, ratio: None, ratio_ok: true, admissible, large_ok: large(ln_s) });
            break;
        }
        let next = next_alpha(alpha, eps1);
        let ratio = next / alpha;
        trajectory.push(ScheduleStep { n, ln_s, alpha, closed_form: closed, ratio: Some(ratio), ratio_ok: ratio < bound, admissible, large_ok: large(ln_s) });
        alpha = next;
        ln_s = next_log_radius(ln_s, eps1);
    }
    let n_final = trajectory.len() - 1;
    let ln_s_final = next_log_radius(ln_s, eps1);
    let fin = final_threshold(eps1, c_step)?;
    Ok(Schedule {
        eps,
        eps1,
        alpha0,
        alpha0_required,
        s0,
        s_tilde,
        ratio_ok: trajectory.iter().all(|s| s.ratio_ok),
        admissible: trajectory.iter().all(|s| s.admissible),
        trajectory,
        n_final,
        ln_s_final,
        final_threshold_ln_s: fin,
        final_ok: ln_s_final >= fin,
        final_exponent: 1.0 + eps,
        closed_form_error: err,
    })
}
