//! Browser bindings: the scale schedule, the three-ball exponent and the
//! three-circle check. Results cross the boundary as JSON strings.

use serde::Serialize;
use ucplab::interpolation::{radii, theta_exponent, three_circle_check_fn};
use ucplab::landis::{run_schedule, ScheduleConfig};
use ucplab::random::{gaussian_coefficients, polyval, rng};
use ucplab::C64;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct SchedulePoint {
    pub n: usize,
    pub ln_s: f64,
    pub alpha: f64,
    pub ratio: Option<f64>,
    pub admissible: bool,
}

#[derive(Debug, Serialize)]
pub struct ScheduleView {
    pub alpha0: f64,
    pub eps1: f64,
    pub n_final: usize,
    pub target: f64,
    pub certified: bool,
    pub closed_form_error: f64,
    pub points: Vec<SchedulePoint>,
}

/// Symbolic-constant schedule; `alpha0` NaN derives it from `s0`.
pub fn schedule(eps: f64, eps0: f64, s0: f64, alpha0: f64) -> Result<ScheduleView, String> {
    let mut cfg = ScheduleConfig::symbolic(eps, eps0, s0);
    cfg.alpha0 = (!alpha0.is_nan()).then_some(alpha0);
    let s = run_schedule(&cfg).map_err(|e| e.to_string())?;
    Ok(ScheduleView {
        alpha0: s.alpha0,
        eps1: s.eps1,
        n_final: s.n_final,
        target: 1.0 / (1.0 - s.eps1),
        certified: s.certified(),
        closed_form_error: s.closed_form_error,
        points: s
            .trajectory
            .iter()
            .map(|t| SchedulePoint { n: t.n, ln_s: t.ln_s, alpha: t.alpha, ratio: t.ratio, admissible: t.admissible })
            .collect(),
    })
}

#[derive(Debug, Serialize)]
pub struct ThetaView {
    pub r: f64,
    pub f_lambda: f64,
    pub b: f64,
    pub d: f64,
    pub theta: f64,
    pub inv_theta: f64,
    pub ratio: f64,
}

pub fn theta(r: f64, f_lambda: f64) -> Result<ThetaView, String> {
    let t = theta_exponent(r, f_lambda).map_err(|e| e.to_string())?;
    let (b, d) = radii(f_lambda);
    Ok(ThetaView { r, f_lambda, b, d, theta: t.theta, inv_theta: t.inv_theta, ratio: t.ratio })
}

#[derive(Debug, Serialize)]
pub struct CircleView {
    pub coefficients: Vec<(f64, f64)>,
    pub radii: [f64; 3],
    pub theta: f64,
    pub log_max: [f64; 3],
    /// `θ ln M₁ + (1−θ) ln M₃ − ln M₂`; nonnegative when the theorem holds.
    pub margin: f64,
}

/// Random polynomial of the given degree, checked on three circles about 0.
pub fn three_circle(seed: u32, degree: usize, r1: f64, r2: f64, r3: f64) -> Result<CircleView, String> {
    let c = gaussian_coefficients(&mut rng(seed as u64), degree);
    let t = three_circle_check_fn(|z| polyval(&c, z), C64::new(0.0, 0.0), r1, r2, r3).map_err(|e| e.to_string())?;
    Ok(CircleView { coefficients: c.iter().map(|z| (z.re, z.im)).collect(), radii: t.radii, theta: t.theta, log_max: t.log_max, margin: t.margin })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = landisSchedule)]
pub fn landis_schedule_js(eps: f64, eps0: f64, s0: f64, alpha0: f64) -> Result<String, JsError> {
    to_js(schedule(eps, eps0, s0, alpha0))
}

#[wasm_bindgen(js_name = thetaExponent)]
pub fn theta_js(r: f64, f_lambda: f64) -> Result<String, JsError> {
    to_js(theta(r, f_lambda))
}

#[wasm_bindgen(js_name = threeCircle)]
pub fn three_circle_js(seed: u32, degree: usize, r1: f64, r2: f64, r3: f64) -> Result<String, JsError> {
    to_js(three_circle(seed, degree, r1, r2, r3))
}
