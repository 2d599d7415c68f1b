//! `landis`: the iterated scale schedule.

use anyhow::Result;
use clap::Args;
use ucplab::landis::{run_schedule, ScheduleConfig};

use crate::run::{num, opt, RunDir};

#[derive(Debug, Clone, Args)]
pub struct LandisArgs {
    #[arg(long, default_value_t = 0.2)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eps0: f64,
    #[arg(long = "S0", default_value_t = 1e6)]
    pub s0: f64,
    /// Growth constant in |u| ≤ exp(C₀|z|).
    #[arg(long = "C0", conflicts_with = "symbolic")]
    pub c_big0: Option<f64>,
    /// Constant of the initial estimate exp(−c S₀^{4/3} log S₀).
    #[arg(long, conflicts_with = "symbolic")]
    pub c: Option<f64>,
    /// Decay constant of V₋.
    #[arg(long = "c0", conflicts_with = "symbolic")]
    pub c0: Option<f64>,
    /// m = 2 c_∞ C₃ in the admissibility condition.
    #[arg(long, conflicts_with = "symbolic")]
    pub m_hat: Option<f64>,
    /// Lumped constant of the step estimates.
    #[arg(long, conflicts_with = "symbolic")]
    pub c_step: Option<f64>,
    /// Every constant set to 1.
    #[arg(long)]
    pub symbolic: bool,
    /// Start from this α₀ instead of deriving it from S₀.
    #[arg(long)]
    pub alpha0: Option<f64>,
}

impl LandisArgs {
    pub fn schedule_config(&self) -> ScheduleConfig {
        let mut c = ScheduleConfig::symbolic(self.eps, self.eps0, self.s0);
        c.c_big0 = self.c_big0.unwrap_or(c.c_big0);
        c.c = self.c.unwrap_or(c.c);
        c.c0 = self.c0.unwrap_or(c.c0);
        c.m_hat = self.m_hat.unwrap_or(c.m_hat);
        c.c_step = self.c_step.unwrap_or(c.c_step);
        c.alpha0 = self.alpha0;
        c
    }
}

pub const HEADER: [&str; 9] = ["n", "S_n", "ln_S_n", "alpha_n", "closed_form", "ratio", "ratio_ok", "admissible", "large_ok"];

pub fn landis(run: &mut RunDir, a: &LandisArgs) -> Result<serde_json::Value> {
    let cfg = a.schedule_config();
    let s = run_schedule(&cfg)?;
    let rows: Vec<Vec<String>> = s
        .trajectory
        .iter()
        .map(|t| {
            vec![
                t.n.to_string(),
                num(t.s()),
                num(t.ln_s),
                num(t.alpha),
                num(t.closed_form),
                opt(t.ratio),
                t.ratio_ok.to_string(),
                t.admissible.to_string(),
                t.large_ok.to_string(),
            ]
        })
        .collect();
    run.write_csv("landis.csv", &HEADER, &rows)?;
    let cert = serde_json::json!({
        "config": cfg,
        "certified": s.certified(),
        "eps1": s.eps1,
        "alpha0": s.alpha0,
        "alpha0_required": s.alpha0_required,
        "s_tilde": s.s_tilde,
        "n_final": s.n_final,
        "ln_s_final": s.ln_s_final,
        "final_threshold_ln_s": s.final_threshold_ln_s,
        "final_ok": s.final_ok,
        "final_exponent": s.final_exponent,
        "ratio_ok": s.ratio_ok,
        "admissible": s.admissible,
        "closed_form_error": s.closed_form_error,
    });
    run.write_json("certificate.json", &cert)?;
    Ok(cert)
}
