//! Corpus experiments: `threeball` and `vanishing`.

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;
use ucplab::experiment::build_instance;
use ucplab::interpolation::{calibrate, signed_band, ThreeBallRecord, VanishingRecord};

use crate::config::ExperimentConfig;
use crate::run::{num, opt, RunDir};

struct Job<T> {
    n: usize,
    lambda: f64,
    seed: u64,
    delta_used: f64,
    delta_prescribed: Option<f64>,
    out: ucplab::Result<T>,
}

/// Build every instance in parallel, keep only what `f` extracts from it.
fn over_corpus<T: Send>(cfg: &ExperimentConfig, f: impl Fn(&ucplab::experiment::Instance) -> ucplab::Result<T> + Sync) -> Vec<Job<T>> {
    cfg.jobs()
        .into_par_iter()
        .map(|(n, lambda, seed)| {
            let corpus = cfg.corpus(n);
            match build_instance(seed, lambda, &corpus) {
                Ok(inst) => Job { n, lambda, seed, delta_used: inst.delta_used, delta_prescribed: inst.delta_prescribed, out: f(&inst) },
                Err(e) => Job { n, lambda, seed, delta_used: f64::NAN, delta_prescribed: None, out: Err(e) },
            }
        })
        .collect()
}

pub const THREEBALL_HEADER: [&str; 29] = [
    "seed",
    "lambda",
    "n",
    "F_mode",
    "F",
    "delta_used",
    "delta_prescribed",
    "r",
    "b",
    "d",
    "d_eff",
    "theta",
    "norm_u_B1",
    "norm_u_Br",
    "norm_u_Br2",
    "norm_u_Bd",
    "norm_u_Bb",
    "norm_w1_B1",
    "norm_w1_Br2",
    "norm_w2_Br2",
    "norm_w1_Bd",
    "norm_w2_Bd",
    "h1_margin",
    "h2_margin",
    "holomorphy_residual",
    "precursor_C",
    "holds",
    "implied_C",
    "C_per_lambda",
];

#[derive(Debug, Serialize)]
struct ThreeBallSummary {
    rows: usize,
    failures: usize,
    c_per_lambda_min: Option<f64>,
    c_per_lambda_max: Option<f64>,
    /// Signed band of `implied_C/λ`; infinite on a sign change.
    c_per_lambda_band: Option<f64>,
    all_hold: bool,
}

pub fn threeball(run: &mut RunDir, cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    let jobs = over_corpus(cfg, |inst| cfg.r_list.iter().map(|&r| inst.three_ball(r)).collect::<ucplab::Result<Vec<ThreeBallRecord>>>());
    let mut rows = vec![];
    let mut cpl = vec![];
    let mut all_hold = true;
    for j in jobs {
        let recs = match j.out {
            Ok(v) => v,
            Err(e) => {
                run.fail(Some(j.lambda), Some(j.seed), Some(j.n), e);
                continue;
            }
        };
        for t in recs {
            cpl.push(t.c_per_lambda());
            all_hold &= t.holds;
            rows.push(vec![
                j.seed.to_string(),
                num(j.lambda),
                j.n.to_string(),
                cfg.f_mode.name().to_string(),
                num(t.f_lambda),
                num(j.delta_used),
                opt(j.delta_prescribed),
                num(t.r),
                num(t.b),
                num(t.d),
                num(t.d_eff),
                num(t.theta),
                num(t.norm_u_b1),
                num(t.norm_u_br),
                num(t.norm_u_br2),
                num(t.norm_u_bd),
                num(t.norm_u_bb),
                num(t.norm_w1_b1),
                num(t.norm_w1_br2),
                num(t.norm_w2_br2),
                num(t.norm_w1_bd),
                num(t.norm_w2_bd),
                num(t.h_margins[0]),
                num(t.h_margins[1]),
                num(t.holomorphy_residual),
                num(t.precursor_c),
                t.holds.to_string(),
                num(t.implied_c),
                num(t.c_per_lambda()),
            ]);
        }
    }
    run.write_csv("threeball.csv", &THREEBALL_HEADER, &rows)?;
    let summary = ThreeBallSummary {
        rows: rows.len(),
        failures: run.failures().len(),
        c_per_lambda_min: cpl.iter().copied().reduce(f64::min),
        c_per_lambda_max: cpl.iter().copied().reduce(f64::max),
        c_per_lambda_band: (!cpl.is_empty()).then(|| signed_band(&cpl)),
        all_hold,
    };
    run.write_json("summary.json", &summary)?;
    Ok(serde_json::to_value(summary)?)
}

pub const VANISHING_HEADER: [&str; 12] =
    ["seed", "lambda", "n", "F_mode", "F", "slope", "intercept", "bound_exponent", "C_hat", "within_bound", "scale", "resolution_bias"];

#[derive(Debug, Serialize)]
struct VanishingSummary {
    rows: usize,
    failures: usize,
    /// `Ĉ` per grid size, over every λ and seed at that size.
    c_hat: Vec<(usize, f64)>,
    all_within_bound: bool,
}

pub fn vanishing(run: &mut RunDir, cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    let jobs = over_corpus(cfg, |inst| inst.vanishing(cfg.radii, &cfg.hypotheses));
    let mut ok: Vec<(u64, usize, VanishingRecord)> = vec![];
    for j in jobs {
        match j.out {
            Ok(r) => ok.push((j.seed, j.n, r)),
            Err(e) => run.fail(Some(j.lambda), Some(j.seed), Some(j.n), e),
        }
    }
    let mut c_hat = vec![];
    for &n in &cfg.n_list {
        let mut recs: Vec<VanishingRecord> = ok.iter().filter(|(_, m, _)| *m == n).map(|(_, _, r)| r.clone()).collect();
        if recs.is_empty() {
            continue;
        }
        c_hat.push((n, calibrate(&mut recs)));
        let mut it = recs.into_iter();
        for (_, m, r) in ok.iter_mut() {
            if *m == n {
                *r = it.next().expect("same count");
            }
        }
    }
    let rows: Vec<Vec<String>> = ok
        .iter()
        .map(|(seed, n, r)| {
            vec![
                seed.to_string(),
                num(r.lambda),
                n.to_string(),
                cfg.f_mode.name().to_string(),
                num(r.f_lambda),
                num(r.fitted_exponent),
                num(r.intercept),
                num(r.bound_exponent),
                num(r.c_hat),
                r.within_bound().to_string(),
                num(r.scale),
                num(r.resolution_bias),
            ]
        })
        .collect();
    run.write_csv("vanishing.csv", &VANISHING_HEADER, &rows)?;
    let summary = VanishingSummary {
        rows: rows.len(),
        failures: run.failures().len(),
        c_hat,
        all_within_bound: ok.iter().all(|(_, _, r)| r.within_bound()),
    };
    run.write_json("summary.json", &summary)?;
    Ok(serde_json::to_value(summary)?)
}
