//! `beltrami`: solve `∂̄P = AP` globally or on a strip partition, or run
//! the bound sweep.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use ucplab::cauchy::CauchyOp;
use ucplab::similarity::gluing::{GluingCertificate, PartitionConfig};
use ucplab::similarity::majorant::MajorantCertificate;
use ucplab::similarity::neumann::NeumannCertificate;
use ucplab::similarity::partition::{auto_delta, DeltaChoice};
use ucplab::similarity::sweep::{band, summarize, SweepSummary};
use ucplab::similarity::{
    bound_sweep, choose_delta, global_solve, make_partition, solve_on_partition, BeltramiSolution, GlobalConfig, MatrixField, RandomMatrix,
};
use ucplab::ucpf::{self, UcpfField};
use ucplab::Grid;

use crate::run::{num, opt, RunDir};

#[derive(Debug, Clone, Args)]
pub struct BeltramiArgs {
    /// Directory with a11.ucpf, a12.ucpf, a21.ucpf, a22.ucpf.
    #[arg(long, conflicts_with_all = ["random", "sweep"])]
    pub a: Option<PathBuf>,
    /// Random coefficient with sup ‖A(z)‖ = M, drawn from the global seed.
    #[arg(long, conflicts_with = "sweep")]
    pub random: Option<f64>,
    /// Grid size of a random A on the unit square (global solve only).
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Solve on the strip partition with this admissible δ = 2/(2k+3).
    #[arg(long, conflicts_with_all = ["auto_delta", "c1"])]
    pub delta: Option<f64>,
    /// Partition with the largest δ that certifies the local solves.
    #[arg(long, conflicts_with = "c1")]
    pub auto_delta: bool,
    /// Partition with δ = c₁/(M ln M) rounded down to an admissible value.
    #[arg(long)]
    pub c1: Option<f64>,
    /// Cells per δ/2 on the partition grid.
    #[arg(long, default_value_t = 12)]
    pub m: usize,
    #[arg(long, default_value_t = GlobalConfig::default().tol)]
    pub tol: f64,
    /// Bound sweep over these M instead of a single solve.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<f64>>,
    /// Samples per M in the sweep.
    #[arg(long, default_value_t = 5)]
    pub samples: usize,
}

#[derive(Debug, Serialize)]
struct LocalSummary {
    strip: usize,
    certificate: NeumannCertificate,
}

#[derive(Debug, Serialize)]
struct TransitionSummary {
    index: usize,
    sup_norm: f64,
    sup_inv_norm: f64,
    holomorphy: f64,
    bounded: bool,
}

#[derive(Debug, Serialize)]
struct Certificate {
    delta: Option<f64>,
    choice: Option<DeltaChoice>,
    locals: Vec<LocalSummary>,
    transitions: Vec<TransitionSummary>,
    gluing: Option<GluingCertificate>,
    majorant: Option<MajorantCertificate>,
}

#[derive(Debug, Serialize)]
struct SolutionMeta {
    method: ucplab::similarity::global::Method,
    iterations: usize,
    residual: f64,
    inverse_defect: f64,
    norm_p: f64,
    norm_p_inv: f64,
    history: Vec<f64>,
}

const ENTRIES: [&str; 4] = ["a11", "a12", "a21", "a22"];

fn load_matrix(run: &mut RunDir, dir: &PathBuf) -> Result<MatrixField> {
    let mut e = vec![];
    for name in ENTRIES {
        let path = dir.join(format!("{name}.ucpf"));
        e.push(ucpf::load(&path).with_context(|| format!("loading {}", path.display()))?.into_complex());
        run.input(&path);
    }
    let [a11, a12, a21, a22]: [_; 4] = e.try_into().expect("four entries");
    Ok(MatrixField::from_entries(a11, a12, a21, a22)?)
}

fn save_matrix(run: &mut RunDir, prefix: &str, m: &MatrixField) -> Result<()> {
    for (name, f) in ENTRIES.iter().zip([&m.a11, &m.a12, &m.a21, &m.a22]) {
        run.save_field(&format!("{prefix}/{name}.ucpf"), &UcpfField::Complex(f.clone()))?;
    }
    Ok(())
}

pub fn beltrami(run: &mut RunDir, a: &BeltramiArgs, seed: u64) -> Result<serde_json::Value> {
    if let Some(ms) = &a.sweep {
        return sweep(run, a, ms, seed);
    }
    let loaded = match (&a.a, a.random) {
        (Some(dir), _) => Some(load_matrix(run, dir)?),
        (None, Some(_)) => None,
        (None, None) => bail!("give --a <dir>, --random <M> or --sweep <M,...>"),
    };
    let m_norm = match (&loaded, a.random) {
        (Some(am), _) => am.sup_opnorm(),
        (None, Some(m)) => m,
        _ => unreachable!(),
    };
    let global = GlobalConfig { tol: a.tol, ..GlobalConfig::default() };
    let choice = if a.auto_delta {
        Some(auto_delta(m_norm)?)
    } else if let Some(c1) = a.c1 {
        Some(choose_delta(m_norm, c1)?)
    } else {
        None
    };
    let delta = choice.map(|c| c.delta).or(a.delta);
    let sample = |grid: Grid| -> Result<MatrixField> {
        match &loaded {
            Some(am) => {
                if !am.a11.grid().matches(&grid) {
                    bail!("A lives on a {}x{} grid with h = {}; this solve needs {}x{} with h = {}", am.a11.grid().nx, am.a11.grid().ny, am.a11.grid().h, grid.nx, grid.ny, grid.h);
                }
                Ok(am.clone())
            }
            None => Ok(RandomMatrix::new(seed, m_norm).sample(grid)),
        }
    };
    let sol: BeltramiSolution = match delta {
        Some(d) => {
            let part = make_partition(d)?;
            let cfg = PartitionConfig { m: a.m, global, ..PartitionConfig::default() };
            let am = sample(part.grid(a.m)?)?;
            solve_on_partition(&am, &part, &cfg)?
        }
        None => {
            let grid = match &loaded {
                Some(am) => *am.a11.grid(),
                None => Grid::rect(0.0, 0.0, 1.0 / a.n as f64, a.n, a.n)?,
            };
            global_solve(&sample(grid)?, &CauchyOp::new(grid), &global)?
        }
    };
    save_matrix(run, "p", &sol.p)?;
    save_matrix(run, "p_inv", &sol.p_inv)?;
    let meta = SolutionMeta {
        method: sol.method,
        iterations: sol.iterations,
        residual: sol.residual,
        inverse_defect: sol.inverse_defect,
        norm_p: sol.p.sup_opnorm(),
        norm_p_inv: sol.p_inv.sup_opnorm(),
        history: sol.history.clone(),
    };
    run.write_json("solution.json", &meta)?;
    let cert = Certificate {
        delta,
        choice,
        locals: sol.locals.iter().map(|l| LocalSummary { strip: l.strip, certificate: l.certificate.clone() }).collect(),
        transitions: sol
            .transitions
            .iter()
            .map(|t| TransitionSummary { index: t.index, sup_norm: t.sup_norm, sup_inv_norm: t.sup_inv_norm, holomorphy: t.holomorphy, bounded: t.bounded() })
            .collect(),
        gluing: sol.certificates.gluing.clone(),
        majorant: sol.certificates.majorant.clone(),
    };
    run.write_json("certificate.json", &cert)?;
    Ok(serde_json::json!({ "m_norm": m_norm, "delta": delta, "residual": sol.residual, "method": sol.method }))
}

#[derive(Debug, Serialize)]
struct SweepReport {
    summaries: Vec<SweepSummary>,
    /// max/min of the median ratios over M.
    band: f64,
}

fn sweep(run: &mut RunDir, a: &BeltramiArgs, ms: &[f64], seed: u64) -> Result<serde_json::Value> {
    let global = GlobalConfig { tol: a.tol, ..GlobalConfig::default() };
    let rows = bound_sweep(ms, a.samples, a.n, seed, &global)?;
    let header = ["M", "sample", "seed", "n", "norm_P", "norm_P_inv", "log_sum", "ratio", "iterations", "residual", "status"];
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.m),
                r.sample.to_string(),
                r.seed.to_string(),
                r.n.to_string(),
                num(r.norm_p),
                num(r.norm_p_inv),
                num(r.log_sum),
                opt(r.ratio),
                r.iterations.to_string(),
                num(r.residual),
                r.status.clone(),
            ]
        })
        .collect();
    for r in rows.iter().filter(|r| r.status != "ok") {
        run.fail(None, Some(r.seed), Some(r.n), format!("M = {}: {}", r.m, r.status));
    }
    run.write_csv("sweep.csv", &header, &csv_rows)?;
    let summaries = summarize(&rows);
    let report = SweepReport { band: band(&summaries.iter().map(|s| s.median_ratio).collect::<Vec<_>>()), summaries };
    run.write_json("summary.json", &report)?;
    Ok(serde_json::to_value(report)?)
}
