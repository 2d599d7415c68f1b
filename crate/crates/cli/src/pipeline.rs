//! The single-instance stages: gen, solve, multiplier, stream.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use ucplab::cauchy::CauchyOp;
use ucplab::elliptic::{gen_potential, Potential, PotentialMode, SolveConfig};
use ucplab::experiment::random_solution;
use ucplab::multiplier::{build_multiplier, shifted_potential, Boundary, Multiplier, MultiplierConfig};
use ucplab::stream::{assemble, build_stream, qd_window, residual, ResidualKind};
use ucplab::ucpf::{self, UcpfField};
use ucplab::{ComplexField, Grid, Margin, RealField, C64};

use crate::run::RunDir;

/// What a stage reports back for the manifest.
pub struct Stage {
    pub summary: serde_json::Value,
    pub seed: Option<u64>,
    pub n: Option<usize>,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&s).with_context(|| format!("parsing {}", path.display()))
}

fn load(run: &mut RunDir, path: PathBuf) -> Result<UcpfField> {
    let f = ucpf::load(&path).with_context(|| format!("loading {}", path.display()))?;
    run.input(&path);
    Ok(f)
}

fn real(f: &RealField) -> UcpfField {
    UcpfField::Real(f.clone())
}

fn complex(f: &ComplexField) -> UcpfField {
    UcpfField::Complex(f.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Local,
    Global,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    /// Half side of the square grid centered at 0.
    #[arg(long, default_value_t = 2.0)]
    pub half_side: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Local)]
    pub mode: ModeArg,
    /// Decay constant of V₋ in global mode.
    #[arg(long, default_value_t = 1.0)]
    pub c0: f64,
    /// Decay exponent offset of V₋ in global mode.
    #[arg(long, default_value_t = 0.5)]
    pub eps0: f64,
}

/// `potential.json` next to `v_plus.ucpf` and `v_minus.ucpf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialMeta {
    pub seed: u64,
    pub lambda: f64,
    pub delta: f64,
    pub mode: PotentialMode,
    pub c0: Option<f64>,
    pub eps0: Option<f64>,
    pub n: usize,
    pub half_side: f64,
}

pub fn gen(run: &mut RunDir, a: &GenArgs, seed: u64) -> Result<Stage> {
    let mode = match a.mode {
        ModeArg::Local => PotentialMode::Local,
        ModeArg::Global => PotentialMode::Global { c0: a.c0, eps0: a.eps0 },
    };
    let grid = Grid::square(C64::new(0.0, 0.0), a.half_side, a.n)?;
    let p = gen_potential(seed, a.lambda, a.delta, grid, mode)?;
    run.save_field("v_plus.ucpf", &real(&p.v_plus))?;
    run.save_field("v_minus.ucpf", &real(&p.v_minus))?;
    let (c0, eps0) = match mode {
        PotentialMode::Global { c0, eps0 } => (Some(c0), Some(eps0)),
        PotentialMode::Local => (None, None),
    };
    let meta = PotentialMeta { seed, lambda: a.lambda, delta: a.delta, mode, c0, eps0, n: a.n, half_side: a.half_side };
    run.write_json("potential.json", &meta)?;
    Ok(Stage { summary: serde_json::to_value(meta)?, seed: Some(seed), n: Some(a.n) })
}

fn load_potential(run: &mut RunDir, dir: &Path) -> Result<Potential> {
    let meta_path = dir.join("potential.json");
    let meta: PotentialMeta = read_json(&meta_path)?;
    run.input(&meta_path);
    let v_plus = load(run, dir.join("v_plus.ucpf"))?.into_real()?;
    let v_minus = load(run, dir.join("v_minus.ucpf"))?.into_real()?;
    v_minus.check_same(v_plus.grid())?;
    Ok(Potential { v_plus, v_minus, lambda: meta.lambda, delta: meta.delta, seed: meta.seed, mode: meta.mode })
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Run directory written by `gen`.
    #[arg(long)]
    pub potential: PathBuf,
    #[arg(long, default_value_t = SolveConfig::default().tol)]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveMeta {
    pub seed: u64,
    pub lambda: f64,
    pub delta: f64,
    /// Factor that brought `|u(0)|` to 1.
    pub normalization: f64,
    pub tol: f64,
}

/// Random low-frequency boundary data drawn from `seed`, normalized so
/// `|u(0)| = 1`.
pub fn solve(run: &mut RunDir, a: &SolveArgs, seed: Option<u64>) -> Result<Stage> {
    let p = load_potential(run, &a.potential)?;
    let seed = seed.unwrap_or(p.seed);
    let cfg = SolveConfig { tol: a.tol, ..SolveConfig::default() };
    let (u, normalization) = random_solution(seed, &p.v(), &cfg)?;
    run.save_field("u.ucpf", &real(&u))?;
    let meta = SolveMeta { seed, lambda: p.lambda, delta: p.delta, normalization, tol: a.tol };
    run.write_json("solve.json", &meta)?;
    Ok(Stage { summary: serde_json::to_value(meta)?, seed: Some(seed), n: Some(u.grid().nx) })
}

#[derive(Debug, Clone, Args)]
pub struct MultiplierArgs {
    /// Run directory written by `gen`.
    #[arg(long)]
    pub potential: PathBuf,
    #[arg(long, default_value_t = MultiplierConfig::default().tol)]
    pub tol: f64,
}

/// `multiplier.json` next to `log_phi.ucpf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierMeta {
    /// The stored field is `log φ`.
    pub log_space: bool,
    pub lambda: f64,
    pub delta: f64,
    pub iterations: usize,
}

pub fn multiplier(run: &mut RunDir, a: &MultiplierArgs) -> Result<Stage> {
    let p = load_potential(run, &a.potential)?;
    let cfg = MultiplierConfig { tol: a.tol, ..MultiplierConfig::default() };
    let m = build_multiplier(&shifted_potential(&p)?, p.lambda, p.delta, Boundary::Supersolution, &cfg)?;
    run.save_field("log_phi.ucpf", &real(&m.log_phi))?;
    let meta = MultiplierMeta { log_space: true, lambda: m.lambda, delta: m.delta, iterations: m.iterations };
    run.write_json("multiplier.json", &meta)?;
    run.write_json("certificate.json", &m.certificate)?;
    if !m.certificate.within_bounds {
        run.fail(Some(p.lambda), Some(p.seed), Some(p.grid().nx), "multiplier outside e^{±√8λ}");
    }
    let summary = serde_json::json!({ "multiplier": meta, "certificate": m.certificate });
    Ok(Stage { summary, seed: Some(p.seed), n: Some(p.grid().nx) })
}

fn load_multiplier(run: &mut RunDir, dir: &Path) -> Result<Multiplier> {
    let meta_path = dir.join("multiplier.json");
    let meta: MultiplierMeta = read_json(&meta_path)?;
    run.input(&meta_path);
    if !meta.log_space {
        bail!("{}: expected a log-space multiplier", meta_path.display());
    }
    let cert_path = dir.join("certificate.json");
    let certificate = read_json(&cert_path)?;
    run.input(&cert_path);
    let log_phi = load(run, dir.join("log_phi.ucpf"))?.into_real()?;
    Ok(Multiplier { log_phi, lambda: meta.lambda, delta: meta.delta, iterations: meta.iterations, certificate })
}

#[derive(Debug, Clone, Args)]
pub struct StreamArgs {
    /// `u.ucpf` written by `solve`, or its run directory.
    #[arg(long)]
    pub u: PathBuf,
    /// Run directory written by `multiplier`.
    #[arg(long)]
    pub multiplier: PathBuf,
    /// Overrides the multiplier's δ.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Also assemble w̃ and G on Q_d.
    #[arg(long)]
    pub d: Option<f64>,
    /// Physical margin of the residual checks.
    #[arg(long, default_value_t = 0.25)]
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamMeta {
    pub delta: f64,
    pub lambda: f64,
    pub threshold: f64,
    pub fields: Vec<String>,
    pub residuals: Vec<(String, f64)>,
    pub d: Option<f64>,
    pub c_hat: Option<f64>,
    pub c3_hat: Option<f64>,
    pub g_bound: Option<f64>,
    pub g_sup: Option<f64>,
}

pub fn stream(run: &mut RunDir, a: &StreamArgs) -> Result<Stage> {
    let path = if a.u.is_dir() { a.u.join("u.ucpf") } else { a.u.clone() };
    let u = load(run, path)?.into_real()?;
    let m = load_multiplier(run, &a.multiplier)?;
    let delta = a.delta.unwrap_or(m.delta);
    let mut s = build_stream(&u, &m, delta, None)?;
    if let Some(d) = a.d {
        let grid = *u.grid();
        assemble(&mut s, &CauchyOp::new(grid), &qd_window(&grid, d)?)?;
    }
    let mut fields: Vec<(&str, UcpfField)> = vec![
        ("v", real(&s.v)),
        ("v1", real(&s.v1)),
        ("v2", real(&s.v2)),
        ("w1", complex(&s.w1)),
        ("w2", complex(&s.w2)),
        ("alpha", complex(&s.alpha)),
        ("alphatilde", complex(&s.alphatilde)),
        ("deltatilde", complex(&s.deltatilde)),
        ("phi2", real(&s.phi2)),
    ];
    if let Some(r) = &s.reduction {
        fields.push(("w1t", complex(&r.w1t)));
        fields.push(("w2t", complex(&r.w2t)));
        for (name, f) in [("g11", &r.g.a11), ("g12", &r.g.a12), ("g21", &r.g.a21), ("g22", &r.g.a22)] {
            fields.push((name, complex(f)));
        }
    }
    for (name, f) in &fields {
        run.save_field(&format!("stream/{name}.ucpf"), f)?;
    }
    let margin = Margin::Width(a.margin);
    let mut residuals = vec![];
    for kind in ResidualKind::ALL {
        if kind == ResidualKind::VecBeltrami && s.reduction.is_none() {
            continue;
        }
        residuals.push((kind.name().to_string(), residual(&s, kind, margin)?));
    }
    let r = s.reduction.as_ref();
    let meta = StreamMeta {
        delta,
        lambda: s.lambda,
        threshold: s.threshold,
        fields: fields.iter().map(|(n, _)| n.to_string()).collect(),
        residuals,
        d: a.d,
        c_hat: r.map(|r| r.c_hat),
        c3_hat: r.map(|r| r.c3_hat),
        g_bound: r.map(|r| r.g_bound),
        g_sup: r.map(|r| r.g_sup),
    };
    run.write_json("stream/stream.json", &meta)?;
    Ok(Stage { summary: serde_json::to_value(meta)?, seed: None, n: Some(u.grid().nx) })
}

