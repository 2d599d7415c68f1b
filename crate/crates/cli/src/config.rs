//! Experiment configuration: a JSON file, then command-line overrides.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use ucplab::elliptic::SolveConfig;
use ucplab::experiment::{CorpusConfig, DeltaMode};
use ucplab::interpolation::{FMode, Hypotheses};
use ucplab::multiplier::MultiplierConfig;
use ucplab::similarity::GlobalConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub solve: f64,
    pub multiplier: f64,
    pub gmres: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solve: SolveConfig::default().tol,
            multiplier: MultiplierConfig::default().tol,
            gmres: GlobalConfig::default().tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lambda_list: Vec<f64>,
    pub seed_list: Vec<u64>,
    pub n_list: Vec<usize>,
    pub f_mode: FMode,
    pub delta_mode: DeltaMode,
    /// `c₀`, `m` of the prescribed `δ`.
    pub delta_c0: f64,
    pub delta_m: f64,
    /// Three-ball radii `r`.
    pub r_list: Vec<f64>,
    /// Radii in the vanishing fit.
    pub radii: usize,
    pub hypotheses: Hypotheses,
    pub tolerances: Tolerances,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            lambda_list: vec![1.0, 2.0, 4.0],
            seed_list: vec![1, 2, 3, 4, 5],
            n_list: vec![256],
            f_mode: FMode::One,
            delta_mode: DeltaMode::Override(0.1),
            delta_c0: 1.0,
            delta_m: 1.0,
            r_list: vec![0.5],
            radii: 6,
            hypotheses: Hypotheses::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&s).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.lambda_list.iter().find(|&&l| !(l >= 1.0 && l.is_finite())) {
            bail!("lambda must be >= 1, got {l}");
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n < 8) {
            bail!("grid size must be >= 8, got {n}");
        }
        if let Some(r) = self.r_list.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
            bail!("three-ball radius must lie in (0, 1), got {r}");
        }
        if let DeltaMode::Override(d) = self.delta_mode {
            if !(d > 0.0 && d <= 1.0) {
                bail!("delta override must lie in (0, 1], got {d}");
            }
        }
        if self.radii < 2 {
            bail!("the vanishing fit needs at least 2 radii, got {}", self.radii);
        }
        let t = &self.tolerances;
        if !(t.solve > 0.0 && t.multiplier > 0.0 && t.gmres > 0.0) {
            bail!("tolerances must be positive");
        }
        Ok(())
    }

    pub fn corpus(&self, n: usize) -> CorpusConfig {
        let mut c = CorpusConfig {
            n,
            f_mode: self.f_mode,
            delta: self.delta_mode,
            delta_c0: self.delta_c0,
            delta_m: self.delta_m,
            ..CorpusConfig::default()
        };
        c.solve.tol = self.tolerances.solve;
        c.multiplier.tol = self.tolerances.multiplier;
        c.global.tol = self.tolerances.gmres;
        c
    }

    /// Every `(n, λ, seed)` in config order.
    pub fn jobs(&self) -> Vec<(usize, f64, u64)> {
        let mut v = vec![];
        for &n in &self.n_list {
            for &l in &self.lambda_list {
                for &s in &self.seed_list {
                    v.push((n, l, s));
                }
            }
        }
        v
    }
}

fn parse_delta(s: &str) -> Result<DeltaMode, String> {
    if s == "prescribed" {
        return Ok(DeltaMode::Prescribed);
    }
    s.parse::<f64>().map(DeltaMode::Override).map_err(|_| format!("expected a number or \"prescribed\", got {s:?}"))
}

fn parse_f_mode(s: &str) -> Result<FMode, String> {
    s.parse().map_err(|e: ucplab::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// Comma-separated λ values.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    /// Comma-separated seeds; defaults to the global --seed when that is set.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Comma-separated grid sizes.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// F(λ): one, sqrt or lambda.
    #[arg(long = "F", value_parser = parse_f_mode)]
    pub f_mode: Option<FMode>,
    /// A number, or "prescribed" for c₀√λ/log λ · e^{−mλ}.
    #[arg(long, value_parser = parse_delta)]
    pub delta: Option<DeltaMode>,
    /// Comma-separated three-ball radii.
    #[arg(long, value_delimiter = ',')]
    pub r: Option<Vec<f64>>,
    /// Radii in the vanishing fit.
    #[arg(long)]
    pub radii: Option<usize>,
}

impl ExperimentArgs {
    pub fn resolve(&self, file: Option<&Path>, seed: Option<u64>) -> Result<ExperimentConfig> {
        let mut c = match file {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.lambdas {
            c.lambda_list = v.clone();
        }
        match (&self.seeds, seed) {
            (Some(v), _) => c.seed_list = v.clone(),
            (None, Some(s)) => c.seed_list = vec![s],
            _ => {}
        }
        if let Some(v) = &self.n {
            c.n_list = v.clone();
        }
        if let Some(f) = self.f_mode {
            c.f_mode = f;
        }
        if let Some(d) = self.delta {
            c.delta_mode = d;
        }
        if let Some(v) = &self.r {
            c.r_list = v.clone();
        }
        if let Some(k) = self.radii {
            c.radii = k;
        }
        c.validate()?;
        Ok(c)
    }
}
