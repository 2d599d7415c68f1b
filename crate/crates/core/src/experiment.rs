//! Corpus instances: one potential, one solution `u` and everything the
//! reduction builds from it, ready for the three-ball and vanishing
//! experiments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cauchy::CauchyOp;
use crate::elliptic::{gen_potential, solve_dirichlet, Potential, PotentialMode, SolveConfig};
use crate::field::{Grid, RealField, C64};
use crate::interpolation::{default_r_grid, radii, three_ball_experiment, vanishing_order_experiment, FMode, Hypotheses, ThreeBallRecord, VanishingRecord};
use crate::multiplier::{build_multiplier, shifted_potential, Boundary, Multiplier, MultiplierConfig};
use crate::random::{substream, TrigSeries, MAX_MODES};
use crate::similarity::{global_solve, BeltramiSolution, GlobalConfig};
use crate::stream::{assemble, build_stream, qd_window, StreamData};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum DeltaMode {
    /// `δ = c₀√λ / log λ · e^{−mλ}`.
    Prescribed,
    Override(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub n: usize,
    pub f_mode: FMode,
    pub delta: DeltaMode,
    /// `c₀` and `m` of the prescribed `δ`.
    pub delta_c0: f64,
    pub delta_m: f64,
    pub solve: SolveConfig,
    pub multiplier: MultiplierConfig,
    pub global: GlobalConfig,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            n: 256,
            f_mode: FMode::Lambda,
            delta: DeltaMode::Override(0.1),
            delta_c0: 1.0,
            delta_m: 1.0,
            solve: SolveConfig::default(),
            multiplier: MultiplierConfig::default(),
            global: GlobalConfig::default(),
        }
    }
}

/// `c₀√λ / log λ · e^{−mλ}`; undefined for `λ ≤ 1`.
pub fn prescribed_delta(lambda: f64, c0: f64, m: f64) -> Option<f64> {
    (lambda > 1.0).then(|| c0 * lambda.sqrt() / lambda.ln() * (-m * lambda).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub seed: u64,
    pub lambda: f64,
    pub f_lambda: f64,
    pub b: f64,
    pub d: f64,
    pub delta_used: f64,
    pub delta_prescribed: Option<f64>,
    /// Factor that brought `|u(0)|` to 1.
    pub normalization: f64,
    pub potential: Potential,
    pub u: RealField,
    pub multiplier: Multiplier,
    pub stream: StreamData,
    pub solution: BeltramiSolution,
}

/// Largest `sup|u| / |u(0)|` accepted before redrawing the boundary data.
const MAX_PEAK_RATIO: f64 = 1e4;
const BOUNDARY_DRAWS: u64 = 8;

/// Solve `−Δu + Vu = 0` with random low-frequency boundary data
/// `0.5 + s/sup|s|`, redrawn until `u(0)` is not negligible, then scaled
/// so `|u(0)| = 1`. Returns `u` and the scale factor.
pub fn random_solution(seed: u64, v: &RealField, cfg: &SolveConfig) -> Result<(RealField, f64)> {
    let zero = RealField::zeros(*v.grid());
    for draw in 0..BOUNDARY_DRAWS {
        let s = TrigSeries::random(&mut substream(seed, 21 + draw), MAX_MODES, 3.0);
        let bound = s.bound();
        let u = solve_dirichlet(v, |z| 0.5 + s.eval(z) / bound, &zero, cfg)?;
        let u0 = u.sample(C64::new(0.0, 0.0)).ok_or(Error::OutsideFootprint)?.abs();
        if u0 > 0.0 && u.max_modulus() <= MAX_PEAK_RATIO * u0 {
            return Ok((u.scale(1.0 / u0), 1.0 / u0));
        }
    }
    Err(Error::Degenerate(format!("seed {seed}: u(0) negligible for every boundary draw")))
}

/// Generate, solve and reduce one instance on `Q_b`, `b = 1 + 1/F(λ)`.
pub fn build_instance(seed: u64, lambda: f64, cfg: &CorpusConfig) -> Result<Instance> {
    let f_lambda = cfg.f_mode.eval(lambda);
    let (b, d) = radii(f_lambda);
    let delta_prescribed = prescribed_delta(lambda, cfg.delta_c0, cfg.delta_m);
    let delta_used = match cfg.delta {
        DeltaMode::Override(v) => v,
        DeltaMode::Prescribed => delta_prescribed.ok_or_else(|| Error::InvalidParameter(format!("prescribed delta undefined at lambda = {lambda}")))?,
    };
    let grid = Grid::square(C64::new(0.0, 0.0), b, cfg.n)?;
    let potential = gen_potential(seed, lambda, delta_used, grid, PotentialMode::Local)?;
    let (u, normalization) = random_solution(seed, &potential.v(), &cfg.solve)?;
    let vd = shifted_potential(&potential)?;
    let multiplier = build_multiplier(&vd, lambda, delta_used, Boundary::Supersolution, &cfg.multiplier)?;
    let mut stream = build_stream(&u, &multiplier, delta_used, None)?;
    let qd = qd_window(&grid, d)?;
    assemble(&mut stream, &CauchyOp::new(grid), &qd)?;
    let g = &stream.reduction.as_ref().expect("assembled").g;
    let solution = global_solve(g, &CauchyOp::new(qd), &cfg.global)?;
    Ok(Instance { seed, lambda, f_lambda, b, d, delta_used, delta_prescribed, normalization, potential, u, multiplier, stream, solution })
}

impl Instance {
    pub fn three_ball(&self, r: f64) -> Result<ThreeBallRecord> {
        three_ball_experiment(&self.u, &self.multiplier, &self.stream, &self.solution, r, self.f_lambda)
    }

    /// Vanishing fit over `count` radii in `[16h, 1/2]`.
    pub fn vanishing(&self, count: usize, hyp: &Hypotheses) -> Result<VanishingRecord> {
        let rg = default_r_grid(self.u.grid().h, count)?;
        vanishing_order_experiment(&self.u, self.lambda, self.f_lambda, &rg, hyp)
    }
}

/// Every `(λ, seed)` pair, built in parallel; order follows the inputs.
pub fn build_corpus(lambdas: &[f64], seeds: &[u64], cfg: &CorpusConfig) -> Vec<(f64, u64, Result<Instance>)> {
    let jobs: Vec<(f64, u64)> = lambdas.iter().flat_map(|&l| seeds.iter().map(move |&s| (l, s))).collect();
    jobs.par_iter().map(|&(l, s)| (l, s, build_instance(s, l, cfg))).collect()
}
