//! Random coefficient matrices and the `‖P‖ + ‖P⁻¹‖` sweep over `M`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::global::{global_solve, GlobalConfig};
use super::matrix::{Mat2, MatrixField};
use crate::cauchy::CauchyOp;
use crate::field::{Grid, C64};
use crate::random::{substream, TrigSeries};
use crate::Result;

/// `A(z) = M · diag(e^{iφ₁}, e^{iφ₂}) · R(t)` with smooth random phases and
/// rotation angle, so `‖A(z)‖ = M` at every point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomMatrix {
    pub m: f64,
    pub phi1: TrigSeries,
    pub phi2: TrigSeries,
    pub angle: TrigSeries,
}

impl RandomMatrix {
    pub fn new(seed: u64, m: f64) -> Self {
        let draw = |tag| TrigSeries::random(&mut substream(seed, tag), 6, 4.0);
        RandomMatrix { m, phi1: draw(11), phi2: draw(12), angle: draw(13) }
    }

    pub fn eval(&self, z: C64) -> Mat2 {
        let (s, c) = (3.0 * self.angle.eval(z)).sin_cos();
        let e1 = C64::from_polar(self.m, 3.0 * self.phi1.eval(z));
        let e2 = C64::from_polar(self.m, 3.0 * self.phi2.eval(z));
        Mat2::new(e1 * c, -e1 * s, e2 * s, e2 * c)
    }

    pub fn sample(&self, grid: Grid) -> MatrixField {
        MatrixField::from_fn(grid, |z| self.eval(z)).expect("grid-sized")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: f64,
    pub sample: usize,
    pub seed: u64,
    pub n: usize,
    pub norm_p: f64,
    pub norm_p_inv: f64,
    /// `ln(‖P‖ + ‖P⁻¹‖)`.
    pub log_sum: f64,
    /// `log_sum / (M² (ln M)²)`; undefined for `M ≤ 1`.
    pub ratio: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// `ok` or the solver error.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub m: f64,
    pub samples: usize,
    pub median_log_sum: f64,
    pub median_ratio: Option<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len() / 2;
    if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) }
}

/// For each `M`, `samples` random `A` with `‖A‖_∞ = M` on the unit square
/// at `n × n`, solved globally. `M = 0` gives the `A = 0` baseline row.
pub fn bound_sweep(ms: &[f64], samples: usize, n: usize, seed: u64, cfg: &GlobalConfig) -> Result<Vec<SweepRow>> {
    let grid = Grid::rect(0.0, 0.0, 1.0 / n as f64, n, n)?;
    let op = CauchyOp::new(grid);
    op.linf_bound();
    let jobs: Vec<(f64, usize)> = ms.iter().flat_map(|&m| (0..samples.max(1)).map(move |s| (m, s))).collect();
    Ok(jobs
        .par_iter()
        .map(|&(m, s)| {
            let sseed = seed.wrapping_add(1000 * s as u64);
            let a = if m == 0.0 { MatrixField::zeros(grid) } else { RandomMatrix::new(sseed, m).sample(grid) };
            let ratio_of = |ls: f64| (m > 1.0).then(|| ls / (m * m * m.ln() * m.ln()));
            match global_solve(&a, &op, cfg) {
                Ok(sol) => {
                    let (np, ni) = (sol.p.sup_opnorm(), sol.p_inv.sup_opnorm());
                    let log_sum = (np + ni).ln();
                    SweepRow {
                        m,
                        sample: s,
                        seed: sseed,
                        n,
                        norm_p: np,
                        norm_p_inv: ni,
                        log_sum,
                        ratio: ratio_of(log_sum),
                        iterations: sol.iterations,
                        residual: sol.residual,
                        status: "ok".into(),
                    }
                }
                Err(e) => SweepRow {
                    m,
                    sample: s,
                    seed: sseed,
                    n,
                    norm_p: f64::NAN,
                    norm_p_inv: f64::NAN,
                    log_sum: f64::NAN,
                    ratio: None,
                    iterations: 0,
                    residual: f64::NAN,
                    status: e.to_string(),
                },
            }
        })
        .collect())
}

/// Medians per `M` over the rows that solved.
pub fn summarize(rows: &[SweepRow]) -> Vec<SweepSummary> {
    let mut ms: Vec<f64> = rows.iter().map(|r| r.m).collect();
    ms.sort_by(|a, b| a.total_cmp(b));
    ms.dedup();
    ms.into_iter()
        .map(|m| {
            let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.m == m && r.status == "ok").collect();
            let ratios: Vec<f64> = ok.iter().filter_map(|r| r.ratio).collect();
            SweepSummary {
                m,
                samples: ok.len(),
                median_log_sum: median(ok.iter().map(|r| r.log_sum).collect()),
                median_ratio: (!ratios.is_empty()).then(|| median(ratios)),
            }
        })
        .collect()
}

/// `max/min` over a set of positive values (infinite if any is missing).
pub fn band(values: &[Option<f64>]) -> f64 {
    let v: Vec<f64> = values.iter().map(|x| x.unwrap_or(f64::NAN)).collect();
    if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return f64::INFINITY;
    }
    v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
}
