//! `verify`: fast invariant checks per module, one line each.

use anyhow::Result;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use ucplab::cauchy::{dbar_inverse_residual, kernel_mass, CauchyOp, Domain};
use ucplab::elliptic::{gen_potential, solve_dirichlet, PotentialMode, SolveConfig};
use ucplab::field::{dbar, del, laplacian};
use ucplab::interpolation::{theta_exponent, three_circle_check_fn};
use ucplab::landis::{run_schedule, step, ScheduleConfig, StepInput};
use ucplab::multiplier::{build_multiplier, shifted_potential, Boundary, MultiplierConfig};
use ucplab::random::smooth_complex;
use ucplab::similarity::partition::DEFAULT_C1;
use ucplab::similarity::sweep::band;
use ucplab::similarity::{choose_delta, global_solve, local_neumann_solve, make_partition, GlobalConfig, NeumannConfig, RandomMatrix};
use ucplab::stream::{curl_delta, curl_grad_defect, div_curl_defect, CurlFn, Vec3Field};
use ucplab::{ComplexField, Grid, Margin, RealField, C64};

use crate::run::{num, RunDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Field,
    Elliptic,
    Multiplier,
    Cauchy,
    Stream,
    Similarity,
    Interpolation,
    Landis,
}

impl Suite {
    const MODULES: [Suite; 8] =
        [Suite::Field, Suite::Elliptic, Suite::Multiplier, Suite::Cauchy, Suite::Stream, Suite::Similarity, Suite::Interpolation, Suite::Landis];

    fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Field => "field",
            Suite::Elliptic => "elliptic",
            Suite::Multiplier => "multiplier",
            Suite::Cauchy => "cauchy",
            Suite::Stream => "stream",
            Suite::Similarity => "similarity",
            Suite::Interpolation => "interpolation",
            Suite::Landis => "landis",
        }
    }
}

/// Test fixtures that break one operator on purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Flip the sign of the first component of `∇_δ ×`.
    CurlSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub value: f64,
    /// `value <= threshold` passes, or `value >= threshold` when `at_least`.
    pub threshold: f64,
    pub at_least: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<Check>,
}

struct Checks<'a> {
    suite: &'static str,
    out: &'a mut Vec<Check>,
}

impl Checks<'_> {
    fn at_most(&mut self, name: &str, value: f64, threshold: f64) {
        let pass = value <= threshold;
        self.push(name, value, threshold, false, pass);
    }

    fn at_least(&mut self, name: &str, value: f64, threshold: f64) {
        let pass = value >= threshold;
        self.push(name, value, threshold, true, pass);
    }

    fn push(&mut self, name: &str, value: f64, threshold: f64, at_least: bool, pass: bool) {
        self.out.push(Check { suite: self.suite.into(), name: name.into(), value, threshold, at_least, pass });
    }
}

fn unit(n: usize) -> Result<Grid> {
    Ok(Grid::square(C64::new(0.0, 0.0), 1.0, n)?)
}

fn order(a: f64, b: f64) -> f64 {
    (a / b).log2()
}

fn field_checks(c: &mut Checks) -> Result<()> {
    let m = Margin::Width(0.1);
    let e: Vec<f64> = [64, 128]
        .iter()
        .map(|&n| Ok(dbar(&ComplexField::from_fn(unit(n)?, |z| z.exp())).interior_sup(m)))
        .collect::<Result<_>>()?;
    c.at_least("dbar_of_exp_order", order(e[0], e[1]), 1.8);
    let r: Vec<f64> = [64, 128]
        .iter()
        .map(|&n| {
            let f = smooth_complex(5, unit(n)?, 2.0);
            let d = laplacian(&f).try_sub(&del(&dbar(&f)).scale(4.0))?;
            Ok(d.interior_sup(m))
        })
        .collect::<Result<_>>()?;
    c.at_least("laplacian_4_del_dbar_order", order(r[0], r[1]), 1.8);
    Ok(())
}

fn elliptic_checks(c: &mut Checks) -> Result<()> {
    let mut err = vec![];
    let mut worst = 0.0f64;
    for n in [64, 128] {
        let g = unit(n)?;
        let u = solve_dirichlet(&RealField::constant(g, 4.0), |z| (2.0 * z.re).exp(), &RealField::zeros(g), &SolveConfig::default())?;
        let e = u.try_sub(&RealField::from_fn(g, |z| (2.0 * z.re).exp()))?.max_modulus();
        worst = worst.max(e / (g.h * g.h));
        err.push(e);
    }
    c.at_most("exp2x_error_over_h2", worst, 10.0);
    c.at_least("exp2x_order", order(err[0], err[1]), 1.8);
    Ok(())
}

fn multiplier_checks(c: &mut Checks) -> Result<()> {
    let s2 = 2f64.sqrt();
    let g = unit(64)?;
    let m = build_multiplier(&RealField::constant(g, 2.0), 1.0, 0.0, Boundary::LogData(&|z: C64| s2 * z.re), &MultiplierConfig::default())?;
    let e = m.phi().try_sub(&RealField::from_fn(g, |z| (s2 * z.re).exp()))?.max_modulus();
    c.at_most("exp_sqrt2x_error_over_h2", e / (g.h * g.h), 10.0);
    let g = Grid::square(C64::new(0.0, 0.0), 2.0, 64)?;
    let p = gen_potential(7, 2.0, 0.1, g, PotentialMode::Local)?;
    let m = build_multiplier(&shifted_potential(&p)?, 2.0, 0.1, Boundary::Supersolution, &MultiplierConfig::default())?;
    let cert = &m.certificate;
    let slack = (cert.min_log_phi - cert.log_lower).min(cert.log_upper - cert.max_log_phi);
    c.at_least("log_phi_bound_slack", slack, 0.0);
    Ok(())
}

/// Kernel-mass scaling rows `(δ, mass, mass/(δ ln(1/δ)))`.
pub fn kernel_mass_rows(n: usize) -> Result<Vec<(f64, f64, f64)>> {
    [2.0 / 5.0, 2.0 / 9.0, 2.0 / 17.0, 2.0 / 33.0]
        .iter()
        .map(|&d| {
            let m = kernel_mass(Domain::strip(d), n)?;
            Ok((d, m, m / (d * (1.0 / d).ln())))
        })
        .collect()
}

fn cauchy_checks(c: &mut Checks, run: &mut RunDir) -> Result<()> {
    let r: Vec<f64> = [64, 128]
        .iter()
        .map(|&n| {
            let g = unit(n)?;
            Ok(dbar_inverse_residual(&CauchyOp::new(g), &smooth_complex(3, g, 3.0), Margin::Width(0.1))?)
        })
        .collect::<Result<_>>()?;
    c.at_least("dbar_inverse_order", order(r[0], r[1]), 0.9);
    let g = Grid::square(C64::new(0.0, 0.0), 1.2, 64)?;
    let t = CauchyOp::disk(g, C64::new(0.0, 0.0), 1.0).transform(&ComplexField::constant(g, C64::new(1.0, 0.0)))?;
    let err = (0..g.len())
        .filter(|&k| g.point_at(k).norm() <= 1.0)
        .map(|k| (t.values()[k] - g.point_at(k).conj()).norm())
        .fold(0.0, f64::max);
    c.at_most("disk_identity_error_over_h", err / g.h, 5.0);
    let rows = kernel_mass_rows(128)?;
    c.at_most("kernel_mass_band", band(&rows.iter().map(|r| Some(r.2)).collect::<Vec<_>>()), 2.0);
    let csv: Vec<Vec<String>> = rows.iter().map(|&(d, m, q)| vec![num(d), num(m), num(q)]).collect();
    run.write_csv("kernel_mass.csv", &["delta", "mass", "ratio"], &csv)?;
    Ok(())
}

fn bad_curl(f: &Vec3Field, delta: f64) -> Vec3Field {
    let mut c = curl_delta(f, delta);
    c.f1 = c.f1.scale(-1.0);
    c
}

fn stream_checks(c: &mut Checks, fault: Option<Fault>) -> Result<()> {
    let curl: CurlFn = match fault {
        Some(Fault::CurlSign) => bad_curl,
        None => curl_delta,
    };
    let g = unit(64)?;
    let f = smooth_complex(9, g, 2.0);
    c.at_most("curl_grad_defect", curl_grad_defect(&f, 0.3, curl, Margin::Cells(2)), 1e-12);
    let w = Vec3Field::new(smooth_complex(10, g, 2.0), smooth_complex(11, g, 2.0), smooth_complex(12, g, 2.0))?;
    c.at_most("div_curl_defect", div_curl_defect(&w, 0.3, curl, Margin::Cells(2)), 1e-12);
    Ok(())
}

fn similarity_checks(c: &mut Checks) -> Result<()> {
    let choice = choose_delta(2.0, DEFAULT_C1)?;
    c.at_most("choose_delta_constraint", choice.constraint, 1.0 / 3.0);
    let part = make_partition(choice.delta)?;
    let (_, g) = part.window(part.strip_span(0), 4)?;
    let a = RandomMatrix::new(1, 2.0).sample(g);
    let s = local_neumann_solve(&a, 0, &CauchyOp::new(g), &NeumannConfig::default())?;
    c.at_most("neumann_q_sup", s.certificate.q_sup, 0.5);
    let g = Grid::rect(0.0, 0.0, 1.0 / 32.0, 32, 32)?;
    let sol = global_solve(&RandomMatrix::new(2, 1.0).sample(g), &CauchyOp::new(g), &GlobalConfig::default())?;
    c.at_most("global_inverse_defect", sol.inverse_defect, 1e-8);
    Ok(())
}

fn interpolation_checks(c: &mut Checks) -> Result<()> {
    let t = three_circle_check_fn(|z| z.powu(3), C64::new(0.0, 0.0), 0.25, 0.5, 0.9)?;
    c.at_most("three_circle_power_equality", t.margin.abs(), 1e-9);
    let th = theta_exponent(0.5, 1.0)?;
    c.at_least("theta_in_unit_interval", th.theta.min(1.0 - th.theta), 0.0);
    Ok(())
}

fn landis_checks(c: &mut Checks) -> Result<()> {
    let mut cfg = ScheduleConfig::symbolic(0.2, 1.0, 100.0);
    cfg.alpha0 = Some(2.0);
    let s = run_schedule(&cfg)?;
    c.at_most("n_final_minus_43", (s.n_final as f64 - 43.0).abs(), 0.0);
    c.at_most("closed_form_error", s.closed_form_error, 1e-12);
    let st = step(&StepInput { s: 100.0, alpha: 1.5, eps: 0.2, eps0: 1.0, c0: 1.0, c_big0: 1.0, m: 1.0 })?;
    c.at_most("step_radius_error", (st.r - 231.957).abs(), 1e-3);
    Ok(())
}

pub fn verify(run: &mut RunDir, suite: Suite, fault: Option<Fault>) -> Result<Report> {
    let suites: Vec<Suite> = if suite == Suite::All { Suite::MODULES.to_vec() } else { vec![suite] };
    let mut checks = vec![];
    for s in suites {
        let mut c = Checks { suite: s.name(), out: &mut checks };
        let r = match s {
            Suite::Field => field_checks(&mut c),
            Suite::Elliptic => elliptic_checks(&mut c),
            Suite::Multiplier => multiplier_checks(&mut c),
            Suite::Cauchy => cauchy_checks(&mut c, run),
            Suite::Stream => stream_checks(&mut c, fault),
            Suite::Similarity => similarity_checks(&mut c),
            Suite::Interpolation => interpolation_checks(&mut c),
            Suite::Landis => landis_checks(&mut c),
            Suite::All => unreachable!(),
        };
        if let Err(e) = r {
            c.push(&format!("error: {e}"), f64::NAN, f64::NAN, false, false);
        }
    }
    let report = Report { suite, passed: checks.iter().all(|c| c.pass), checks };
    run.write_json("report.json", &report)?;
    Ok(report)
}
