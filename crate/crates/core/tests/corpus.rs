//! End-to-end checks on corpus instances.

use ucplab::experiment::{build_instance, CorpusConfig, DeltaMode, Instance};
use ucplab::interpolation::{FMode, Hypotheses};
use ucplab::stream::{residual, ResidualKind};
use ucplab::{Margin, C64};

fn instance(n: usize, lambda: f64) -> Instance {
    build_instance(3, lambda, &CorpusConfig { n, ..Default::default() }).unwrap()
}

/// Sup of `|∂̄P − GP|` over interior cells at distance `> dist` from every
/// cell where `|w₂| < rel · sup|w₂|`, over `sup|P|`.
fn residual_off_zeros(inst: &Instance, rel: f64, dist: f64) -> f64 {
    let p = &inst.solution.p;
    let g = &inst.stream.reduction.as_ref().unwrap().g;
    let defect = p.dbar().sub(&g.mul(p).unwrap()).unwrap();
    let qd = *p.a11.grid();
    let w2 = inst.stream.w2.restrict(&qd).unwrap();
    let cut = rel * w2.max_modulus();
    let zeros: Vec<C64> = (0..qd.len()).filter(|&k| w2.values()[k].norm() < cut).map(|k| qd.point_at(k)).collect();
    let mut sup = 0.0f64;
    for k in qd.interior(Margin::default()) {
        let z = qd.point_at(k);
        if zeros.iter().all(|s| (s - z).norm() > dist) {
            sup = sup.max(defect.at(k).opnorm());
        }
    }
    sup / p.sup_opnorm()
}

#[test]
fn g_solution_converges_away_from_phase_singularities() {
    let (a, b) = (instance(128, 2.0), instance(256, 2.0));
    let (ra, rb) = (residual_off_zeros(&a, 0.02, 0.1), residual_off_zeros(&b, 0.02, 0.1));
    assert!(ra <= 5e-3, "{ra}");
    assert!((ra / rb).log2() >= 0.9, "{ra} -> {rb}");
    // At the zeros of w₂ the phase w̄₂/w₂ in G jumps and the sup does not shrink.
    assert!(b.solution.residual > 10.0 * rb);
}

#[test]
fn stream_residuals_converge_on_an_instance() {
    let (a, b) = (instance(128, 1.0), instance(256, 1.0));
    for kind in ResidualKind::ALL {
        let (ra, rb) = (residual(&a.stream, kind, Margin::Width(0.25)).unwrap(), residual(&b.stream, kind, Margin::Width(0.25)).unwrap());
        assert!((ra / rb).log2() >= 0.9, "{}: {ra} -> {rb}", kind.name());
    }
}

#[test]
fn reduction_bounds_hold() {
    let inst = instance(128, 2.0);
    let r = inst.stream.reduction.as_ref().unwrap();
    assert!(r.g_sup <= r.g_bound, "{} > {}", r.g_sup, r.g_bound);
    assert!(inst.multiplier.certificate.within_bounds);
    assert!(inst.solution.inverse_defect < 1e-8, "{}", inst.solution.inverse_defect);
}

#[test]
fn three_ball_and_vanishing_records() {
    let inst = build_instance(2, 2.0, &CorpusConfig { f_mode: FMode::One, ..Default::default() }).unwrap();
    let tb = inst.three_ball(0.5).unwrap();
    assert!(tb.holds);
    assert!(tb.theta > 0.0 && tb.theta < 1.0);
    assert_eq!((tb.b, tb.d), (2.0, 1.5));
    let v = inst.vanishing(6, &Hypotheses::default()).unwrap();
    assert_eq!(v.r_grid.len(), 6);
    assert!(v.fitted_exponent.is_finite());
}

#[test]
fn prescribed_delta_is_recorded_next_to_the_override() {
    let inst = build_instance(1, 2.0, &CorpusConfig { n: 64, ..Default::default() }).unwrap();
    assert_eq!(inst.delta_used, 0.1);
    let p = inst.delta_prescribed.unwrap();
    assert!((p - 2f64.sqrt() / 2f64.ln() * (-2f64).exp()).abs() < 1e-15);
    let e = build_instance(1, 4.0, &CorpusConfig { n: 64, delta: DeltaMode::Prescribed, ..Default::default() }).unwrap();
    assert!((e.delta_used - 2.0 / 4f64.ln() * (-4f64).exp()).abs() < 1e-15);
}
