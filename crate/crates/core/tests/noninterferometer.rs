use std::sync::OnceLock;

use abnoninterf::evolve::DetectorReport;
use abnoninterf::experiment::{
    build_noninterferometer, fringe_fit_estimate, run_openings, wrap_phase, FringeFit, FringeFitOptions,
    NoninterferometerParams, Openings, ScenarioConfig,
};

struct Runs {
    scenario: ScenarioConfig,
    both_0: DetectorReport,
    both_half: DetectorReport,
    only_a: DetectorReport,
    only_b: DetectorReport,
    neither: DetectorReport,
}

fn runs() -> &'static Runs {
    static RUNS: OnceLock<Runs> = OnceLock::new();
    RUNS.get_or_init(|| {
        let scenario = build_noninterferometer(&NoninterferometerParams::small()).unwrap();
        let run = |o, b| run_openings(&scenario, o, 0.0, b).unwrap();
        Runs {
            both_0: run(Openings::Both, 0.0),
            both_half: run(Openings::Both, 0.5),
            only_a: run(Openings::OnlyA, 0.0),
            only_b: run(Openings::OnlyB, 0.0),
            neither: run(Openings::Neither, 0.0),
            scenario,
        }
    })
}

fn fit(s: &ScenarioConfig, r: &DetectorReport) -> FringeFit {
    let (x, y) = s.fit_samples(&r.arclength, &r.intensity);
    fringe_fit_estimate(&x, &y, &FringeFitOptions { poly_degree: s.params.poly_degree, ..Default::default() }).unwrap()
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let n: f64 = a.iter().map(|x| x * x).sum();
    (d / n).sqrt()
}

fn mirror(v: &[f64]) -> Vec<f64> {
    v.iter().rev().copied().collect()
}

#[test]
fn symmetric_two_slit_pattern() {
    let r = runs();
    // the layout is mirror symmetric about the axis when no flux is present
    assert!(rel_l2(&r.both_0.intensity, &mirror(&r.both_0.intensity)) < 1e-10);
    assert!(rel_l2(&r.only_b.intensity, &mirror(&r.only_a.intensity)) < 1e-10);
    let f = fit(&r.scenario, &r.both_0);
    assert!(f.visibility > 0.95, "{f:?}");
    assert!(wrap_phase(f.phase).abs() < 1e-6, "{f:?}");
}

#[test]
fn closed_barrier_detects_nothing() {
    let r = runs();
    assert!(r.neither.ledger.detected < 1e-6, "{:?}", r.neither.ledger);
    assert!(r.both_0.ledger.detected > 1e-2);
}

#[test]
fn half_flux_gives_the_complementary_pattern() {
    let r = runs();
    let f0 = fit(&r.scenario, &r.both_0);
    let fh = fit(&r.scenario, &r.both_half);
    let shift = wrap_phase(fh.phase - f0.phase).abs();
    assert!((shift - std::f64::consts::PI).abs() < 0.05 * std::f64::consts::PI, "{f0:?} {fh:?}");
    assert!(fh.visibility > 0.95);
    // linearity: the interference terms of the two patterns cancel
    let pair: Vec<f64> = r.both_0.intensity.iter().zip(&r.both_half.intensity).map(|(a, b)| a + b).collect();
    let singles: Vec<f64> = r.only_a.intensity.iter().zip(&r.only_b.intensity).map(|(a, b)| 2.0 * (a + b)).collect();
    assert!(rel_l2(&pair, &singles) < 1e-3);
}

#[test]
fn every_run_balances_its_ledger() {
    let r = runs();
    for rep in [&r.both_0, &r.both_half, &r.only_a, &r.only_b, &r.neither] {
        assert!(rep.ledger.imbalance().abs() < 1e-9, "{:?}", rep.ledger);
        assert!(rep.ledger.detected >= 0.0 && rep.ledger.detected <= rep.ledger.initial_upstream);
    }
}
