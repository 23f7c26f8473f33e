mod common;

use vofc_core::ph::{build_ph_subproblem, consensus_gap, run, Algorithm, PhConfig};
use vofc_core::scenario::Weights;
use vofc_core::solver::pwl_error_bound;
use vofc_core::synth::{generate, SynthParams};
use vofc_core::uc::{two_stage_cost, UcVariant};

fn tiny(seed: u64, days: usize) -> vofc_core::SynthData {
    generate(&SynthParams { seed, nodes: 1, horizon: 2, days, ..SynthParams::default() }).unwrap()
}

fn small_config() -> PhConfig {
    PhConfig { rho: 5000.0, variant: UcVariant::Relaxed, max_iter: 300, record_iterates: true, ..PhConfig::default() }
}

/// Exact penalized objective at `l1`, from the sequential two-stage cost.
fn penalized(data: &vofc_core::SynthData, mu: &[f64], rho: f64, bar: &[f64], l1: f64) -> f64 {
    let w = [l1, 1.0 - l1];
    let cost = two_stage_cost(&data.grid, &Weights::normalized(&w).unwrap(), &data.days[0], UcVariant::Relaxed).unwrap().total;
    let lin: f64 = mu.iter().zip(&w).map(|(m, l)| m * l).sum();
    let quad: f64 = bar.iter().zip(&w).map(|(b, l)| (l - b).powi(2)).sum::<f64>() * rho / 2.0;
    cost + lin + quad
}

#[test]
fn subproblem_matches_weight_sweep() {
    for (seed, mu, bar) in [(1, [0.0, 0.0], [0.5, 0.5]), (2, [40.0, -40.0], [0.2, 0.8]), (3, [-15.0, 15.0], [0.9, 0.1])] {
        let data = tiny(seed, 1);
        let rho = 500.0;
        let segments = 32;
        let sub = build_ph_subproblem(&data.grid, &data.days[0], &mu, rho, &bar, UcVariant::Relaxed, segments).unwrap();
        let got = sub.solve().unwrap();
        let best = (0..=1000).map(|s| penalized(&data, &mu, rho, &bar, s as f64 / 1000.0)).fold(f64::INFINITY, f64::min);
        let slack = 2.0 * pwl_error_bound(rho / 2.0, segments) + 1e-6 * best.abs();
        assert!(got.objective <= best + slack, "seed {seed}: subproblem {} above sweep {best}", got.objective);
        // The PWL term only overestimates and a joint optimum cannot beat
        // the sequential one at the same weights by more than the sweep step.
        let at = penalized(&data, &mu, rho, &bar, got.lambda[0]);
        assert!(got.objective + 1e-6 * at.abs() >= at - slack, "seed {seed}: {} vs {at}", got.objective);
        assert!((got.lambda.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn identical_days_agree_after_one_round() {
    let data = tiny(4, 1);
    let days = vec![data.days[0].clone(); 3];
    let out = run(&data.grid, &days, &small_config(), Algorithm::Ph).unwrap();
    assert!(out.converged);
    assert_eq!(out.state.iteration, 1, "trace: {:?}", out.trace);
    assert!(out.state.gap <= 1e-12);
}

#[test]
fn single_provider_is_trivially_weighted() {
    let data = generate(&SynthParams { seed: 5, nodes: 1, horizon: 2, days: 3, bias: vec![0.0], noise: vec![0.05], ..SynthParams::default() }).unwrap();
    let out = run(&data.grid, &data.days, &small_config(), Algorithm::Ph).unwrap();
    assert!(out.converged);
    assert_eq!(out.weights.as_slice(), &[1.0]);
}

#[test]
fn multipliers_sum_to_zero_and_gap_recomputes() {
    let data = tiny(6, 4);
    for alg in [Algorithm::Ph, Algorithm::Pfph] {
        let out = run(&data.grid, &data.days, &small_config(), alg).unwrap();
        assert!(!out.iterates.is_empty());
        for st in &out.iterates {
            for j in 0..2 {
                let s: f64 = st.mu.iter().map(|m| m[j]).sum();
                assert!(s.abs() <= 1e-8, "{alg:?} iteration {}: sum mu = {s}", st.iteration);
            }
            let mine: f64 = st
                .lambdas
                .iter()
                .map(|l| l.iter().zip(&st.lambda_bar).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                .sum();
            assert!((mine - st.gap).abs() <= 1e-12);
            assert_eq!(st.gap, consensus_gap(&st.lambdas, &st.lambda_bar));
        }
    }
}

#[test]
fn full_active_set_reproduces_ph() {
    let data = tiny(7, 4);
    let cfg = small_config();
    let ph = run(&data.grid, &data.days, &cfg, Algorithm::Ph).unwrap();
    let pf = run(&data.grid, &data.days, &PhConfig { active_days: Some(4), ..cfg }, Algorithm::Pfph).unwrap();
    assert_eq!(ph.iterates.len(), pf.iterates.len());
    for (a, b) in ph.iterates.iter().zip(&pf.iterates) {
        assert_eq!(a, b);
    }
}

#[test]
fn pool_width_does_not_change_results() {
    let data = tiny(8, 4);
    let base = run(&data.grid, &data.days, &small_config(), Algorithm::Pfph).unwrap();
    for width in [2, 4] {
        let cfg = PhConfig { parallelism: width, ..small_config() };
        let other = run(&data.grid, &data.days, &cfg, Algorithm::Pfph).unwrap();
        assert_eq!(base.trace, other.trace, "width {width}");
        assert_eq!(base.iterates, other.iterates, "width {width}");
    }
}
