mod common;

use std::path::Path;

use proptest::prelude::*;
use vofc_core::data::{grid_to_json, parse_config, parse_grid, provider_names, read_timeseries, write_timeseries, PowerCurve};
use vofc_core::eval::rmse_weights;
use vofc_core::model::ModelInstance;
use vofc_core::ph::{average, consensus_gap, select_active_set, update_multipliers};
use vofc_core::scenario::{combine_forecasts, NodeSeries, ProviderForecast, ScenarioDay, Weights};
use vofc_core::solver::{add_pwl_quadratic, pwl_error_bound};
use vofc_core::synth::{generate, SynthParams};
use vofc_core::{RunConfig, SeriesLayout, Trainer};

fn day_with(k: usize, nodes: usize, hours: usize, vals: &[f64]) -> ScenarioDay {
    let mut it = vals.iter().cycle().copied();
    let mut series = || NodeSeries::from_fn(nodes, hours, |_, _| it.next().unwrap());
    let forecasts = (0..k).map(|_| ProviderForecast { net_load: series(), wind: series() }).collect();
    ScenarioDay::new(1, forecasts, series(), series()).unwrap()
}

fn simplex(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, k).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn normalized_weights_lie_on_simplex(v in prop::collection::vec(0.0f64..5.0, 1..6)) {
        prop_assume!(v.iter().any(|&x| x > 0.0));
        let w = Weights::normalized(&v).unwrap();
        prop_assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.as_slice().iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!(Weights::new(w.as_slice().to_vec()).is_ok());
    }

    #[test]
    fn off_simplex_vectors_are_rejected(v in prop::collection::vec(-1.0f64..2.0, 1..5)) {
        let on = v.iter().all(|&x| (0.0..=1.0).contains(&x)) && (v.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        prop_assume!(!on);
        prop_assert!(Weights::new(v).is_err());
    }

    #[test]
    fn rmse_weights_favor_smaller_errors(r in prop::collection::vec(0.0f64..10.0, 1..6)) {
        let w = rmse_weights(&r).unwrap();
        prop_assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..r.len() {
            for j in 0..r.len() {
                if r[i] < r[j] {
                    prop_assert!(w[i] >= w[j]);
                }
            }
        }
        if r.contains(&0.0) {
            for (ri, wi) in r.iter().zip(w.as_slice()) {
                prop_assert_eq!(*ri == 0.0, *wi > 0.0);
            }
        }
    }

    #[test]
    fn combination_is_linear(w in simplex(3), vals in prop::collection::vec(0.0f64..150.0, 8..20)) {
        let day = day_with(3, 2, 3, &vals);
        let (load, wind) = combine_forecasts(&Weights::normalized(&w).unwrap(), &day).unwrap();
        let w = Weights::normalized(&w).unwrap();
        for n in 0..2 {
            for t in 0..3 {
                let want: f64 = day.forecasts.iter().zip(w.as_slice()).map(|(f, l)| l * f.net_load.get(n, t)).sum();
                prop_assert!((load.get(n, t) - want).abs() < 1e-9);
                let want: f64 = day.forecasts.iter().zip(w.as_slice()).map(|(f, l)| l * f.wind.get(n, t)).sum();
                prop_assert!((wind.get(n, t) - want).abs() < 1e-9);
            }
        }
        for k in 0..3 {
            let (load, _) = combine_forecasts(&Weights::unit(3, k), &day).unwrap();
            prop_assert_eq!(load.values(), day.forecasts[k].net_load.values());
        }
    }

    #[test]
    fn multipliers_stay_centered(lams in prop::collection::vec(simplex(2), 1..12), rho in 1.0f64..1e5, steps in 1usize..5) {
        let d = lams.len();
        let mut mu = vec![vec![0.0; 2]; d];
        let mut lams = lams;
        for s in 0..steps {
            let bar = average(&lams);
            mu = update_multipliers(&mu, rho, &lams, &bar);
            for j in 0..2 {
                let sum: f64 = mu.iter().map(|m| m[j]).sum();
                prop_assert!(sum.abs() <= 1e-8 * (1.0 + rho), "sum {sum} at step {s}");
            }
            lams.rotate_left(1);
        }
    }

    #[test]
    fn consensus_gap_is_a_sum_of_distances(lams in prop::collection::vec(simplex(3), 1..8)) {
        let bar = average(&lams);
        let mine: f64 = lams.iter().map(|l| l.iter().zip(&bar).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()).sum();
        prop_assert!((consensus_gap(&lams, &bar) - mine).abs() < 1e-12);
        prop_assert!(consensus_gap(&vec![bar.clone(); 4], &bar) == 0.0);
    }

    #[test]
    fn active_set_takes_largest_deviations(lams in prop::collection::vec(simplex(2), 1..12), dp in 1usize..14) {
        let bar = average(&lams);
        let (active, idle) = select_active_set(&lams, &bar, dp);
        prop_assert_eq!(active.len(), dp.min(lams.len()));
        let mut all: Vec<usize> = active.iter().chain(&idle).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..lams.len()).collect::<Vec<_>>());
        let dev = |d: usize| lams[d].iter().zip(&bar).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        for &a in &active {
            for &i in &idle {
                prop_assert!(dev(a) >= dev(i));
            }
        }
    }

    #[test]
    fn pwl_overestimates_within_bound(center in 0.0f64..=1.0, coef in 1.0f64..1e5, segments in 1usize..64, x in 0.0f64..=1.0) {
        let mut m = ModelInstance::new("pwl");
        let v = m.add_var("x", 0.0, 1.0, 0.0);
        add_pwl_quadratic(&mut m, &[v], &[center], coef, segments).unwrap();
        let blk = &m.pwl_blocks[0];
        let exact = coef * (x - center).powi(2);
        let over = blk.interpolant(x) - exact;
        prop_assert!(over >= -1e-9 * (1.0 + coef));
        prop_assert!(over <= pwl_error_bound(coef, segments) + 1e-9 * (1.0 + coef));
        prop_assert!(blk.interpolant(center).abs() <= 1e-9 * coef);
    }

    #[test]
    fn power_curve_stays_in_unit_range(speeds in prop::collection::vec(0.0f64..40.0, 1..20)) {
        let curve = PowerCurve::new(vec![(3.0, 0.0), (8.0, 0.4), (12.0, 1.0), (25.0, 1.0)]).unwrap();
        for &s in &speeds {
            let f = curve.fraction(s);
            prop_assert!((0.0..=1.0).contains(&f));
            if !(3.0..=25.0).contains(&s) {
                prop_assert_eq!(f, 0.0);
            }
        }
        let mut sorted = speeds.clone();
        sorted.retain(|&s| s <= 25.0);
        sorted.sort_by(f64::total_cmp);
        for w in sorted.windows(2) {
            prop_assert!(curve.fraction(w[0]) <= curve.fraction(w[1]) + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn grid_json_round_trips(seed in any::<u64>(), nodes in 1usize..5, gens in 1usize..4) {
        let mut r = common::rng(seed);
        let grid = common::random_uc_grid(&mut r, nodes, gens);
        let back = parse_grid(&grid_to_json(&grid), "mem").unwrap();
        prop_assert_eq!(back, grid);
    }

    #[test]
    fn series_round_trip(seed in any::<u64>(), nodes in 1usize..4, horizon in 1usize..6, days in 1usize..4) {
        let p = SynthParams { seed, nodes, horizon, days, ..SynthParams::default() };
        let data = generate(&p).unwrap();
        let ids: Vec<u32> = data.grid.nodes.iter().map(|n| n.id).collect();
        let names = provider_names(p.providers());
        let (mut f, mut a) = (Vec::new(), Vec::new());
        write_timeseries(&data.days, &ids, &names, &mut f, &mut a).unwrap();
        let layout = SeriesLayout { nodes: ids, providers: names, horizon: None };
        let back = read_timeseries(f.as_slice(), a.as_slice(), &layout, Path::new("mem")).unwrap();
        prop_assert_eq!(back, data.days);
    }

    #[test]
    fn config_toml_round_trips(seed in any::<u64>(), rho in 1.0f64..1e6, eps in 1e-9f64..1e-2, dp in 1usize..10, t in 0usize..5) {
        let trainer = [Trainer::Ph, Trainer::Pfph, Trainer::Stm, Trainer::Rmse, Trainer::Fixed][t];
        let mut cfg = RunConfig::new(trainer);
        cfg.synth = Some(SynthParams { seed, ..SynthParams::default() });
        cfg.seed = seed;
        cfg.ph.rho = rho;
        cfg.ph.eps = eps;
        cfg.ph.active_days = Some(dp);
        cfg.fixed_lambda = Some(Weights::pair(0.25).unwrap());
        let back = parse_config(&cfg.to_toml(), "mem").unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn malformed_text_never_panics(text in ".{0,200}") {
        let _ = parse_grid(&text, "fuzz");
        let _ = parse_config(&text, "fuzz");
        let layout = SeriesLayout { nodes: vec![1, 2], providers: Vec::new(), horizon: None };
        let _ = read_timeseries(text.as_bytes(), text.as_bytes(), &layout, Path::new("fuzz"));
    }

    #[test]
    fn mutated_series_never_panics(seed in any::<u64>(), cut in 0usize..2000, junk in "[0-9a-z,.\\-\n]{0,12}") {
        let p = SynthParams { seed, nodes: 2, horizon: 2, days: 2, ..SynthParams::default() };
        let data = generate(&p).unwrap();
        let (mut f, mut a) = (Vec::new(), Vec::new());
        write_timeseries(&data.days, &[1, 2], &provider_names(2), &mut f, &mut a).unwrap();
        let at = cut.min(f.len());
        let mut bad = f[..at].to_vec();
        bad.extend_from_slice(junk.as_bytes());
        bad.extend_from_slice(&f[at..]);
        let layout = SeriesLayout { nodes: vec![1, 2], providers: Vec::new(), horizon: None };
        let _ = read_timeseries(bad.as_slice(), a.as_slice(), &layout, Path::new("fuzz"));
    }

    #[test]
    fn mutated_grid_json_never_panics(seed in any::<u64>(), cut in 0usize..3000, junk in ".{0,8}") {
        let mut r = common::rng(seed);
        let json = grid_to_json(&common::random_uc_grid(&mut r, 2, 2));
        let at = (cut.min(json.len())..=json.len()).find(|&i| json.is_char_boundary(i)).unwrap();
        let bad = format!("{}{}{}", &json[..at], junk, &json[at..]);
        let _ = parse_grid(&bad, "fuzz");
    }
}
