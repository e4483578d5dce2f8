mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use varma_causal::effects::{
    check_iv_conditions, cut_causal_edges, total_causal_effect, total_effect_in_graph, EffectQuery, IvSets,
    WindowPolicy,
};
use varma_causal::graph::TimedNode;
use varma_causal::iv::{estimate_from_data, identify_population, IvQuery};
use varma_causal::model::{FullTimeStructure, VarmaSpec};
use varma_causal::simulation::{sample_stable_spec, simulate, CoefficientSampler, SimulationConfig};
use varma_causal::stationary::solve_stationary;

fn lags(d: usize, from: i64, to: i64) -> Vec<TimedNode> {
    (from..=to).flat_map(|l| (0..d).map(move |i| TimedNode::endo(i, -l))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dag_total_effect_matches_path_enumeration(seed in any::<u64>(), n in 2usize..=9, p in 0.1f64..0.7) {
        let mut r = rng(seed);
        let g = random_dag(&mut r, n, p);
        let mut nodes = g.nodes().to_vec();
        nodes.shuffle(&mut r);
        let k = r.random_range(1..n);
        let (target, xs) = (nodes[0], nodes[1..=k].to_vec());
        let q = EffectQuery::new(target, xs.clone()).unwrap();
        let beta = total_effect_in_graph(&g, &q).unwrap();
        for j in 0..xs.len() {
            let want = path_sum_effect(&g, target, &xs, j);
            prop_assert!((beta[j] - want).abs() < 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn cutting_removes_exactly_the_causal_first_edges(seed in any::<u64>(), n in 3usize..=8) {
        let mut r = rng(seed);
        let g = random_dag(&mut r, n, 0.5);
        let mut nodes = g.nodes().to_vec();
        nodes.shuffle(&mut r);
        let q = EffectQuery::new(nodes[0], nodes[1..3].to_vec()).unwrap();
        let cut = cut_causal_edges(&g, &q).unwrap();
        let after = total_effect_in_graph(&cut, &q).unwrap();
        prop_assert!(after.iter().all(|&b| b == 0.0));
        // edges not leaving 𝒳 survive
        for e in g.directed_edges() {
            if !q.x.contains(&e.from) {
                prop_assert!(cut.has_directed_edge(&e.from, &e.to));
            }
        }
    }

    #[test]
    fn process_effect_is_window_invariant(seed in any::<u64>(), d in 1usize..=3, p in 1usize..=2, q in 0usize..=1) {
        let mut s = CoefficientSampler::new(d, p, q);
        s.density = 0.7;
        let spec = sample_stable_spec(&s, seed).unwrap().spec;
        let mut r = rng(seed ^ 0x5eed);
        let target = TimedNode::endo(r.random_range(0..d), 0);
        let mut pool = lags(d, 0, 3);
        pool.retain(|v| *v != target);
        pool.shuffle(&mut r);
        let xs = pool[..r.random_range(1..=3)].to_vec();
        let eq = EffectQuery::new(target, xs.clone()).unwrap();
        let beta = total_causal_effect(&spec, &eq).unwrap().beta;
        let wide = spec.full_time_window(-8, 2, false).unwrap().graph;
        let wide_beta = total_effect_in_graph(&wide, &eq).unwrap();
        for j in 0..xs.len() {
            let want = path_sum_effect(&wide, target, &xs, j);
            prop_assert!((beta[j] - want).abs() < 1e-12);
            prop_assert!((wide_beta[j] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn population_iv_recovers_total_effect_on_random_specs() {
    let policy = WindowPolicy::default();
    let mut r = rng(2024);
    let (mut agreed, mut drawn) = (0, 0);
    while agreed < 100 {
        drawn += 1;
        assert!(drawn <= 400, "only {agreed} of {drawn} specs satisfied the IV conditions");
        let d = r.random_range(1..=3);
        let p = r.random_range(1..=2);
        let q = r.random_range(0..=p);
        let mut s = CoefficientSampler::new(d, p, q);
        s.density = 0.7;
        let spec = s.sample(&mut r).unwrap().spec;
        let target = TimedNode::endo(r.random_range(0..d), 0);
        let sets = IvSets::new(target, lags(d, 1, p as i64), lags(d, p as i64 + 1, 2 * p as i64), vec![]).unwrap();
        let ss = solve_stationary(&spec).unwrap();
        if !check_iv_conditions(&spec, &ss, &sets, &policy).unwrap().all_hold {
            continue;
        }
        let want = total_causal_effect(&spec, &sets.effect_query()).unwrap().beta;
        let got = identify_population(&spec, &IvQuery::new(sets, None).unwrap(), &policy).unwrap();
        assert!(got.moment_residual < 1e-9, "residual {}", got.moment_residual);
        for (g, w) in got.beta_hat.iter().zip(&want) {
            assert!((g - w).abs() < 1e-8 * (1.0 + w.abs()), "{:?} vs {want:?}", got.beta_hat);
        }
        agreed += 1;
    }
}

#[test]
fn weighting_does_not_change_population_estimate() {
    let policy = WindowPolicy::default();
    let mut r = rng(7);
    for _ in 0..30 {
        let mut s = CoefficientSampler::new(2, 1, 0);
        s.density = 0.8;
        let spec = s.sample(&mut r).unwrap().spec;
        // three lags of instruments for two treatments: over-identified
        let sets = IvSets::new(y(0), lags(2, 1, 1), lags(2, 2, 3), vec![]).unwrap();
        let ss = solve_stationary(&spec).unwrap();
        if !check_iv_conditions(&spec, &ss, &sets, &policy).unwrap().all_hold {
            continue;
        }
        let k = sets.i.len();
        let l = DMatrix::from_fn(k, k, |_, _| r.random_range(-1.0..1.0));
        let w = &l * l.transpose() + DMatrix::identity(k, k);
        let base = identify_population(&spec, &IvQuery::new(sets.clone(), None).unwrap(), &policy).unwrap();
        for scale in [1.0, 1e-3, 250.0] {
            let q = IvQuery::new(sets.clone(), Some(&w * scale)).unwrap();
            let b = identify_population(&spec, &q, &policy).unwrap();
            for (u, v) in b.beta_hat.iter().zip(&base.beta_hat) {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn sample_estimator_is_weight_scale_invariant() {
    let spec = varma_example();
    let data = simulate(&spec, &SimulationConfig::new(5_000, 3)).unwrap();
    let sets = IvSets::new(y(0), vec![x(-1), y(-1)], vec![x(-2), y(-2), x(-3)], vec![]).unwrap();
    let w = m(3, &[2.0, 0.3, 0.1, 0.3, 1.0, 0.0, 0.1, 0.0, 0.5]);
    let a = estimate_from_data(&data, &IvQuery::new(sets.clone(), Some(w.clone())).unwrap()).unwrap();
    let b = estimate_from_data(&data, &IvQuery::new(sets, Some(w * 37.0)).unwrap()).unwrap();
    for (u, v) in a.beta_hat.iter().zip(&b.beta_hat) {
        assert!((u - v).abs() < 1e-12 * (1.0 + v.abs()));
    }
}

/// Z_t = .5Z_{t-1} + ε, X_t = .5X_{t-1} + .6Z_{t-1} + ε, Y_t = .4X_{t-1} + .7Z_{t-1} + .3Y_{t-1} + ε.
fn confounded() -> VarmaSpec {
    let a1 = m(3, &[0.5, 0.0, 0.0, 0.6, 0.5, 0.0, 0.7, 0.4, 0.3]);
    VarmaSpec::new(vec![DMatrix::zeros(3, 3), a1], vec![], vec![1.0, 1.0, 1.0]).unwrap()
}

#[test]
fn conditional_iv_with_adjustment_set() {
    let (z, xx, yy) = (|t| TimedNode::endo(0, t), |t| TimedNode::endo(1, t), |t| TimedNode::endo(2, t));
    let spec = confounded();
    let policy = WindowPolicy::default();
    let sets = IvSets::new(yy(0), vec![xx(-1), yy(-1)], vec![xx(-2), yy(-2)], vec![z(-1)]).unwrap();
    let ss = solve_stationary(&spec).unwrap();
    let report = check_iv_conditions(&spec, &ss, &sets, &policy).unwrap();
    assert!(report.all_hold, "{report:?}");
    let want = total_causal_effect(&spec, &sets.effect_query()).unwrap().beta;
    assert!((want[0] - 0.4).abs() < 1e-15 && (want[1] - 0.3).abs() < 1e-15);
    let q = IvQuery::new(sets, None).unwrap();
    let pop = identify_population(&spec, &q, &policy).unwrap();
    assert!((pop.beta_hat[0] - 0.4).abs() < 1e-9 && (pop.beta_hat[1] - 0.3).abs() < 1e-9);

    let data = simulate(&spec, &SimulationConfig::new(100_000, 17)).unwrap();
    let est = estimate_from_data(&data, &q).unwrap();
    assert!((est.beta_hat[0] - 0.4).abs() < 0.05 && (est.beta_hat[1] - 0.3).abs() < 0.05, "{:?}", est.beta_hat);
}

#[test]
fn dropping_the_adjustment_set_breaks_separation() {
    let (xx, yy) = (|t| TimedNode::endo(1, t), |t| TimedNode::endo(2, t));
    let spec = confounded();
    let sets = IvSets::new(yy(0), vec![xx(-1), yy(-1)], vec![xx(-2), yy(-2)], vec![]).unwrap();
    let ss = solve_stationary(&spec).unwrap();
    let report = check_iv_conditions(&spec, &ss, &sets, &WindowPolicy::default()).unwrap();
    assert!(!report.separation);
    assert!(report.separation_witness.is_some());
}
