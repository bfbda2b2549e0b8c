mod common;

use cbmnl::choice::{AssortmentContexts, ContextVector};
use cbmnl::confidence::{ConfidenceConfig, ConfidenceState};
use cbmnl::estimator::History;
use cbmnl::harness::checks::{acceptance_config, acceptance_instance};
use cbmnl::harness::{run_many, summarize_runs};
use cbmnl::json;
use cbmnl::linalg::Vector;
use cbmnl::policy::{enumerate_assortments, oracle_assortment, BonusTerms, PolicyKind};
use cbmnl::simulator::{
    environment_step, estimate_kappa, kappa_search, make_instance, serve_contexts, ContextMode,
    Instance, InstanceConfig,
};
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;

fn instance_config(mode: ContextMode) -> InstanceConfig {
    InstanceConfig {
        d: 3,
        n: 6,
        k: 3,
        s: 1.5,
        s_true: 1.0,
        context_mode: mode,
        prices: None,
    }
}

fn outcomes(instance: &Instance, rounds: usize, seed: u64) -> Vec<(Vec<Vec<f64>>, usize)> {
    let mut rng: ChaCha8Rng = common::rng(seed);
    (1..=rounds)
        .map(|t| {
            let contexts = serve_contexts(instance, t).unwrap();
            let a = AssortmentContexts::with_unit_prices(&[0, 2, 4], &contexts).unwrap();
            let rows = contexts.iter().map(|x| x.as_vector().as_slice().to_vec()).collect();
            (rows, environment_step(instance, &a, &mut rng).unwrap())
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_offers_the_top_utilities(
        xs in prop::collection::vec(-1.0..1.0f64, 2..=7),
        theta in 0.1..3.0f64,
        k_pick in 1usize..7,
    ) {
        let k = 1 + (k_pick - 1) % xs.len();
        let contexts: Vec<ContextVector> =
            xs.iter().map(|&x| ContextVector::new(vec![x]).unwrap()).collect();
        let prices = vec![1.0; xs.len()];
        let (set, _) = oracle_assortment(&contexts, &prices, &Vector::from_element(1, theta), k).unwrap();
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[b].total_cmp(&xs[a]).then(a.cmp(&b)));
        let mut top = order[..k].to_vec();
        top.sort_unstable();
        let distinct = order.windows(2).all(|w| xs[w[0]] != xs[w[1]]);
        prop_assume!(distinct);
        prop_assert_eq!(set, top);
    }

    #[test]
    fn kappa_grows_with_the_search_space(seed in any::<u64>()) {
        let inst = make_instance(&instance_config(ContextMode::FixedPool), seed).unwrap();
        let contexts = serve_contexts(&inst, 1).unwrap();
        let all_sets = enumerate_assortments(inst.n, inst.k).unwrap();
        let mut rng = common::rng(seed);
        let thetas: Vec<Vector> =
            (0..30).map(|_| cbmnl::linalg::sample_ball(&mut rng, inst.d, inst.s)).collect();
        let small = kappa_search(&contexts, &all_sets[..5], &thetas[..10]).unwrap();
        let large = kappa_search(&contexts, &all_sets, &thetas).unwrap();
        prop_assert!(small.value >= 4.0);
        prop_assert!(large.value >= small.value);
        prop_assert!(estimate_kappa(&inst, 50).unwrap().value >= 4.0);
    }
}

#[test]
fn instance_json_round_trip_preserves_streams() {
    for mode in [ContextMode::FixedPool, ContextMode::FreshIid] {
        let inst = make_instance(&instance_config(mode), 42).unwrap();
        let text = json::to_string(&inst).unwrap();
        let back: Instance = serde_json::from_str(&text).unwrap();
        assert_eq!(back, inst);
        back.validate().unwrap();
        assert_eq!(outcomes(&back, 40, 9), outcomes(&inst, 40, 9));
    }
}

#[test]
fn instance_json_uses_documented_keys() {
    let inst = make_instance(&instance_config(ContextMode::FixedPool), 1).unwrap();
    let value: serde_json::Value = serde_json::from_str(&json::to_string(&inst).unwrap()).unwrap();
    let mut keys: Vec<&str> = value.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        ["K", "N", "S", "S_true", "context_mode", "d", "pool", "prices", "seed", "theta_star"]
    );
    assert_eq!(value["pool"].as_array().unwrap().len(), 6);
    assert_eq!(value["pool"][0].as_array().unwrap().len(), 3);
}

#[test]
fn random_play_has_linear_regret() {
    let cfg = acceptance_config(PolicyKind::Random, 1000);
    let seeds: Vec<u64> = (0..20).collect();
    let agg = summarize_runs(&run_many(&cfg, &seeds, 4).unwrap()).unwrap();
    let slope = agg.loglog_slope.unwrap();
    assert!(agg.mean_total_regret > 0.0);
    assert!(slope > 0.9, "slope {slope}");
}

#[test]
fn bonus_potential_shrinks_with_repetition() {
    let inst = make_instance(&acceptance_instance(), 5).unwrap();
    let contexts = serve_contexts(&inst, 1).unwrap();
    let cfg = ConfidenceConfig::new(inst.d, inst.k, 1000, inst.s, 0.1).unwrap();
    let a = AssortmentContexts::with_unit_prices(&[1, 3], &contexts).unwrap();
    let potential_after = |rounds: usize| {
        let mut h = History::new(inst.d);
        for t in 0..rounds {
            h.push(a.clone(), t % 3).unwrap();
        }
        let state = ConfidenceState::build(&h, &cfg).unwrap();
        BonusTerms::new(&contexts, &cfg, &state, 4.0, 0.25).unwrap().v_potential(&[1, 3])
    };
    assert!(potential_after(1000) < potential_after(10));
}
