mod common;

use cbmnl::confidence::{in_set_c, in_set_e, ConfidenceConfig, ConfidenceState};
use cbmnl::harness::checks::acceptance_config;
use cbmnl::harness::{run_many, summarize_runs};
use cbmnl::linalg::{sample_ball, Vector};
use cbmnl::policy::PolicyKind;
use proptest::prelude::*;

struct Snapshot {
    fixture: common::Fixture,
    cfg: ConfidenceConfig,
    state: ConfidenceState,
}

fn snapshot(seed: u64, s: f64) -> Snapshot {
    let fixture = common::fixture(seed, 3, 3, 200, s);
    let cfg = ConfidenceConfig::new(fixture.d, fixture.k, 500, s, 0.1).unwrap();
    let state = ConfidenceState::build(&fixture.history, &cfg).unwrap();
    Snapshot {
        fixture,
        cfg,
        state,
    }
}

/// Up to `n` uniform draws from `Θ` that satisfy `keep`.
fn members(seed: u64, snap: &Snapshot, n: usize, keep: impl Fn(&Vector) -> bool) -> Vec<Vector> {
    let mut rng = common::rng(seed ^ 0xc0ff);
    let mut out = Vec::new();
    for _ in 0..20_000 {
        if out.len() == n {
            break;
        }
        let theta = sample_ball(&mut rng, snap.cfg.d, snap.cfg.s);
        if keep(&theta) {
            out.push(theta);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn c_members_lie_in_e(seed in any::<u64>(), s in 0.5..2.0f64) {
        let snap = snapshot(seed, s);
        let h = &snap.fixture.history;
        let found = members(seed, &snap, 10, |t| in_set_c(t, h, &snap.cfg, &snap.state).unwrap());
        for theta in &found {
            prop_assert!(in_set_e(theta, h, &snap.cfg, &snap.state).unwrap());
        }
    }

    #[test]
    fn e_is_convex(seed in any::<u64>(), w in 0.0..1.0f64) {
        let snap = snapshot(seed, 1.5);
        let h = &snap.fixture.history;
        let found = members(seed, &snap, 2, |t| in_set_e(t, h, &snap.cfg, &snap.state).unwrap());
        prop_assume!(found.len() == 2);
        let mix = &found[0] * w + &found[1] * (1.0 - w);
        prop_assert!(in_set_e(&mix, h, &snap.cfg, &snap.state).unwrap());
    }
}

#[test]
fn theta_star_stays_in_c_for_most_runs() {
    // The additive-bonus policy records membership in C_t.
    let cfg = acceptance_config(PolicyKind::BonusUcb, 500);
    let seeds: Vec<u64> = (0..200).collect();
    let logs = run_many(&cfg, &seeds, 4).unwrap();
    let agg = summarize_runs(&logs).unwrap();
    assert!(agg.coverage_rate >= 0.9, "coverage {}", agg.coverage_rate);
}

#[test]
fn optimism_holds_whenever_theta_star_is_covered() {
    let cfg = acceptance_config(PolicyKind::CbMnlE, 150);
    for log in run_many(&cfg, &[0, 1, 2, 3], 4).unwrap() {
        for r in log.records.iter().filter(|r| r.covered) {
            assert!(
                r.opt_value >= r.oracle_value - 1e-9,
                "seed {} round {}: {} < {}",
                log.summary.seed,
                r.t,
                r.opt_value,
                r.oracle_value
            );
        }
    }
}
