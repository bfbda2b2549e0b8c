//! Assortment enumeration, the optimistic CB-MNL decision step and baseline policies.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::choice::{expected_revenue, AssortmentContexts, ContextVector};
use crate::confidence::{
    in_set_c, revenue_objective, AscentOptions, ConfidenceConfig, ConfidenceState, FeasibleRegion,
};
use crate::error::{Error, Result};
use crate::estimator::History;
use crate::linalg::Vector;
use crate::rng::seeded_rng;

/// Largest number of assortments [`enumerate_assortments`] will produce.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Candidates drawn per round for the `C_t` variant.
pub const C_SET_CANDIDATES: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Optimism over the convex log-loss set `E_t`.
    CbMnlE,
    /// Optimism over the norm-based set `C_t`, by sampling.
    CbMnlC,
    /// Plug-in revenue at `θ̂` plus an additive exploration bonus.
    BonusUcb,
    /// Knows `θ*`; zero regret by construction.
    Oracle,
    /// Uniformly random assortment of maximal size.
    Random,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::CbMnlE,
        PolicyKind::CbMnlC,
        PolicyKind::BonusUcb,
        PolicyKind::Oracle,
        PolicyKind::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::CbMnlE => "cb_mnl_e",
            PolicyKind::CbMnlC => "cb_mnl_c",
            PolicyKind::BonusUcb => "bonus_ucb",
            PolicyKind::Oracle => "oracle",
            PolicyKind::Random => "random",
        }
    }

    /// Whether the policy fits the MLE and builds confidence sets.
    pub fn is_learning(self) -> bool {
        !matches!(self, PolicyKind::Oracle | PolicyKind::Random)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown policy kind `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub assortment: AssortmentContexts,
    pub theta_used: Vector,
    pub optimistic_value: f64,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of nonempty subsets of `{0..n}` with at most `k` elements.
pub fn assortment_count(n: usize, k: usize) -> u128 {
    (1..=k.min(n)).map(|size| binomial(n, size)).sum()
}

fn check_sizes(n: usize, k: usize) -> Result<()> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::InvalidConfig(format!(
            "need 1 <= K <= N, got N = {n}, K = {k}"
        )));
    }
    let count = assortment_count(n, k);
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationLimit {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

/// Subsets of exactly `size` elements in lexicographic order.
fn subsets_of_size(n: usize, size: usize, out: &mut Vec<Vec<usize>>) {
    let mut current: Vec<usize> = (0..size).collect();
    loop {
        out.push(current.clone());
        let Some(pos) = (0..size).rev().find(|&i| current[i] < n - size + i) else {
            return;
        };
        current[pos] += 1;
        for j in pos + 1..size {
            current[j] = current[j - 1] + 1;
        }
    }
}

/// All nonempty subsets of `{0..n}` with at most `k` elements: by size, then lexicographically.
pub fn enumerate_assortments(n: usize, k: usize) -> Result<Vec<Vec<usize>>> {
    check_sizes(n, k)?;
    let mut out = Vec::with_capacity(assortment_count(n, k) as usize);
    for size in 1..=k {
        subsets_of_size(n, size, &mut out);
    }
    Ok(out)
}

/// Subsets worth scoring. With one common positive price, revenue is increasing under
/// inclusion for every `θ`, so only subsets of size `k` can be optimal.
fn candidate_sets(n: usize, k: usize, prices: &[f64]) -> Result<Vec<Vec<usize>>> {
    check_sizes(n, k)?;
    let uniform = prices.first().is_none_or(|&p0| p0 > 0.0 && prices.iter().all(|&p| p == p0));
    if uniform {
        let mut out = Vec::with_capacity(binomial(n, k) as usize);
        subsets_of_size(n, k, &mut out);
        Ok(out)
    } else {
        enumerate_assortments(n, k)
    }
}

/// Running argmax with ties going to the lexicographically smaller index set.
struct Best {
    value: f64,
    indices: Vec<usize>,
    theta: Vector,
}

impl Best {
    fn offer(best: &mut Option<Best>, value: f64, indices: &[usize], theta: &Vector) {
        let better = match best {
            None => true,
            Some(b) => value > b.value || (value == b.value && indices < b.indices.as_slice()),
        };
        if better {
            *best = Some(Best {
                value,
                indices: indices.to_vec(),
                theta: theta.clone(),
            });
        }
    }
}

fn into_decision(best: Option<Best>, contexts: &[ContextVector], prices: &[f64]) -> Result<Decision> {
    let best = best.ok_or_else(|| Error::InvalidConfig("no feasible assortment".into()))?;
    Ok(Decision {
        assortment: AssortmentContexts::select(&best.indices, contexts, prices)?,
        theta_used: best.theta,
        optimistic_value: best.value,
    })
}

/// Which confidence set the optimistic step maximizes over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    E,
    C,
}

/// One round of the optimistic rule: for each candidate assortment, the largest expected
/// revenue over the confidence set; returns the best assortment and its maximizer.
///
/// Every assortment's inner search uses an identically seeded generator, so
/// assortments with identical contexts receive identical values.
#[allow(clippy::too_many_arguments)]
pub fn cb_mnl_step<R: Rng + ?Sized>(
    contexts: &[ContextVector],
    prices: &[f64],
    history: &History,
    cfg: &ConfidenceConfig,
    state: &ConfidenceState,
    set_kind: SetKind,
    options: AscentOptions,
    rng: &mut R,
) -> Result<Decision> {
    optimistic_step(contexts, prices, history, cfg, state, set_kind, options, rng, true)
}

#[allow(clippy::too_many_arguments)]
fn optimistic_step<R: Rng + ?Sized>(
    contexts: &[ContextVector],
    prices: &[f64],
    history: &History,
    cfg: &ConfidenceConfig,
    state: &ConfidenceState,
    set_kind: SetKind,
    options: AscentOptions,
    rng: &mut R,
    prune: bool,
) -> Result<Decision> {
    let sets = candidate_sets(contexts.len(), cfg.k, prices)?;
    let round_seed = rng.next_u64();
    let mut best = None;
    match set_kind {
        SetKind::E => {
            let mut region = FeasibleRegion::new(history, cfg, state, options)?;
            let bounds = if prune {
                revenue_bounds(&mut region, contexts, prices, &sets)
            } else {
                vec![f64::INFINITY; sets.len()]
            };
            let mut order: Vec<usize> = (0..sets.len()).collect();
            order.sort_by(|&a, &b| bounds[b].total_cmp(&bounds[a]));
            for i in order {
                if best.as_ref().is_some_and(|b: &Best| bounds[i] < b.value) {
                    // Every remaining assortment has a smaller bound.
                    break;
                }
                let indices = &sets[i];
                let a = AssortmentContexts::select(indices, contexts, prices)?;
                let mut inner_rng = seeded_rng(round_seed);
                let v = region.maximize_revenue(&a, &mut inner_rng)?;
                Best::offer(&mut best, v.value, indices, &v.theta);
            }
        }
        SetKind::C => {
            let mut inner_rng = seeded_rng(round_seed);
            let mut candidates = vec![state.theta_hat.clone()];
            candidates.extend(sample_c_members(
                history,
                cfg,
                state,
                C_SET_CANDIDATES,
                &mut inner_rng,
            )?);
            for indices in &sets {
                let a = AssortmentContexts::select(indices, contexts, prices)?;
                let mut objective = revenue_objective(&a);
                let mut local: Option<(f64, &Vector)> = None;
                for theta in &candidates {
                    let value = objective(theta).0;
                    if local.is_none_or(|(v, _)| value > v) {
                        local = Some((value, theta));
                    }
                }
                let (value, theta) = local.expect("candidate list contains θ̂");
                Best::offer(&mut best, value, indices, theta);
            }
        }
    }
    into_decision(best, contexts, prices)
}

/// Upper bounds on each assortment's optimistic revenue over `E_t ∩ Θ`.
///
/// Revenue is at most `max price × s/(1 + s)` with `s = Σ exp(u_i)`, which increases in
/// every utility, so per-item utility bounds give a bound per assortment.
fn revenue_bounds(
    region: &mut FeasibleRegion<'_>,
    contexts: &[ContextVector],
    prices: &[f64],
    sets: &[Vec<usize>],
) -> Vec<f64> {
    let utility: Vec<f64> = contexts
        .iter()
        .map(|x| region.utility_upper_bound(x.as_vector()))
        .collect();
    sets.iter()
        .map(|set| {
            let top = set.iter().map(|&i| utility[i]).fold(f64::NEG_INFINITY, f64::max);
            if !top.is_finite() {
                return f64::INFINITY;
            }
            let scaled: f64 = set.iter().map(|&i| (utility[i] - top).exp()).sum();
            let share = scaled / ((-top).exp() + scaled);
            let price = set.iter().map(|&i| prices[i]).fold(0.0, f64::max);
            price * share
        })
        .collect()
}

/// `2(1 + 2S)γ`: radius of the `H(θ̂)` ellipsoid that proposals for `C_t` are drawn from.
pub fn c_proposal_radius(cfg: &ConfidenceConfig, state: &ConfidenceState) -> f64 {
    2.0 * (1.0 + 2.0 * cfg.s) * state.gamma
}

/// Draws `n` proposals uniformly from the ellipsoid `‖θ − θ̂‖_{H(θ̂)} ≤ 2(1 + 2S)γ` and
/// keeps those inside `C_t`.
pub fn sample_c_members<R: Rng + ?Sized>(
    history: &History,
    cfg: &ConfidenceConfig,
    state: &ConfidenceState,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vector>> {
    let factor = state.h_hat.factor()?;
    let radius = c_proposal_radius(cfg, state);
    let mut out = Vec::new();
    for _ in 0..n {
        let u = crate::linalg::sample_ball(rng, cfg.d, radius);
        let theta = &state.theta_hat + factor.ellipsoid_point(&u);
        if in_set_c(&theta, history, cfg, state)? {
            out.push(theta);
        }
    }
    Ok(out)
}

/// Exploration bonus for the additive-bonus policy:
/// `(2 + 4S)γ Σ‖x_i‖_{H(θ̂)⁻¹} + 4κ(1 + 2S)² M γ² Σ‖x_i‖²_{V⁻¹}`.
pub struct BonusTerms {
    h_norms: Vec<f64>,
    v_norms_sq: Vec<f64>,
    first: f64,
    second: f64,
}

impl BonusTerms {
    pub fn new(
        contexts: &[ContextVector],
        cfg: &ConfidenceConfig,
        state: &ConfidenceState,
        kappa: f64,
        m_const: f64,
    ) -> Result<Self> {
        let h = state.h_hat.factor()?;
        let v = state.v.factor()?;
        let s = cfg.s;
        let gamma = state.gamma;
        Ok(Self {
            h_norms: contexts
                .iter()
                .map(|x| h.inverse_norm_sq(x.as_vector()).sqrt())
                .collect(),
            v_norms_sq: contexts
                .iter()
                .map(|x| v.inverse_norm_sq(x.as_vector()))
                .collect(),
            first: (2.0 + 4.0 * s) * gamma,
            second: 4.0 * kappa * (1.0 + 2.0 * s).powi(2) * m_const * gamma * gamma,
        })
    }

    pub fn bonus(&self, indices: &[usize]) -> f64 {
        let h: f64 = indices.iter().map(|&i| self.h_norms[i]).sum();
        let v: f64 = indices.iter().map(|&i| self.v_norms_sq[i]).sum();
        self.first * h + self.second * v
    }

    /// The `Σ‖x_i‖²_{V⁻¹}` part on its own.
    pub fn v_potential(&self, indices: &[usize]) -> f64 {
        indices.iter().map(|&i| self.v_norms_sq[i]).sum()
    }
}

pub fn bonus_ucb_step(
    contexts: &[ContextVector],
    prices: &[f64],
    cfg: &ConfidenceConfig,
    state: &ConfidenceState,
    kappa: f64,
    m_const: f64,
) -> Result<Decision> {
    let sets = candidate_sets(contexts.len(), cfg.k, prices)?;
    let terms = BonusTerms::new(contexts, cfg, state, kappa, m_const)?;
    let mut best = None;
    for indices in &sets {
        let a = AssortmentContexts::select(indices, contexts, prices)?;
        let value = expected_revenue(&a, &state.theta_hat)? + terms.bonus(indices);
        Best::offer(&mut best, value, indices, &state.theta_hat);
    }
    into_decision(best, contexts, prices)
}

/// Brute-force best assortment at `θ*` over every nonempty subset of size at most `k`,
/// with its expected revenue.
pub fn oracle_assortment(
    contexts: &[ContextVector],
    prices: &[f64],
    theta_star: &Vector,
    k: usize,
) -> Result<(Vec<usize>, f64)> {
    let mut best = None;
    for indices in enumerate_assortments(contexts.len(), k)? {
        let a = AssortmentContexts::select(&indices, contexts, prices)?;
        let value = expected_revenue(&a, theta_star)?;
        Best::offer(&mut best, value, &indices, theta_star);
    }
    let best = best.expect("at least one assortment");
    Ok((best.indices, best.value))
}

/// Uniformly random subset of size `min(k, n)`, sorted.
pub fn random_assortment<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    check_sizes(n, k)?;
    let mut indices = sample(rng, n, k).into_vec();
    indices.sort_unstable();
    Ok(indices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    fn ctx(v: &[f64]) -> ContextVector {
        ContextVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        let sets = enumerate_assortments(3, 2).unwrap();
        assert_eq!(
            sets,
            vec![vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2]]
        );
        assert_eq!(enumerate_assortments(1, 1).unwrap(), vec![vec![0]]);
        assert_eq!(enumerate_assortments(10, 3).unwrap().len(), 175);
        assert_eq!(assortment_count(10, 3), 10 + 45 + 120);
    }

    #[test]
    fn enumeration_guard() {
        assert!(matches!(
            enumerate_assortments(60, 10),
            Err(Error::EnumerationLimit { .. })
        ));
        assert!(enumerate_assortments(3, 4).is_err());
        assert!(enumerate_assortments(3, 0).is_err());
    }

    #[test]
    fn policy_kind_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.as_str().parse::<PolicyKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.as_str()));
        }
        assert_eq!("CB_MNL_E".parse::<PolicyKind>().unwrap(), PolicyKind::CbMnlE);
        assert!("greedy".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn tie_break_prefers_smaller_index_set() {
        let mut best = None;
        let theta = Vector::zeros(1);
        Best::offer(&mut best, 1.0, &[1, 2], &theta);
        Best::offer(&mut best, 1.0, &[0, 3], &theta);
        Best::offer(&mut best, 1.0, &[2], &theta);
        assert_eq!(best.unwrap().indices, vec![0, 3]);
    }

    #[test]
    fn oracle_examples() {
        let same = vec![ctx(&[0.3, 0.1]); 5];
        let unit = vec![1.0; 5];
        let theta = Vector::from_vec(vec![1.0, -1.0]);
        assert_eq!(oracle_assortment(&same, &unit, &theta, 3).unwrap().0, vec![0, 1, 2]);
        assert_eq!(oracle_assortment(&same, &unit, &theta, 5).unwrap().0, vec![0, 1, 2, 3, 4]);
        let line: Vec<ContextVector> = [0.1, -0.5, 0.9, 0.4].iter().map(|&x| ctx(&[x])).collect();
        let (top, _) = oracle_assortment(&line, &[1.0; 4], &Vector::from_vec(vec![2.0]), 2).unwrap();
        assert_eq!(top, vec![2, 3]);
    }

    #[test]
    fn identical_contexts_break_ties_to_first_items() {
        let contexts = vec![ctx(&[0.2, 0.4]); 4];
        let prices = vec![1.0; 4];
        let history = History::new(2);
        let cfg = ConfidenceConfig::new(2, 2, 100, 1.0, 0.1).unwrap();
        let state = ConfidenceState::build(&history, &cfg).unwrap();
        let mut rng = seeded_rng(5);
        for kind in [SetKind::E, SetKind::C] {
            let d = cb_mnl_step(
                &contexts,
                &prices,
                &history,
                &cfg,
                &state,
                kind,
                AscentOptions::default(),
                &mut rng,
            )
            .unwrap();
            assert_eq!(d.assortment.indices(), vec![0, 1]);
            let check = expected_revenue(&d.assortment, &d.theta_used).unwrap();
            assert!((check - d.optimistic_value).abs() < 1e-9);
        }
        let d = bonus_ucb_step(&contexts, &prices, &cfg, &state, 4.0, 0.25).unwrap();
        assert_eq!(d.assortment.indices(), vec![0, 1]);
    }

    #[test]
    fn pruning_matches_exhaustive_scoring() {
        use crate::linalg::sample_ball;
        let mut rng = seeded_rng(21);
        for case in 0..12 {
            let n = 6;
            let contexts: Vec<ContextVector> = (0..n)
                .map(|_| ContextVector::from_vector(sample_ball(&mut rng, 2, 1.0)).unwrap())
                .collect();
            let prices: Vec<f64> = if case % 3 == 0 {
                (0..n).map(|_| rng.random_range(0.5..2.0)).collect()
            } else {
                vec![1.0; n]
            };
            let theta_star = sample_ball(&mut rng, 2, 1.5);
            let cfg = ConfidenceConfig::new(2, 2, 400, 1.5, 0.1).unwrap();
            let mut history = History::new(2);
            for _ in 0..(case * 40) {
                let idx = random_assortment(n, 2, &mut rng).unwrap();
                let a = AssortmentContexts::select(&idx, &contexts, &prices).unwrap();
                let dist = crate::choice::choice_probabilities(&a, &theta_star).unwrap();
                let outcome = crate::choice::sample_choice(&dist, &mut rng);
                history.push(a, outcome).unwrap();
            }
            let state = ConfidenceState::build(&history, &cfg).unwrap();
            let seed = rng.random::<u64>();
            let step = |prune| {
                optimistic_step(
                    &contexts,
                    &prices,
                    &history,
                    &cfg,
                    &state,
                    SetKind::E,
                    AscentOptions::default(),
                    &mut seeded_rng(seed),
                    prune,
                )
                .unwrap()
            };
            assert_eq!(step(true), step(false), "case {case}");
        }
    }

    #[test]
    fn single_item_is_always_offered() {
        let contexts = vec![ctx(&[0.5])];
        let history = History::new(1);
        let cfg = ConfidenceConfig::new(1, 1, 10, 1.0, 0.1).unwrap();
        let state = ConfidenceState::build(&history, &cfg).unwrap();
        let mut rng = seeded_rng(0);
        let d = cb_mnl_step(
            &contexts,
            &[1.0],
            &history,
            &cfg,
            &state,
            SetKind::E,
            AscentOptions::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(d.assortment.indices(), vec![0]);
    }

    #[test]
    fn random_assortments_have_full_size() {
        let mut rng = seeded_rng(2);
        for _ in 0..100 {
            let a = random_assortment(8, 3, &mut rng).unwrap();
            assert_eq!(a.len(), 3);
            assert!(a.windows(2).all(|w| w[0] < w[1]));
            assert!(a.iter().all(|&i| i < 8));
        }
    }

    #[test]
    fn mixed_prices_consider_small_sets() {
        // A cheap item dilutes the revenue of an expensive one.
        let contexts = vec![ctx(&[0.0]), ctx(&[0.0])];
        let prices = vec![10.0, 0.1];
        let (best, value) =
            oracle_assortment(&contexts, &prices, &Vector::zeros(1), 2).unwrap();
        assert_eq!(best, vec![0]);
        assert!((value - 5.0).abs() < 1e-12);
    }
}
