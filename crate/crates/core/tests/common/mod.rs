//! Random fixtures shared by the integration tests.
#![allow(dead_code)]

use cbmnl::choice::{sample_choice, AssortmentContexts, ChoiceDistribution, ContextVector};
use cbmnl::estimator::History;
use cbmnl::linalg::{sample_ball, Vector};
use cbmnl::rng::seeded_rng;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    seeded_rng(seed)
}

pub fn pool(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Vec<ContextVector> {
    (0..n)
        .map(|_| ContextVector::from_vector(sample_ball(rng, d, 1.0)).unwrap())
        .collect()
}

/// `rounds` random assortments of size `1..=k` answered by MNL draws at `theta`.
pub fn history(
    rng: &mut ChaCha8Rng,
    pool: &[ContextVector],
    k: usize,
    theta: &Vector,
    rounds: usize,
) -> History {
    let mut h = History::new(theta.len());
    for _ in 0..rounds {
        let size = rng.random_range(1..=k.min(pool.len()));
        let mut idx = sample(rng, pool.len(), size).into_vec();
        idx.sort_unstable();
        let a = AssortmentContexts::with_unit_prices(&idx, pool).unwrap();
        let dist = ChoiceDistribution::from_utilities(&a.utilities(theta).unwrap());
        let outcome = sample_choice(&dist, rng);
        h.push(a, outcome).unwrap();
    }
    h
}

/// A random history together with its dimension, pool and generating parameter.
pub struct Fixture {
    pub d: usize,
    pub k: usize,
    pub pool: Vec<ContextVector>,
    pub theta_star: Vector,
    pub history: History,
}

pub fn fixture(seed: u64, max_d: usize, max_k: usize, max_rounds: usize, s: f64) -> Fixture {
    let mut r = rng(seed);
    let d = r.random_range(1..=max_d);
    let k = r.random_range(1..=max_k);
    let n = r.random_range(k..=k + 4);
    let pool = pool(&mut r, d, n);
    let theta_star = sample_ball(&mut r, d, s);
    let rounds = r.random_range(1..=max_rounds);
    let history = history(&mut r, &pool, k, &theta_star, rounds);
    Fixture {
        d,
        k,
        pool,
        theta_star,
        history,
    }
}
