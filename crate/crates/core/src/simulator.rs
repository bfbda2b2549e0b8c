//! Synthetic environments: instances, context serving, outcome sampling and `κ` estimation.
//!
//! `θ*` and the contexts are read only by the environment and by diagnostics; policies
//! see contexts and outcomes.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::choice::{choice_probabilities, sample_choice, AssortmentContexts, ChoiceDistribution, ContextVector};
use crate::error::{Error, Result};
use crate::linalg::{sample_ball, Vector};
use crate::policy::{assortment_count, enumerate_assortments};
use crate::rng::{stream, stream_rng};

/// At most this many assortments are scanned when estimating `κ`.
pub const KAPPA_MAX_ASSORTMENTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextMode {
    /// One pool of `N` contexts drawn at creation and served every round.
    FixedPool,
    /// `N` fresh contexts every round, seeded by `(seed, t)`.
    FreshIid,
}

fn default_context_mode() -> ContextMode {
    ContextMode::FixedPool
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub d: usize,
    #[serde(alias = "N")]
    pub n: usize,
    #[serde(alias = "K")]
    pub k: usize,
    /// Norm bound given to the learner.
    #[serde(alias = "S")]
    pub s: f64,
    /// Norm bound for drawing `θ*`; at most `s`.
    #[serde(alias = "S_true")]
    pub s_true: f64,
    #[serde(default = "default_context_mode")]
    pub context_mode: ContextMode,
    /// Per-item prices; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<Vec<f64>>,
}

impl InstanceConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.d == 0 {
            return bad("d must be positive".into());
        }
        if self.n == 0 || self.k == 0 || self.k > self.n {
            return bad(format!("need 1 <= K <= N, got N = {}, K = {}", self.n, self.k));
        }
        if !(self.s_true >= 0.0 && self.s_true <= self.s && self.s.is_finite()) {
            return bad(format!(
                "need 0 <= S_true <= S, got S_true = {}, S = {}",
                self.s_true, self.s
            ));
        }
        if let Some(p) = &self.prices {
            if p.len() != self.n {
                return bad(format!("{} prices for {} items", p.len(), self.n));
            }
            if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return bad("prices must be finite and nonnegative".into());
            }
        }
        Ok(())
    }
}

/// One synthetic environment. Serialized field names follow the conventional symbols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "S_true")]
    pub s_true: f64,
    pub theta_star: Vec<f64>,
    pub context_mode: ContextMode,
    /// Row-major contexts; empty in `fresh_iid` mode.
    pub pool: Vec<Vec<f64>>,
    pub prices: Vec<f64>,
    pub seed: u64,
}

impl Instance {
    pub fn theta_star(&self) -> Vector {
        Vector::from_vec(self.theta_star.clone())
    }

    pub fn config(&self) -> InstanceConfig {
        InstanceConfig {
            d: self.d,
            n: self.n,
            k: self.k,
            s: self.s,
            s_true: self.s_true,
            context_mode: self.context_mode,
            prices: Some(self.prices.clone()),
        }
    }

    /// Checks the invariants a hand-written or reloaded instance must satisfy.
    pub fn validate(&self) -> Result<()> {
        self.config().validate()?;
        if self.theta_star.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: self.theta_star.len(),
            });
        }
        if self.theta_star().norm() > self.s_true * (1.0 + 1e-12) {
            return Err(Error::InvalidConfig("theta_star lies outside the S_true ball".into()));
        }
        match self.context_mode {
            ContextMode::FixedPool if self.pool.len() != self.n => Err(Error::InvalidConfig(
                format!("pool holds {} contexts for N = {}", self.pool.len(), self.n),
            )),
            _ => {
                for row in &self.pool {
                    let x = ContextVector::new(row.clone())?;
                    if x.dim() != self.d {
                        return Err(Error::DimensionMismatch {
                            expected: self.d,
                            actual: x.dim(),
                        });
                    }
                }
                Ok(())
            }
        }
    }
}

fn draw_contexts<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> Vec<ContextVector> {
    (0..n)
        .map(|_| ContextVector::from_vector(sample_ball(rng, d, 1.0)).expect("unit-ball draw is a valid context"))
        .collect()
}

/// `θ*` uniform in the `S_true` ball; contexts uniform in the unit ball.
pub fn make_instance(cfg: &InstanceConfig, seed: u64) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = stream_rng(seed, &[stream::INSTANCE]);
    let theta_star = sample_ball(&mut rng, cfg.d, cfg.s_true);
    let pool = match cfg.context_mode {
        ContextMode::FixedPool => draw_contexts(&mut rng, cfg.n, cfg.d)
            .into_iter()
            .map(Vec::from)
            .collect(),
        ContextMode::FreshIid => Vec::new(),
    };
    Ok(Instance {
        d: cfg.d,
        n: cfg.n,
        k: cfg.k,
        s: cfg.s,
        s_true: cfg.s_true,
        theta_star: theta_star.as_slice().to_vec(),
        context_mode: cfg.context_mode,
        pool,
        prices: cfg.prices.clone().unwrap_or_else(|| vec![1.0; cfg.n]),
        seed,
    })
}

/// The `N` contexts on offer in round `t ≥ 1`.
pub fn serve_contexts(instance: &Instance, t: usize) -> Result<Vec<ContextVector>> {
    match instance.context_mode {
        ContextMode::FixedPool => instance
            .pool
            .iter()
            .map(|row| ContextVector::new(row.clone()))
            .collect(),
        ContextMode::FreshIid => {
            let mut rng = stream_rng(instance.seed, &[stream::CONTEXTS, t as u64]);
            Ok(draw_contexts(&mut rng, instance.n, instance.d))
        }
    }
}

/// True choice distribution of an offered assortment.
pub fn true_distribution(instance: &Instance, assortment: &AssortmentContexts) -> Result<ChoiceDistribution> {
    choice_probabilities(assortment, &instance.theta_star())
}

/// Samples the customer's choice at `θ*`: `0` for no purchase, `j` for position `j − 1`.
pub fn environment_step<R: Rng + ?Sized>(
    instance: &Instance,
    assortment: &AssortmentContexts,
    rng: &mut R,
) -> Result<usize> {
    Ok(sample_choice(&true_distribution(instance, assortment)?, rng))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    pub value: f64,
    pub argmax_theta: Vec<f64>,
    pub argmax_context: Vec<f64>,
}

/// `max 1/(μ_i(1 − μ_i))` over the given parameters, assortments and items.
pub fn kappa_search(contexts: &[ContextVector], sets: &[Vec<usize>], thetas: &[Vector]) -> Result<KappaEstimate> {
    let mut best: Option<KappaEstimate> = None;
    for theta in thetas {
        let utilities: Vec<f64> = contexts.iter().map(|x| x.utility(theta)).collect();
        for set in sets {
            let u: Vec<f64> = set.iter().map(|&i| utilities[i]).collect();
            let dist = ChoiceDistribution::from_utilities(&u);
            for (pos, &i) in set.iter().enumerate() {
                let mu = dist.item_probs[pos];
                let value = 1.0 / (mu * (1.0 - mu));
                if best.as_ref().is_none_or(|b| value > b.value) {
                    best = Some(KappaEstimate {
                        value,
                        argmax_theta: theta.as_slice().to_vec(),
                        argmax_context: contexts[i].as_vector().as_slice().to_vec(),
                    });
                }
            }
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("kappa search over an empty grid".into()))
}

/// Parameters searched by [`estimate_kappa`]: the origin, `grid_size` uniform draws from
/// the `S` ball, and `±S x/‖x‖` for each context.
pub fn kappa_grid(instance: &Instance, contexts: &[ContextVector], grid_size: usize) -> Vec<Vector> {
    let mut rng = stream_rng(instance.seed, &[stream::KAPPA]);
    let mut thetas = vec![Vector::zeros(instance.d)];
    thetas.extend((0..grid_size).map(|_| sample_ball(&mut rng, instance.d, instance.s)));
    for x in contexts {
        let norm = x.as_vector().norm();
        if norm > 0.0 {
            let edge = x.as_vector() * (instance.s / norm);
            thetas.push(-&edge);
            thetas.push(edge);
        }
    }
    thetas
}

/// Assortments scanned by [`estimate_kappa`]: all of them, or a seeded sample of
/// [`KAPPA_MAX_ASSORTMENTS`] when there are more.
pub fn kappa_assortments(instance: &Instance) -> Result<Vec<Vec<usize>>> {
    if assortment_count(instance.n, instance.k) <= KAPPA_MAX_ASSORTMENTS as u128 {
        return enumerate_assortments(instance.n, instance.k);
    }
    let mut rng = stream_rng(instance.seed, &[stream::KAPPA, 1]);
    Ok((0..KAPPA_MAX_ASSORTMENTS)
        .map(|_| {
            let size = rng.random_range(1..=instance.k);
            let mut set = sample(&mut rng, instance.n, size).into_vec();
            set.sort_unstable();
            set
        })
        .collect())
}

/// Estimates `κ` over the `S` ball and the instance's realizable assortments. In
/// `fresh_iid` mode the round-1 contexts stand in for the pool.
pub fn estimate_kappa(instance: &Instance, grid_size: usize) -> Result<KappaEstimate> {
    let contexts = serve_contexts(instance, 1)?;
    let sets = kappa_assortments(instance)?;
    let thetas = kappa_grid(instance, &contexts, grid_size);
    kappa_search(&contexts, &sets, &thetas)
}
