//! Multinomial-logit choice model.
//!
//! For an offered assortment with utilities `u_i = x_i·θ`, item `i` is purchased with
//! probability `exp(u_i) / (1 + Σ_j exp(u_j))` and nothing is purchased with probability
//! `1 / (1 + Σ_j exp(u_j))`. Every evaluation shifts utilities by `max(0, max_j u_j)`
//! before exponentiating.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Slack allowed on the unit-norm bound for contexts built from rounded input.
pub const CONTEXT_NORM_SLACK: f64 = 1e-12;

/// An item's attribute vector; Euclidean norm at most one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ContextVector(Vector);

impl ContextVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::from_vector(Vector::from_vec(coords))
    }

    pub fn from_vector(v: Vector) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidContext("empty vector".into()));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidContext("non-finite coordinate".into()));
        }
        let norm = v.norm();
        if norm > 1.0 + CONTEXT_NORM_SLACK {
            return Err(Error::InvalidContext(format!("norm {norm} exceeds 1")));
        }
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_vector(&self) -> &Vector {
        &self.0
    }

    pub fn utility(&self, theta: &Vector) -> f64 {
        self.0.dot(theta)
    }
}

impl TryFrom<Vec<f64>> for ContextVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ContextVector> for Vec<f64> {
    fn from(c: ContextVector) -> Self {
        c.0.as_slice().to_vec()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssortmentItem {
    pub index: usize,
    pub context: ContextVector,
    pub price: f64,
}

impl AssortmentItem {
    pub fn new(index: usize, context: ContextVector) -> Self {
        Self {
            index,
            context,
            price: 1.0,
        }
    }

    pub fn with_price(mut self, price: f64) -> Self {
        self.price = price;
        self
    }
}

/// The items offered in one round, in offer order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AssortmentContexts {
    items: Vec<AssortmentItem>,
}

impl AssortmentContexts {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validates distinct item indices, a common dimension and nonnegative finite prices.
    pub fn new(items: Vec<AssortmentItem>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(items.len());
        for item in &items {
            if !seen.insert(item.index) {
                return Err(Error::InvalidAssortment(format!(
                    "item {} offered twice",
                    item.index
                )));
            }
            if !(item.price.is_finite() && item.price >= 0.0) {
                return Err(Error::InvalidAssortment(format!(
                    "item {} has invalid price {}",
                    item.index, item.price
                )));
            }
        }
        if let Some(first) = items.first() {
            let d = first.context.dim();
            if let Some(bad) = items.iter().find(|it| it.context.dim() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: bad.context.dim(),
                });
            }
        }
        Ok(Self { items })
    }

    /// Builds the assortment `indices` out of a per-round catalogue of contexts and prices.
    pub fn select(indices: &[usize], contexts: &[ContextVector], prices: &[f64]) -> Result<Self> {
        let items = indices
            .iter()
            .map(|&i| {
                let context = contexts.get(i).ok_or(Error::IndexOutOfRange {
                    index: i,
                    len: contexts.len(),
                })?;
                let price = prices.get(i).copied().unwrap_or(1.0);
                Ok(AssortmentItem::new(i, context.clone()).with_price(price))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(items)
    }

    /// Same as [`select`](Self::select) with every price equal to one.
    pub fn with_unit_prices(indices: &[usize], contexts: &[ContextVector]) -> Result<Self> {
        Self::select(indices, contexts, &[])
    }

    pub fn items(&self) -> &[AssortmentItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.items.iter().map(|it| it.index).collect()
    }

    pub fn dim(&self) -> Option<usize> {
        self.items.first().map(|it| it.context.dim())
    }

    pub fn prices(&self) -> Vec<f64> {
        self.items.iter().map(|it| it.price).collect()
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self.dim() {
            Some(d) if d != dim => Err(Error::DimensionMismatch {
                expected: d,
                actual: dim,
            }),
            _ => Ok(()),
        }
    }

    pub fn utilities(&self, theta: &Vector) -> Result<Vec<f64>> {
        self.check_dim(theta.len())?;
        Ok(self.utilities_unchecked(theta))
    }

    pub(crate) fn utilities_unchecked(&self, theta: &Vector) -> Vec<f64> {
        self.items
            .iter()
            .map(|it| it.context.utility(theta))
            .collect()
    }
}

/// Purchase probabilities for one assortment; entries sum to one with the outside option.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChoiceDistribution {
    pub item_probs: Vec<f64>,
    pub no_purchase_prob: f64,
}

impl ChoiceDistribution {
    pub fn from_utilities(utilities: &[f64]) -> Self {
        let (item_probs, no_purchase_prob) = softmax_with_outside(utilities);
        Self {
            item_probs,
            no_purchase_prob,
        }
    }

    /// Probability of an outcome index (`0` = no purchase).
    pub fn outcome_prob(&self, outcome: usize) -> f64 {
        match outcome {
            0 => self.no_purchase_prob,
            j => self.item_probs.get(j - 1).copied().unwrap_or(0.0),
        }
    }

    pub fn len(&self) -> usize {
        self.item_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_probs.is_empty()
    }
}

/// Softmax over `(0, u_1, …, u_K)`; returns the item probabilities and the outside probability.
pub fn softmax_with_outside(utilities: &[f64]) -> (Vec<f64>, f64) {
    let shift = utilities.iter().copied().fold(0.0_f64, f64::max);
    let outside = (-shift).exp();
    let exps: Vec<f64> = utilities.iter().map(|u| (u - shift).exp()).collect();
    let z = outside + exps.iter().sum::<f64>();
    (exps.into_iter().map(|e| e / z).collect(), outside / z)
}

/// `ln(1 + Σ exp(u_j))`, stabilized.
pub fn log_partition(utilities: &[f64]) -> f64 {
    let shift = utilities.iter().copied().fold(0.0_f64, f64::max);
    let z = (-shift).exp() + utilities.iter().map(|u| (u - shift).exp()).sum::<f64>();
    shift + z.ln()
}

pub fn choice_probabilities(
    assortment: &AssortmentContexts,
    theta: &Vector,
) -> Result<ChoiceDistribution> {
    Ok(ChoiceDistribution::from_utilities(
        &assortment.utilities(theta)?,
    ))
}

/// `Σ_i price_i · μ_i`.
pub fn expected_revenue(assortment: &AssortmentContexts, theta: &Vector) -> Result<f64> {
    let dist = choice_probabilities(assortment, theta)?;
    Ok(revenue_of(assortment, &dist))
}

pub(crate) fn revenue_of(assortment: &AssortmentContexts, dist: &ChoiceDistribution) -> f64 {
    assortment
        .items()
        .iter()
        .zip(&dist.item_probs)
        .map(|(it, p)| it.price * p)
        .sum()
}

fn item_prob(assortment: &AssortmentContexts, theta: &Vector, i: usize) -> Result<f64> {
    if i >= assortment.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: assortment.len(),
        });
    }
    Ok(choice_probabilities(assortment, theta)?.item_probs[i])
}

/// `∂μ_i/∂u_i = μ_i(1 − μ_i)`.
pub fn diag_derivative(assortment: &AssortmentContexts, theta: &Vector, i: usize) -> Result<f64> {
    let mu = item_prob(assortment, theta, i)?;
    Ok(mu * (1.0 - mu))
}

/// `∂²μ_i/∂u_i² = μ_i(1 − μ_i)(1 − 2μ_i)`.
pub fn diag_second_derivative(
    assortment: &AssortmentContexts,
    theta: &Vector,
    i: usize,
) -> Result<f64> {
    let mu = item_prob(assortment, theta, i)?;
    Ok(mu * (1.0 - mu) * (1.0 - 2.0 * mu))
}

/// Draws one outcome: `0` for no purchase, `j` for the item at position `j − 1`.
pub fn sample_choice<R: Rng + ?Sized>(dist: &ChoiceDistribution, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = dist.no_purchase_prob;
    if u < acc {
        return 0;
    }
    let mut last_positive = 0;
    for (j, p) in dist.item_probs.iter().enumerate() {
        if *p > 0.0 {
            last_positive = j + 1;
        }
        acc += p;
        if u < acc {
            return j + 1;
        }
    }
    // u landed in the rounding gap above the cumulative sum.
    last_positive
}
