//! Interaction history, regularized maximum likelihood and the design matrices.
//!
//! The history keeps every round as offered, plus a compressed view in which rounds
//! that offered identical context sets are merged into one weighted group. The
//! likelihood only depends on the offered contexts and on `R = Σ_s Σ_i r_{s,i} x_{s,i}`,
//! so all sums below run over groups instead of rounds.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::choice::{AssortmentContexts, ContextVector};
use crate::error::{Error, Result};
use crate::linalg::{add_outer, DesignMatrix, FactoredMatrix, Matrix, Vector};

/// Below this projected step `α_i` falls back to the derivative at the first point.
pub const ALPHA_FALLBACK_GAP: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub assortment: AssortmentContexts,
    /// `0` = no purchase, `j` = item at position `j − 1`.
    pub outcome: usize,
}

#[derive(Clone, Debug)]
struct Group {
    /// Sorted ids into `History::contexts`.
    members: Vec<usize>,
    count: f64,
}

/// Append-only record of offered assortments and observed outcomes.
#[derive(Clone, Debug)]
pub struct History {
    dim: usize,
    rounds: Vec<Round>,
    contexts: Vec<Vector>,
    context_ids: HashMap<Vec<u64>, usize>,
    groups: Vec<Group>,
    group_ids: HashMap<Vec<usize>, usize>,
    reward_sum: Vector,
}

impl History {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            rounds: Vec::new(),
            contexts: Vec::new(),
            context_ids: HashMap::new(),
            groups: Vec::new(),
            group_ids: HashMap::new(),
            reward_sum: Vector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Index of the next round (`t` in `1..`): a history of `t − 1` rounds.
    pub fn next_round(&self) -> usize {
        self.rounds.len() + 1
    }

    /// `Σ_s Σ_i r_{s,i} x_{s,i}`.
    pub fn reward_sum(&self) -> &Vector {
        &self.reward_sum
    }

    /// Number of distinct offered context sets.
    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn push(&mut self, assortment: AssortmentContexts, outcome: usize) -> Result<()> {
        assortment.check_dim(self.dim)?;
        if outcome > assortment.len() {
            return Err(Error::InvalidAssortment(format!(
                "outcome {outcome} for an assortment of {} items",
                assortment.len()
            )));
        }
        if outcome > 0 {
            self.reward_sum += assortment.items()[outcome - 1].context.as_vector();
        }
        let mut members: Vec<usize> = assortment
            .items()
            .iter()
            .map(|it| self.context_id(&it.context))
            .collect();
        members.sort_unstable();
        match self.group_ids.get(&members) {
            Some(&g) => self.groups[g].count += 1.0,
            None => {
                self.group_ids.insert(members.clone(), self.groups.len());
                self.groups.push(Group {
                    members,
                    count: 1.0,
                });
            }
        }
        self.rounds.push(Round {
            assortment,
            outcome,
        });
        Ok(())
    }

    fn context_id(&mut self, context: &ContextVector) -> usize {
        let key: Vec<u64> = context.as_vector().iter().map(|c| c.to_bits()).collect();
        if let Some(&id) = self.context_ids.get(&key) {
            return id;
        }
        let id = self.contexts.len();
        self.contexts.push(context.as_vector().clone());
        self.context_ids.insert(key, id);
        id
    }

    fn check_theta(&self, theta: &Vector) -> Result<()> {
        if theta.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: theta.len(),
            });
        }
        Ok(())
    }

    fn unique_utilities(&self, theta: &Vector, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.contexts.iter().map(|x| x.dot(theta)));
    }

    /// Calls `f(count, members, probabilities, log_partition)` for every group at `theta`.
    fn visit_groups<F>(&self, theta: &Vector, scratch: &mut Scratch, mut f: F)
    where
        F: FnMut(f64, &[usize], &[f64], f64),
    {
        self.unique_utilities(theta, &mut scratch.utilities);
        for group in &self.groups {
            if group.members.is_empty() {
                continue;
            }
            let lse = group_probs(&group.members, &scratch.utilities, &mut scratch.probs);
            f(group.count, &group.members, &scratch.probs, lse);
        }
    }
}

#[derive(Default)]
pub(crate) struct Scratch {
    utilities: Vec<f64>,
    probs: Vec<f64>,
}

/// Fills `probs` with the group's purchase probabilities and returns `ln(1 + Σ exp(u))`.
fn group_probs(members: &[usize], utilities: &[f64], probs: &mut Vec<f64>) -> f64 {
    let shift = members
        .iter()
        .map(|&m| utilities[m])
        .fold(0.0_f64, f64::max);
    probs.clear();
    probs.extend(members.iter().map(|&m| (utilities[m] - shift).exp()));
    let z = (-shift).exp() + probs.iter().sum::<f64>();
    for p in probs.iter_mut() {
        *p /= z;
    }
    shift + z.ln()
}

/// `Σ_s log μ_{s, outcome}(θ) − (λ/2)‖θ‖²`, including the no-purchase outcomes.
pub fn penalized_log_likelihood(history: &History, theta: &Vector, lambda: f64) -> Result<f64> {
    history.check_theta(theta)?;
    Ok(-LossEvaluator::new(history, lambda).value(theta))
}

/// Negative penalized log-likelihood; convex in `θ`.
pub fn loss(history: &History, theta: &Vector, lambda: f64) -> Result<f64> {
    history.check_theta(theta)?;
    Ok(LossEvaluator::new(history, lambda).value(theta))
}

/// Gradient of the penalized log-likelihood: `Σ_s Σ_i (r_{s,i} − μ_i) x_{s,i} − λθ`.
pub fn score(history: &History, theta: &Vector, lambda: f64) -> Result<Vector> {
    Ok(history.reward_sum() - g_vector(history, theta, lambda)?)
}

/// `g(θ) = Σ_s Σ_i μ_i(θ) x_{s,i} + λθ`.
pub fn g_vector(history: &History, theta: &Vector, lambda: f64) -> Result<Vector> {
    history.check_theta(theta)?;
    let mut g = theta * lambda;
    let mut scratch = Scratch::default();
    history.visit_groups(theta, &mut scratch, |n, members, probs, _| {
        for (&m, &p) in members.iter().zip(probs) {
            g.axpy(n * p, &history.contexts[m], 1.0);
        }
    });
    Ok(g)
}

/// `H(θ) = Σ_s Σ_i μ_i(1 − μ_i) x xᵀ + λI`.
pub fn matrix_h(history: &History, theta: &Vector, lambda: f64) -> Result<DesignMatrix> {
    history.check_theta(theta)?;
    let mut h = DesignMatrix::regularizer(history.dim, lambda);
    let mut scratch = Scratch::default();
    history.visit_groups(theta, &mut scratch, |n, members, probs, _| {
        for (&m, &p) in members.iter().zip(probs) {
            h.add_rank_one(n * p * (1.0 - p), &history.contexts[m]);
        }
    });
    Ok(h)
}

/// `V = Σ_s Σ_i x xᵀ + λI`.
pub fn matrix_v(history: &History, lambda: f64) -> DesignMatrix {
    let mut v = DesignMatrix::regularizer(history.dim, lambda);
    for group in &history.groups {
        for &m in &group.members {
            v.add_rank_one(group.count, &history.contexts[m]);
        }
    }
    v
}

/// `G(θ₁, θ₂) = Σ_s Σ_i α_i x xᵀ + λI` with the difference quotient
/// `α_i = (μ_i(θ₂) − μ_i(θ₁)) / x_iᵀ(θ₂ − θ₁)` and `α_i = μ̇_i(θ₁)` when the projected
/// step is below [`ALPHA_FALLBACK_GAP`].
pub fn matrix_g(
    history: &History,
    theta1: &Vector,
    theta2: &Vector,
    lambda: f64,
) -> Result<DesignMatrix> {
    history.check_theta(theta1)?;
    history.check_theta(theta2)?;
    let mut u1 = Vec::new();
    let mut u2 = Vec::new();
    history.unique_utilities(theta1, &mut u1);
    history.unique_utilities(theta2, &mut u2);
    let mut p1 = Vec::new();
    let mut p2 = Vec::new();
    let mut g = DesignMatrix::regularizer(history.dim, lambda);
    for group in &history.groups {
        if group.members.is_empty() {
            continue;
        }
        group_probs(&group.members, &u1, &mut p1);
        group_probs(&group.members, &u2, &mut p2);
        for (k, &m) in group.members.iter().enumerate() {
            let gap = u2[m] - u1[m];
            let alpha = if gap.abs() < ALPHA_FALLBACK_GAP {
                p1[k] * (1.0 - p1[k])
            } else {
                (p2[k] - p1[k]) / gap
            };
            g.add_rank_one(group.count * alpha, &history.contexts[m]);
        }
    }
    Ok(g)
}

/// Hessian of [`loss`]: `Σ_s (Σ_i μ_i x xᵀ − m mᵀ) + λI` with `m = Σ_i μ_i x_i`.
pub fn loss_hessian(history: &History, theta: &Vector, lambda: f64) -> Result<Matrix> {
    history.check_theta(theta)?;
    let d = history.dim;
    let mut hess = Matrix::identity(d, d) * lambda;
    let mut scratch = Scratch::default();
    let mut mean = Vector::zeros(d);
    history.visit_groups(theta, &mut scratch, |n, members, probs, _| {
        mean.fill(0.0);
        for (&m, &p) in members.iter().zip(probs) {
            let x = &history.contexts[m];
            add_outer(&mut hess, n * p, x);
            mean.axpy(p, x, 1.0);
        }
        add_outer(&mut hess, -n, &mean);
    });
    Ok(hess)
}

/// Repeated evaluation of the loss and its gradient for a fixed history and `λ`.
pub struct LossEvaluator<'a> {
    history: &'a History,
    lambda: f64,
    scratch: Scratch,
}

impl<'a> LossEvaluator<'a> {
    pub fn new(history: &'a History, lambda: f64) -> Self {
        Self {
            history,
            lambda,
            scratch: Scratch::default(),
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn value(&mut self, theta: &Vector) -> f64 {
        let mut acc = 0.0;
        self.history
            .visit_groups(theta, &mut self.scratch, |n, _, _, lse| acc += n * lse);
        acc - theta.dot(self.history.reward_sum()) + 0.5 * self.lambda * theta.norm_squared()
    }

    /// Loss and gradient `g(θ) − R`.
    pub fn value_and_gradient(&mut self, theta: &Vector) -> (f64, Vector) {
        let history = self.history;
        let mut acc = 0.0;
        let mut grad = theta * self.lambda - history.reward_sum();
        history.visit_groups(theta, &mut self.scratch, |n, members, probs, lse| {
            acc += n * lse;
            for (&m, &p) in members.iter().zip(probs) {
                grad.axpy(n * p, &history.contexts[m], 1.0);
            }
        });
        let value =
            acc - theta.dot(history.reward_sum()) + 0.5 * self.lambda * theta.norm_squared();
        (value, grad)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleResult {
    pub theta_hat: Vector,
    pub score_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub const DEFAULT_MLE_TOL: f64 = 1e-8;
pub const DEFAULT_MLE_MAX_ITER: usize = 100;

/// Damped Newton ascent on the penalized log-likelihood, started at zero.
///
/// Converged means `‖score‖₂ ≤ tol`. When `max_iter` runs out the iterate with the
/// smallest score norm is returned with `converged = false`.
pub fn fit_mle(history: &History, lambda: f64, tol: f64, max_iter: usize) -> Result<MleResult> {
    fit_mle_from(history, lambda, tol, max_iter, Vector::zeros(history.dim))
}

pub fn fit_mle_from(
    history: &History,
    lambda: f64,
    tol: f64,
    max_iter: usize,
    start: Vector,
) -> Result<MleResult> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {tol}")));
    }
    history.check_theta(&start)?;
    let mut eval = LossEvaluator::new(history, lambda);
    let mut theta = start;
    let (mut value, mut grad) = eval.value_and_gradient(&theta);
    let mut best = (grad.norm(), theta.clone());
    let mut iterations = 0;
    while iterations < max_iter {
        if grad.norm() <= tol {
            break;
        }
        iterations += 1;
        let hess = loss_hessian(history, &theta, lambda)?;
        let direction = -FactoredMatrix::new(&hess)?.solve(&grad);
        let slope = grad.dot(&direction);
        let mut step = 1.0;
        loop {
            let candidate = &theta + &direction * step;
            let (cv, cg) = eval.value_and_gradient(&candidate);
            // Armijo decrease, or (near the optimum, where loss differences drown in
            // rounding) a smaller gradient.
            if cv <= value + 1e-4 * step * slope || cg.norm() < grad.norm() || step < 1e-12 {
                theta = candidate;
                value = cv;
                grad = cg;
                break;
            }
            step *= 0.5;
        }
        let norm = grad.norm();
        if norm < best.0 {
            best = (norm, theta.clone());
        }
    }
    let (score_norm, theta_hat) = best;
    Ok(MleResult {
        converged: score_norm <= tol,
        theta_hat,
        score_norm,
        iterations,
    })
}
