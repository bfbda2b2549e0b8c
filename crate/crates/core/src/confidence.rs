//! Confidence radii, membership in `C_t` and `E_t`, and optimistic maximization over `E_t`.
//!
//! Both sets live inside the parameter ball `Θ = {‖θ‖₂ ≤ S}`. `C_t` bounds
//! `‖g(θ) − g(θ̂)‖` in the `H(θ)⁻¹` norm by `γ_t` and is not convex. `E_t` is the
//! sublevel set `loss(θ) − loss(θ̂) ≤ β_t²` of the convex negative penalized
//! log-likelihood.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::choice::{softmax_with_outside, AssortmentContexts};
use crate::error::{Error, Result};
use crate::estimator::{
    fit_mle, g_vector, loss, matrix_h, matrix_v, History, LossEvaluator, MleResult,
    DEFAULT_MLE_MAX_ITER, DEFAULT_MLE_TOL,
};
use crate::linalg::{max_eigenvalue, sample_ball, DesignMatrix, Vector};

pub const DEFAULT_L_CONST: f64 = 0.25;

/// Relative slack on `‖θ‖₂ ≤ S` so points placed on the sphere by rescaling count as inside.
const BALL_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceConfig {
    pub delta: f64,
    pub lambda: f64,
    /// Norm bound `S` on the parameter.
    pub s: f64,
    /// Upper bound on `μ̇` used inside `γ_t`.
    pub l_const: f64,
    pub d: usize,
    pub k: usize,
    pub horizon: usize,
}

/// `max(1, d · ln(K · T))`.
pub fn default_lambda(d: usize, k: usize, horizon: usize) -> f64 {
    let kt = (k.max(1) * horizon.max(1)) as f64;
    (d as f64 * kt.ln()).max(1.0)
}

impl ConfidenceConfig {
    /// Default `λ` and `L`; see [`default_lambda`] and [`DEFAULT_L_CONST`].
    pub fn new(d: usize, k: usize, horizon: usize, s: f64, delta: f64) -> Result<Self> {
        let cfg = Self {
            delta,
            lambda: default_lambda(d, k, horizon),
            s,
            l_const: DEFAULT_L_CONST,
            d,
            k,
            horizon,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad(format!("delta must lie in (0, 1], got {}", self.delta));
        }
        if !(self.lambda >= 1.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be at least 1, got {}", self.lambda));
        }
        if !(self.s >= 0.0) || !self.s.is_finite() {
            return bad(format!("S must be a nonnegative real, got {}", self.s));
        }
        if !(self.l_const > 0.0 && self.l_const <= 1.0) {
            return bad(format!("L must lie in (0, 1], got {}", self.l_const));
        }
        if self.d == 0 || self.k == 0 {
            return bad("d and K must be positive".into());
        }
        Ok(())
    }
}

/// `γ_t = √λ/2 + (2/√λ)·ln((λ + LKt/d)^{d/2} λ^{−d/2} / δ) + (2d/√λ)·ln 2`.
pub fn gamma_radius(cfg: &ConfidenceConfig, t: usize) -> f64 {
    let lambda = cfg.lambda;
    let d = cfg.d as f64;
    let sqrt_l = lambda.sqrt();
    let growth = (lambda + cfg.l_const * cfg.k as f64 * t as f64 / d).ln() - lambda.ln();
    let log_term = 0.5 * d * growth - cfg.delta.ln();
    sqrt_l / 2.0 + 2.0 / sqrt_l * log_term + 2.0 * d / sqrt_l * std::f64::consts::LN_2
}

/// `β = γ + γ²/λ`.
pub fn beta_radius(gamma: f64, lambda: f64) -> f64 {
    gamma + gamma * gamma / lambda
}

/// Everything a policy needs from round `t`'s fit; an immutable snapshot.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfidenceState {
    /// Round whose decision this snapshot informs; the history holds `t − 1` rounds.
    pub t: usize,
    pub theta_hat: Vector,
    pub mle_converged: bool,
    pub gamma: f64,
    pub beta: f64,
    pub h_hat: DesignMatrix,
    pub v: DesignMatrix,
    pub g_hat: Vector,
    pub loss_at_hat: f64,
}

impl ConfidenceState {
    /// Fits the regularized MLE on `history` and builds the snapshot for the next round.
    pub fn build(history: &History, cfg: &ConfidenceConfig) -> Result<Self> {
        let fit = fit_mle(history, cfg.lambda, DEFAULT_MLE_TOL, DEFAULT_MLE_MAX_ITER)?;
        Self::from_fit(history, cfg, fit)
    }

    pub fn from_fit(history: &History, cfg: &ConfidenceConfig, fit: MleResult) -> Result<Self> {
        cfg.validate()?;
        if history.dim() != cfg.d {
            return Err(Error::DimensionMismatch {
                expected: cfg.d,
                actual: history.dim(),
            });
        }
        let t = history.next_round();
        let gamma = gamma_radius(cfg, t);
        let theta = fit.theta_hat;
        Ok(Self {
            t,
            mle_converged: fit.converged,
            gamma,
            beta: beta_radius(gamma, cfg.lambda),
            h_hat: matrix_h(history, &theta, cfg.lambda)?,
            v: matrix_v(history, cfg.lambda),
            g_hat: g_vector(history, &theta, cfg.lambda)?,
            loss_at_hat: loss(history, &theta, cfg.lambda)?,
            theta_hat: theta,
        })
    }
}

pub fn in_parameter_ball(theta: &Vector, s: f64) -> bool {
    theta.norm() <= s * (1.0 + BALL_SLACK)
}

/// `θ ∈ Θ` and `‖g(θ) − g(θ̂)‖_{H(θ)⁻¹} ≤ γ_t`.
pub fn in_set_c(
    theta: &Vector,
    history: &History,
    cfg: &ConfidenceConfig,
    state: &ConfidenceState,
) -> Result<bool> {
    Ok(in_parameter_ball(theta, cfg.s) && c_deviation(theta, history, cfg, state)? <= state.gamma)
}

/// `‖g(θ) − g(θ̂)‖_{H(θ)⁻¹}`.
pub fn c_deviation(
    theta: &Vector,
    history: &History,
    cfg: &ConfidenceConfig,
    state: &ConfidenceState,
) -> Result<f64> {
    let diff = g_vector(history, theta, cfg.lambda)? - &state.g_hat;
    matrix_h(history, theta, cfg.lambda)?.inverse_norm(&diff)
}

/// `θ ∈ Θ` and `loss(θ) − loss(θ̂) ≤ β_t²`.
pub fn in_set_e(
    theta: &Vector,
    history: &History,
    cfg: &ConfidenceConfig,
    state: &ConfidenceState,
) -> Result<bool> {
    if !in_parameter_ball(theta, cfg.s) {
        return Ok(false);
    }
    Ok(loss(history, theta, cfg.lambda)? - state.loss_at_hat <= state.beta * state.beta)
}

/// Step control for the projected ascent over `E_t ∩ Θ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AscentOptions {
    pub restarts: usize,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_iter: usize,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            initial_step: 0.1,
            min_step: 1e-6,
            max_iter: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimisticValue {
    pub value: f64,
    pub theta: Vector,
}

/// Maximizes `expected_revenue(assortment, θ)` over `E_t ∩ Θ`.
///
/// The returned value is never below the value at `θ̂`.
pub fn max_revenue_over_e<R: Rng + ?Sized>(
    assortment: &AssortmentContexts,
    history: &History,
    cfg: &ConfidenceConfig,
    state: &ConfidenceState,
    restarts: usize,
    rng: &mut R,
) -> Result<OptimisticValue> {
    let options = AscentOptions {
        restarts,
        ..AscentOptions::default()
    };
    FeasibleRegion::new(history, cfg, state, options)?.maximize_revenue(assortment, rng)
}

/// `E_t ∩ Θ` for one round, with the loss evaluator reused across assortments.
pub struct FeasibleRegion<'a> {
    eval: LossEvaluator<'a>,
    s: f64,
    d: usize,
    theta_hat: Vector,
    loss_at_hat: f64,
    beta_sq: f64,
    /// A point of `E_t ∩ Θ` towards which infeasible points are pulled, with its
    /// constraint value `loss − loss(θ̂) − β²`.
    anchor: Option<(Vector, f64)>,
    /// `Θ ⊆ E_t`, so only the ball constraint binds.
    ball_only: bool,
    options: AscentOptions,
}

impl<'a> FeasibleRegion<'a> {
    pub fn new(
        history: &'a History,
        cfg: &ConfidenceConfig,
        state: &ConfidenceState,
        options: AscentOptions,
    ) -> Result<Self> {
        if options.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if state.theta_hat.len() != history.dim() {
            return Err(Error::DimensionMismatch {
                expected: history.dim(),
                actual: state.theta_hat.len(),
            });
        }
        let mut eval = LossEvaluator::new(history, cfg.lambda);
        let beta_sq = state.beta * state.beta;
        let s = cfg.s;

        // The loss Hessian is dominated by V everywhere, so a quadratic upper model
        // around θ̂ decides whether the whole ball lies inside E.
        let (_, grad_hat) = eval.value_and_gradient(&state.theta_hat);
        let reach = s + state.theta_hat.norm();
        let ball_only = grad_hat.norm() * reach + 0.5 * max_eigenvalue(&state.v.entries) * reach * reach
            <= beta_sq;

        let hat_norm = state.theta_hat.norm();
        let candidate = if hat_norm <= s {
            state.theta_hat.clone()
        } else {
            &state.theta_hat * (s / hat_norm)
        };
        let slack = (eval.value(&candidate) - state.loss_at_hat) - beta_sq;
        let anchor = (ball_only || slack <= 0.0).then_some((candidate, slack.min(0.0)));
        Ok(Self {
            eval,
            s,
            d: history.dim(),
            theta_hat: state.theta_hat.clone(),
            loss_at_hat: state.loss_at_hat,
            beta_sq,
            anchor,
            ball_only,
            options,
        })
    }

    /// Positive outside `E_t`; same arithmetic as [`in_set_e`].
    fn excess(&self, loss_value: f64) -> f64 {
        (loss_value - self.loss_at_hat) - self.beta_sq
    }

    pub fn is_ball_only(&self) -> bool {
        self.ball_only
    }

    pub fn contains(&mut self, theta: &Vector) -> bool {
        if !in_parameter_ball(theta, self.s) {
            return false;
        }
        if self.ball_only {
            return true;
        }
        let value = self.eval.value(theta);
        self.excess(value) <= 0.0
    }

    /// Pulls `point` back along the segment towards the anchor until it is feasible.
    ///
    /// The ball part is solved in closed form. For `E`, the constraint restricted to the
    /// segment is convex, so Newton steps from the infeasible side approach the boundary
    /// from outside and a final chord to the anchor lands inside.
    pub fn restore(&mut self, point: &Vector) -> Vector {
        let Some((anchor, anchor_slack)) = self.anchor.clone() else {
            return self.theta_hat.clone();
        };
        let w = point - &anchor;
        let ww = w.norm_squared();
        if ww == 0.0 {
            return anchor;
        }
        let mut hi = 1.0_f64;
        if point.norm() > self.s {
            let aw = anchor.dot(&w);
            let room = (self.s * self.s - anchor.norm_squared()).max(0.0);
            hi = ((-aw + (aw * aw + ww * room).sqrt()) / ww).clamp(0.0, 1.0);
        }
        let at = |s: f64| &anchor + &w * s;
        if self.ball_only {
            return clamp_to_ball(at(hi), self.s);
        }
        let tol = 1e-10 * self.beta_sq.max(1.0);
        let (mut value, mut grad) = self.eval.value_and_gradient(&at(hi));
        let mut phi = self.excess(value);
        if phi <= 0.0 {
            return clamp_to_ball(at(hi), self.s);
        }
        for _ in 0..8 {
            let slope = grad.dot(&w);
            if phi <= tol || slope <= 0.0 {
                break;
            }
            let next = hi - phi / slope;
            if !(next > 0.0 && next < hi) {
                break;
            }
            hi = next;
            (value, grad) = self.eval.value_and_gradient(&at(hi));
            phi = self.excess(value);
            if phi <= 0.0 {
                return clamp_to_ball(at(hi), self.s);
            }
        }
        // Chord between (0, anchor_slack) and (hi, phi): by convexity its root is feasible.
        let mut s = hi * (-anchor_slack) / (phi - anchor_slack);
        for _ in 0..60 {
            let p = at(s);
            let value = self.eval.value(&p);
            if self.excess(value) <= 0.0 {
                return clamp_to_ball(p, self.s);
            }
            s *= 0.5;
        }
        anchor
    }

    fn active_normals(&mut self, theta: &Vector) -> Vec<Vector> {
        let mut normals = Vec::with_capacity(2);
        if theta.norm() >= self.s * (1.0 - 1e-9) {
            normals.push(theta.clone());
        }
        if !self.ball_only {
            let (value, grad) = self.eval.value_and_gradient(theta);
            if self.excess(value) >= -1e-6 * self.beta_sq.max(1.0) {
                normals.push(grad);
            }
        }
        normals
    }

    /// Projected ascent of `objective` from a feasible `start`.
    pub fn ascend<F>(&mut self, objective: &mut F, start: Vector) -> (f64, Vector)
    where
        F: FnMut(&Vector) -> (f64, Vector),
    {
        let mut theta = start;
        let (mut value, mut grad) = objective(&theta);
        let mut step = self.options.initial_step;
        let mut normals = self.active_normals(&theta);
        for _ in 0..self.options.max_iter {
            let mut dir = grad.clone();
            for _ in 0..2 {
                for n in &normals {
                    let nn = n.norm_squared();
                    let out = dir.dot(n);
                    if nn > 0.0 && out > 0.0 {
                        dir.axpy(-out / nn, n, 1.0);
                    }
                }
            }
            let mut norm = dir.norm();
            if norm <= 1e-12 * grad.norm().max(1e-300) {
                // Stuck in a corner of the projected cone; fall back to the raw gradient
                // and let restoration do the work.
                dir = grad.clone();
                norm = dir.norm();
            }
            if norm == 0.0 || !norm.is_finite() {
                break;
            }
            let candidate = self.restore(&(&theta + &dir * (step / norm)));
            let (cv, cg) = objective(&candidate);
            if cv > value {
                theta = candidate;
                value = cv;
                grad = cg;
                normals = self.active_normals(&theta);
            } else {
                step *= 0.5;
                if step < self.options.min_step {
                    break;
                }
            }
        }
        (value, theta)
    }

    /// Best of `θ̂` and a multi-start ascent from the anchor and `restarts − 1` random
    /// feasible perturbations of it.
    pub fn maximize<F, R>(&mut self, objective: &mut F, rng: &mut R) -> (f64, Vector)
    where
        F: FnMut(&Vector) -> (f64, Vector),
        R: Rng + ?Sized,
    {
        let mut best = (objective(&self.theta_hat).0, self.theta_hat.clone());
        let Some((anchor, _)) = self.anchor.clone() else {
            return best;
        };
        for k in 0..self.options.restarts {
            let start = if k == 0 {
                anchor.clone()
            } else {
                let jitter = sample_ball(rng, self.d, 2.0 * self.s);
                self.restore(&(&anchor + jitter))
            };
            let (value, theta) = self.ascend(objective, start);
            if value > best.0 {
                best = (value, theta);
            }
        }
        best
    }

    pub fn maximize_revenue<R: Rng + ?Sized>(
        &mut self,
        assortment: &AssortmentContexts,
        rng: &mut R,
    ) -> Result<OptimisticValue> {
        assortment.check_dim(self.d)?;
        let mut objective = revenue_objective(assortment);
        let (value, theta) = self.maximize(&mut objective, rng);
        Ok(OptimisticValue { value, theta })
    }

    /// Upper bound on `xᵀθ` over `E_t ∩ Θ`.
    ///
    /// Exact (`S‖x‖`) when only the ball binds. Otherwise the linear objective is maximized
    /// by the same ascent, which reaches the global maximum of this concave problem up to
    /// the step tolerance, and [`UTILITY_BOUND_SLACK`] is added. Without a feasible anchor
    /// there is no bound.
    pub fn utility_upper_bound(&mut self, x: &Vector) -> f64 {
        let ball = self.s * x.norm();
        if self.ball_only {
            return ball;
        }
        let Some((anchor, _)) = self.anchor.clone() else {
            return f64::INFINITY;
        };
        let mut objective = |theta: &Vector| (x.dot(theta), x.clone());
        let (value, _) = self.ascend(&mut objective, anchor);
        (value + UTILITY_BOUND_SLACK).min(ball)
    }
}

/// Safety margin added to ascent-computed utility bounds.
pub const UTILITY_BOUND_SLACK: f64 = 1e-3;

fn clamp_to_ball(p: Vector, s: f64) -> Vector {
    let n = p.norm();
    if n > s {
        p * (s / n)
    } else {
        p
    }
}

/// `θ ↦ (Σ_i p_i μ_i(θ), Σ_i μ_i (p_i − revenue) x_i)`.
pub fn revenue_objective(assortment: &AssortmentContexts) -> impl FnMut(&Vector) -> (f64, Vector) + '_ {
    move |theta: &Vector| {
        let utilities: Vec<f64> = assortment
            .items()
            .iter()
            .map(|it| it.context.as_vector().dot(theta))
            .collect();
        let (probs, _) = softmax_with_outside(&utilities);
        let revenue: f64 = assortment
            .items()
            .iter()
            .zip(&probs)
            .map(|(it, p)| it.price * p)
            .sum();
        let mut grad = Vector::zeros(theta.len());
        for (it, p) in assortment.items().iter().zip(&probs) {
            grad.axpy(p * (it.price - revenue), it.context.as_vector(), 1.0);
        }
        (revenue, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{expected_revenue, AssortmentItem, ContextVector};
    use crate::rng::seeded_rng;

    fn cfg(d: usize, k: usize, s: f64, delta: f64, lambda: f64) -> ConfidenceConfig {
        ConfidenceConfig {
            delta,
            lambda,
            s,
            l_const: DEFAULT_L_CONST,
            d,
            k,
            horizon: 100,
        }
    }

    #[test]
    fn gamma_hand_values() {
        // 0.5 + 2(0.5 ln 1.25 + ln 10) + 2 ln 2
        let c = cfg(1, 1, 1.0, 0.1, 1.0);
        let hand = 0.5 + 2.0 * (0.5 * 1.25f64.ln() + 10f64.ln()) + 2.0 * 2f64.ln();
        assert!((gamma_radius(&c, 1) - hand).abs() < 1e-12);
        assert!((gamma_radius(&c, 1) - 6.714608).abs() < 1e-6);
        let c1 = cfg(1, 1, 1.0, 1.0, 1.0);
        assert!((gamma_radius(&c1, 1) - 2.109437).abs() < 1e-6);
    }

    #[test]
    fn gamma_is_monotone_in_t() {
        let c = ConfidenceConfig::new(3, 4, 1000, 2.0, 0.05).unwrap();
        let mut prev = gamma_radius(&c, 1);
        for t in 2..=10_000 {
            let g = gamma_radius(&c, t);
            assert!(g >= prev);
            prev = g;
        }
    }

    #[test]
    fn beta_values() {
        assert_eq!(beta_radius(0.0, 3.0), 0.0);
        assert_eq!(beta_radius(1.0, 1.0), 2.0);
        let g = 6.714608;
        assert!((beta_radius(g, 1.0) - (g + g * g)).abs() < 1e-12);
        assert!((beta_radius(g, 1.0) - 51.800569).abs() < 1e-6);
    }

    #[test]
    fn default_lambda_rule() {
        assert_eq!(default_lambda(1, 1, 1), 1.0);
        assert!((default_lambda(2, 2, 3000) - 2.0 * 6000f64.ln()).abs() < 1e-12);
        assert!(ConfidenceConfig::new(2, 2, 10, 1.0, 0.0).is_err());
        assert!(ConfidenceConfig::new(2, 2, 10, 1.0, 1.5).is_err());
    }

    #[test]
    fn theta_hat_is_in_both_sets() {
        let mut h = History::new(2);
        let x = ContextVector::new(vec![0.6, 0.3]).unwrap();
        let a = AssortmentContexts::new(vec![AssortmentItem::new(0, x)]).unwrap();
        h.push(a.clone(), 1).unwrap();
        h.push(a, 0).unwrap();
        let c = cfg(2, 1, 3.0, 0.1, 1.0);
        let st = ConfidenceState::build(&h, &c).unwrap();
        assert!((st.beta - beta_radius(st.gamma, 1.0)).abs() < 1e-12);
        assert!(in_set_c(&st.theta_hat, &h, &c, &st).unwrap());
        assert!(in_set_e(&st.theta_hat, &h, &c, &st).unwrap());
        let far = Vector::from_vec(vec![3.1, 0.0]);
        assert!(!in_set_c(&far, &h, &c, &st).unwrap());
        assert!(!in_set_e(&far, &h, &c, &st).unwrap());
    }

    #[test]
    fn empty_history_e_is_a_ball() {
        let h = History::new(2);
        for s in [0.5, 10.0] {
            let c = cfg(2, 1, s, 0.1, 4.0);
            let st = ConfidenceState::build(&h, &c).unwrap();
            let radius = s.min(st.beta * (2.0 / c.lambda).sqrt());
            let dir = Vector::from_vec(vec![0.6, -0.8]);
            assert!(in_set_e(&(&dir * (radius - 1e-6)), &h, &c, &st).unwrap());
            assert!(!in_set_e(&(&dir * (radius + 1e-6)), &h, &c, &st).unwrap());
        }
    }

    #[test]
    fn binding_ball_gives_sigmoid_of_s() {
        let h = History::new(1);
        let s = 0.7;
        let c = cfg(1, 1, s, 0.1, 1.0);
        let st = ConfidenceState::build(&h, &c).unwrap();
        let a = AssortmentContexts::new(vec![AssortmentItem::new(
            0,
            ContextVector::new(vec![1.0]).unwrap(),
        )])
        .unwrap();
        let mut rng = seeded_rng(1);
        let got = max_revenue_over_e(&a, &h, &c, &st, 5, &mut rng).unwrap();
        let sigma = 1.0 / (1.0 + (-s).exp());
        assert!((got.value - sigma).abs() < 1e-9, "{} vs {}", got.value, sigma);
    }

    #[test]
    fn restoration_lands_inside_e() {
        let mut h = History::new(2);
        let mut rng = seeded_rng(9);
        let pool: Vec<ContextVector> = (0..4)
            .map(|_| ContextVector::from_vector(sample_ball(&mut rng, 2, 1.0)).unwrap())
            .collect();
        for r in 0..300 {
            let a = AssortmentContexts::with_unit_prices(&[r % 4, (r + 1) % 4], &pool).unwrap();
            h.push(a, r % 3).unwrap();
        }
        let c = cfg(2, 2, 5.0, 0.1, 20.0);
        let st = ConfidenceState::build(&h, &c).unwrap();
        let mut region = FeasibleRegion::new(&h, &c, &st, AscentOptions::default()).unwrap();
        assert!(!region.is_ball_only());
        for _ in 0..200 {
            let p = &st.theta_hat + sample_ball(&mut rng, 2, 8.0);
            let q = region.restore(&p);
            assert!(in_set_e(&q, &h, &c, &st).unwrap());
            if region.contains(&p) {
                assert_eq!(p, q);
            }
        }
    }

    #[test]
    fn optimistic_value_dominates_theta_hat() {
        let mut h = History::new(2);
        let x0 = ContextVector::new(vec![0.9, 0.1]).unwrap();
        let x1 = ContextVector::new(vec![-0.2, 0.7]).unwrap();
        let a = AssortmentContexts::with_unit_prices(&[0, 1], &[x0, x1]).unwrap();
        for r in 0..50 {
            h.push(a.clone(), r % 3).unwrap();
        }
        let c = cfg(2, 2, 2.0, 0.1, 1.0);
        let st = ConfidenceState::build(&h, &c).unwrap();
        let mut rng = seeded_rng(4);
        let got = max_revenue_over_e(&a, &h, &c, &st, 5, &mut rng).unwrap();
        assert!(got.value >= expected_revenue(&a, &st.theta_hat).unwrap());
        assert!(in_set_e(&got.theta, &h, &c, &st).unwrap());
        assert!((expected_revenue(&a, &got.theta).unwrap() - got.value).abs() < 1e-12);
    }
}
