//! Acceptance checks: one function per criterion, each returning an [`Outcome`].
//!
//! The reference instance is `d = 2, N = 8, K = 2`, fixed pool, `S = S_true = 1`,
//! `δ = 0.1`. Criteria 4, 6, 7 and 10 share one batch of seeded runs.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::{
    csv_string, elliptical_potential_check, run_experiment, run_experiment_with_history,
    summarize_runs, EllipticalReport, ExperimentConfig, RunLog,
};
use crate::choice::{
    diag_derivative, diag_second_derivative, sample_choice, AssortmentContexts, ChoiceDistribution,
    ContextVector,
};
use crate::confidence::{default_lambda, in_set_c, in_set_e, ConfidenceConfig, ConfidenceState};
use crate::error::{Error, Result};
use crate::estimator::{fit_mle, matrix_g, matrix_h, History, DEFAULT_MLE_MAX_ITER, DEFAULT_MLE_TOL};
use crate::linalg::{min_eigenvalue, sample_ball, Vector};
use crate::policy::PolicyKind;
use crate::rng::stream_rng;
use crate::simulator::{ContextMode, InstanceConfig};

/// Result of one acceptance criterion.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    fn new(id: u8, name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            id,
            name,
            passed,
            detail,
        }
    }

    fn from_result(id: u8, name: &'static str, result: Result<(bool, String)>) -> Self {
        match result {
            Ok((passed, detail)) => Self::new(id, name, passed, detail),
            Err(e) => Self::new(id, name, false, format!("error: {e}")),
        }
    }

    /// `PASS  4 coverage: ...`
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("{tag} {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

// Seed namespaces, so that criteria never share random draws.
const SEED_DERIVATIVES: u64 = 0xD1;
const SEED_MLE: u64 = 0xD3;
const SEED_INCLUSION: u64 = 0xD5;
const SEED_ORDERING: u64 = 0xD8;

pub const COVERAGE_RUNS: u64 = 200;
pub const COVERAGE_HORIZON: usize = 500;
pub const COVERAGE_MIN_RATE: f64 = 0.85;
pub const REGRET_SEEDS: u64 = 20;
pub const REGRET_HORIZON: usize = 3000;
pub const REGRET_MAX_SLOPE: f64 = 0.75;
pub const REGRET_MAX_RATIO: f64 = 0.6;
pub const ORDERING_TOL: f64 = 1e-9;

pub fn acceptance_instance() -> InstanceConfig {
    InstanceConfig {
        d: 2,
        n: 8,
        k: 2,
        s: 1.0,
        s_true: 1.0,
        context_mode: ContextMode::FixedPool,
        prices: None,
    }
}

pub fn acceptance_config(policy: PolicyKind, horizon: usize) -> ExperimentConfig {
    ExperimentConfig::new(acceptance_instance(), policy, horizon)
}

fn in_pool<T, F>(jobs: usize, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(f))
}

fn random_context<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ContextVector {
    ContextVector::from_vector(sample_ball(rng, d, 1.0)).expect("ball sample has norm at most 1")
}

fn random_pool<R: Rng + ?Sized>(rng: &mut R, d: usize, n: usize) -> Vec<ContextVector> {
    (0..n).map(|_| random_context(rng, d)).collect()
}

fn random_subset<R: Rng + ?Sized>(rng: &mut R, n: usize, size: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    all.truncate(size);
    all.sort_unstable();
    all
}

/// Plays `rounds` uniformly random assortments of size `1..=k` against `theta`.
fn random_history<R: Rng + ?Sized>(
    rng: &mut R,
    pool: &[ContextVector],
    k: usize,
    theta: &Vector,
    rounds: usize,
) -> Result<History> {
    let mut history = History::new(theta.len());
    for _ in 0..rounds {
        let size = rng.random_range(1..=k);
        let indices = random_subset(rng, pool.len(), size);
        let a = AssortmentContexts::with_unit_prices(&indices, pool)?;
        let u = a.utilities(theta)?;
        let outcome = sample_choice(&ChoiceDistribution::from_utilities(&u), rng);
        history.push(a, outcome)?;
    }
    Ok(history)
}

/// Purchase probability of item `i` written out directly from the utilities.
fn mnl_prob(utilities: &[f64], i: usize) -> f64 {
    let partition: f64 = 1.0 + utilities.iter().map(|u| u.exp()).sum::<f64>();
    utilities[i].exp() / partition
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Criterion 1: `μ̇_i` agrees with a central difference in `u_i`.
pub fn derivative_identities(draws: usize) -> Outcome {
    const H: f64 = 1e-5;
    let started = Instant::now();
    let result = (|| {
        let mut rng = stream_rng(SEED_DERIVATIVES, &[1]);
        let mut worst: f64 = 0.0;
        let mut failures = 0;
        for _ in 0..draws {
            let d = rng.random_range(1..=10);
            let k = rng.random_range(1..=5);
            let pool = random_pool(&mut rng, d, k);
            let theta = sample_ball(&mut rng, d, 3.0);
            let indices: Vec<usize> = (0..k).collect();
            let a = AssortmentContexts::with_unit_prices(&indices, &pool)?;
            let i = rng.random_range(0..k);
            let analytic = diag_derivative(&a, &theta, i)?;
            let mut u = a.utilities(&theta)?;
            let u0 = u[i];
            u[i] = u0 + H;
            let up = mnl_prob(&u, i);
            u[i] = u0 - H;
            let down = mnl_prob(&u, i);
            let numeric = (up - down) / (2.0 * H);
            let rel = (analytic - numeric).abs() / numeric.abs();
            worst = worst.max(rel);
            if !(rel < 1e-6) {
                failures += 1;
            }
        }
        let secs = started.elapsed().as_secs_f64();
        Ok((
            failures == 0 && secs < 5.0,
            format!("{draws} draws, {failures} above 1e-6, worst relative error {worst:.2e}, {secs:.2} s"),
        ))
    })();
    Outcome::from_result(1, "derivative identities", result)
}

/// Criterion 2: `|μ̈_i| ≤ μ̇_i`.
pub fn self_concordance(draws: usize) -> Outcome {
    let result = (|| {
        let mut rng = stream_rng(SEED_DERIVATIVES, &[2]);
        let mut violations = 0;
        let mut tightest = f64::INFINITY;
        for _ in 0..draws {
            let d = rng.random_range(1..=10);
            let k = rng.random_range(1..=5);
            let pool = random_pool(&mut rng, d, k);
            let radius = rng.random_range(0.0..10.0);
            let theta = sample_ball(&mut rng, d, radius);
            let indices: Vec<usize> = (0..k).collect();
            let a = AssortmentContexts::with_unit_prices(&indices, &pool)?;
            for i in 0..k {
                let first = diag_derivative(&a, &theta, i)?;
                let second = diag_second_derivative(&a, &theta, i)?;
                tightest = tightest.min(first - second.abs());
                if second.abs() > first {
                    violations += 1;
                }
            }
        }
        Ok((
            violations == 0,
            format!("{draws} draws, {violations} violations, min slack {tightest:.3e}"),
        ))
    })();
    Outcome::from_result(2, "self-concordance", result)
}

/// Gradient of the negative penalized log-likelihood, summed round by round.
fn direct_score(history: &History, theta: &Vector, lambda: f64) -> Result<Vector> {
    let mut grad = theta * lambda;
    for round in history.rounds() {
        let a = &round.assortment;
        let u = a.utilities(theta)?;
        for (i, item) in a.items().iter().enumerate() {
            let mut w = mnl_prob(&u, i);
            if round.outcome == i + 1 {
                w -= 1.0;
            }
            grad.axpy(w, item.context.as_vector(), 1.0);
        }
    }
    Ok(grad)
}

/// Criterion 3: the MLE is stationary and its error shrinks with more data.
pub fn mle_consistency(histories: usize, seeds: u64, jobs: usize) -> Outcome {
    const CHECKPOINTS: [usize; 3] = [500, 1500, 5000];
    let started = Instant::now();
    let result = (|| {
        let mut rng = stream_rng(SEED_MLE, &[1]);
        let mut worst_score: f64 = 0.0;
        for _ in 0..histories {
            let d = rng.random_range(1..=5);
            let k = rng.random_range(1..=3);
            let n = rng.random_range(k..=10);
            let pool = random_pool(&mut rng, d, n);
            let theta_star = sample_ball(&mut rng, d, 2.0);
            let rounds = rng.random_range(1..=300);
            let history = random_history(&mut rng, &pool, k, &theta_star, rounds)?;
            let lambda = default_lambda(d, k, rounds);
            let fit = fit_mle(&history, lambda, DEFAULT_MLE_TOL, DEFAULT_MLE_MAX_ITER)?;
            worst_score = worst_score.max(direct_score(&history, &fit.theta_hat, lambda)?.norm());
        }

        let horizon = *CHECKPOINTS.last().expect("nonempty");
        let cfg = acceptance_config(PolicyKind::Random, horizon);
        let lambda = cfg.lambda();
        let errors: Vec<Vec<f64>> = in_pool(jobs, || {
            (0..seeds)
                .into_par_iter()
                .map(|seed| -> Result<Vec<f64>> {
                    let (log, history) = run_experiment_with_history(&cfg, seed)?;
                    let theta_star = log.summary.instance.theta_star();
                    CHECKPOINTS
                        .iter()
                        .map(|&len| {
                            let mut prefix = History::new(history.dim());
                            for r in &history.rounds()[..len] {
                                prefix.push(r.assortment.clone(), r.outcome)?;
                            }
                            let fit = fit_mle(&prefix, lambda, DEFAULT_MLE_TOL, DEFAULT_MLE_MAX_ITER)?;
                            Ok((fit.theta_hat - &theta_star).norm())
                        })
                        .collect()
                })
                .collect::<Result<_>>()
        })??;
        let medians: Vec<f64> = (0..CHECKPOINTS.len())
            .map(|c| median(&mut errors.iter().map(|e| e[c]).collect::<Vec<_>>()))
            .collect();
        let decreasing = medians.windows(2).all(|w| w[1] < w[0]);
        let secs = started.elapsed().as_secs_f64();
        Ok((
            worst_score <= 1e-8 && decreasing && secs < 120.0,
            format!(
                "max score norm {worst_score:.2e} over {histories} histories; median error at {CHECKPOINTS:?} = [{:.4}, {:.4}, {:.4}] over {seeds} seeds; {secs:.1} s",
                medians[0], medians[1], medians[2]
            ),
        ))
    })();
    Outcome::from_result(3, "MLE stationarity and consistency", result)
}

/// Seeded runs of the E-set policy with their elliptical-potential reports.
pub struct CoverageBatch {
    pub config: ExperimentConfig,
    pub logs: Vec<RunLog>,
    pub reports: Vec<EllipticalReport>,
    pub wall_secs: f64,
}

pub fn coverage_batch(runs: u64, horizon: usize, jobs: usize) -> Result<CoverageBatch> {
    let started = Instant::now();
    let config = acceptance_config(PolicyKind::CbMnlE, horizon);
    let pairs: Vec<(RunLog, EllipticalReport)> = in_pool(jobs, || {
        (0..runs)
            .into_par_iter()
            .map(|seed| {
                let (log, history) = run_experiment_with_history(&config, seed)?;
                let report = elliptical_potential_check(&log, &history)?;
                Ok((log, report))
            })
            .collect::<Result<_>>()
    })??;
    let (logs, reports) = pairs.into_iter().unzip();
    Ok(CoverageBatch {
        config,
        logs,
        reports,
        wall_secs: started.elapsed().as_secs_f64(),
    })
}

/// Criterion 4: `θ* ∈ E_t` for every round in at least 85% of the runs.
pub fn coverage(batch: &CoverageBatch) -> Outcome {
    let result = summarize_runs(&batch.logs).map(|agg| {
        let first_miss: Vec<usize> = batch
            .logs
            .iter()
            .filter_map(|l| l.records.iter().find(|r| !r.covered).map(|r| r.t))
            .collect();
        (
            agg.coverage_rate >= COVERAGE_MIN_RATE,
            format!(
                "{} of {} runs covered in every round (rate {:.3}, need >= {COVERAGE_MIN_RATE}); first misses at t = {:?}; {:.1} s",
                batch.logs.len() - first_miss.len(),
                batch.logs.len(),
                agg.coverage_rate,
                first_miss,
                batch.wall_secs
            ),
        )
    });
    Outcome::from_result(4, "coverage", result)
}

/// Criterion 5: sampled members of `C_t` all lie in `E_t`.
pub fn set_inclusion(snapshots: usize, members_per_snapshot: usize) -> Outcome {
    const MAX_PROPOSALS: usize = 1_000_000;
    const LENGTHS: [usize; 5] = [5, 25, 100, 300, 1000];
    let result = (|| {
        let inst = acceptance_instance();
        let mut members = 0;
        let mut violations = 0;
        let mut proposals = 0;
        for snap in 0..snapshots {
            let mut rng = stream_rng(SEED_INCLUSION, &[snap as u64]);
            let pool = random_pool(&mut rng, inst.d, inst.n);
            let theta_star = sample_ball(&mut rng, inst.d, inst.s_true);
            let len = LENGTHS[snap % LENGTHS.len()];
            let history = random_history(&mut rng, &pool, inst.k, &theta_star, len)?;
            let cfg = ConfidenceConfig::new(inst.d, inst.k, COVERAGE_HORIZON, inst.s, 0.1)?;
            let state = ConfidenceState::build(&history, &cfg)?;
            let mut found = 0;
            let mut tries = 0;
            // Uniform proposals over Θ ⊇ C_t give uniform members of C_t.
            while found < members_per_snapshot && tries < MAX_PROPOSALS {
                tries += 1;
                let theta = sample_ball(&mut rng, inst.d, inst.s);
                if in_set_c(&theta, &history, &cfg, &state)? {
                    found += 1;
                    if !in_set_e(&theta, &history, &cfg, &state)? {
                        violations += 1;
                    }
                }
            }
            members += found;
            proposals += tries;
        }
        let wanted = snapshots * members_per_snapshot;
        Ok((
            violations == 0 && members == wanted,
            format!(
                "{members} of {wanted} members of C_t from {proposals} proposals over {snapshots} snapshots, {violations} outside E_t"
            ),
        ))
    })();
    Outcome::from_result(5, "C_t inside E_t", result)
}

/// Criterion 6: in covered rounds, `‖θ_t − θ*‖_{H(θ*)} ≤ 2(1 + 2S)γ_t`.
pub fn deviation_bound(batch: &CoverageBatch) -> Outcome {
    let mut covered = 0;
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for r in batch.logs.iter().flat_map(|l| &l.records).filter(|r| r.covered) {
        covered += 1;
        max_ratio = max_ratio.max(r.dev_h / r.dev_bound);
        if r.dev_h > r.dev_bound {
            violations += 1;
        }
    }
    Outcome::new(
        6,
        "deviation bound",
        violations == 0,
        format!("{covered} covered rounds, {violations} violations, max dev/bound {max_ratio:.3}"),
    )
}

/// Criterion 7: elliptical potential and determinant-trace inequalities per run.
pub fn elliptical(batch: &CoverageBatch) -> Outcome {
    let potential = batch.reports.iter().filter(|r| !r.potential_holds()).count();
    let determinant = batch.reports.iter().filter(|r| !r.determinant_holds()).count();
    let min_slack = |f: fn(&EllipticalReport) -> f64| {
        batch.reports.iter().map(f).fold(f64::INFINITY, f64::min)
    };
    Outcome::new(
        7,
        "elliptical potential and determinant-trace",
        potential == 0 && determinant == 0,
        format!(
            "{} runs; potential fails {potential}, determinant fails {determinant}; min slacks {:.3} and {:.3}",
            batch.reports.len(),
            min_slack(|r| r.potential_bound - r.potential_sum),
            min_slack(|r| r.log_det_v_bound - r.log_det_v),
        ),
    )
}

/// Smallest eigenvalue of `G(θ₁, θ₂) − H(θ)/(1 + 2S)` over `θ ∈ {θ₁, θ₂}`, for one
/// random configuration with assortments of size at most `max_k`.
fn ordering_margin<R: Rng + ?Sized>(rng: &mut R, max_k: usize) -> Result<f64> {
    let d = rng.random_range(1..=4);
    let k = rng.random_range(1..=max_k);
    let n = rng.random_range(k..=8);
    let s = rng.random_range(0.5..3.0);
    let lambda = rng.random_range(1.0..5.0);
    let pool = random_pool(rng, d, n);
    let theta_star = sample_ball(rng, d, s);
    let rounds = rng.random_range(1..=50);
    let history = random_history(rng, &pool, k, &theta_star, rounds)?;
    let theta1 = sample_ball(rng, d, s);
    let theta2 = sample_ball(rng, d, s);
    let g = matrix_g(&history, &theta1, &theta2, lambda)?;
    let scale = 1.0 / (1.0 + 2.0 * s);
    let mut margin = f64::INFINITY;
    for theta in [&theta1, &theta2] {
        let h = matrix_h(&history, theta, lambda)?;
        margin = margin.min(min_eigenvalue(&(&g.entries - &h.entries * scale)));
    }
    Ok(margin)
}

/// Criterion 8: `G(θ₁, θ₂) ⪰ H(θ_j)/(1 + 2S)` on random configurations with up to four
/// items per assortment. The single-item case is reported alongside.
pub fn psd_ordering(configurations: usize) -> Outcome {
    let result = (|| {
        let count = |max_k: usize, key: u64| -> Result<(usize, f64)> {
            let mut rng = stream_rng(SEED_ORDERING, &[key]);
            let mut bad = 0;
            let mut worst = f64::INFINITY;
            for _ in 0..configurations {
                let m = ordering_margin(&mut rng, max_k)?;
                worst = worst.min(m);
                if m < -ORDERING_TOL {
                    bad += 1;
                }
            }
            Ok((bad, worst))
        };
        let (bad, worst) = count(4, 4)?;
        let (bad_single, worst_single) = count(1, 1)?;
        Ok((
            bad == 0,
            format!(
                "K <= 4: {bad} of {configurations} configurations below -{ORDERING_TOL:e} (min eigenvalue {worst:.4e}); K = 1: {bad_single} of {configurations} (min eigenvalue {worst_single:.4e})"
            ),
        ))
    })();
    Outcome::from_result(8, "G versus H ordering", result)
}

/// Runs of the regret comparison, kept for the determinism check.
pub struct RegretRuns {
    pub e_set: Vec<RunLog>,
    pub random: Vec<RunLog>,
    pub wall_secs: f64,
}

pub fn regret_runs(seeds: u64, horizon: usize, jobs: usize) -> Result<RegretRuns> {
    let started = Instant::now();
    let seeds: Vec<u64> = (0..seeds).collect();
    let run = |policy| {
        let cfg = acceptance_config(policy, horizon);
        in_pool(jobs, || {
            seeds
                .par_iter()
                .map(|&s| run_experiment(&cfg, s))
                .collect::<Result<Vec<_>>>()
        })?
    };
    let e_set = run(PolicyKind::CbMnlE)?;
    let random = run(PolicyKind::Random)?;
    Ok(RegretRuns {
        e_set,
        random,
        wall_secs: started.elapsed().as_secs_f64(),
    })
}

/// Criterion 9: sublinear-looking regret that beats random play.
pub fn regret_behavior(runs: &RegretRuns) -> Outcome {
    let result = (|| {
        let e = summarize_runs(&runs.e_set)?;
        let r = summarize_runs(&runs.random)?;
        let slope = e.loglog_slope.unwrap_or(f64::INFINITY);
        let ratio = e.mean_total_regret / r.mean_total_regret;
        Ok((
            slope <= REGRET_MAX_SLOPE && ratio <= REGRET_MAX_RATIO && runs.wall_secs < 900.0,
            format!(
                "slope {slope:.3} (need <= {REGRET_MAX_SLOPE}); mean regret {:.2} vs random {:.2}, ratio {ratio:.3} (need <= {REGRET_MAX_RATIO}); {:.1} s",
                e.mean_total_regret, r.mean_total_regret, runs.wall_secs
            ),
        ))
    })();
    Outcome::from_result(9, "regret behavior", result)
}

/// Criterion 10: re-running a seed reproduces its CSV byte for byte.
pub fn determinism(previous: &[&RunLog]) -> Outcome {
    let result = (|| {
        let mut mismatched = Vec::new();
        for log in previous {
            let again = run_experiment(&log.summary.config, log.summary.seed)?;
            if csv_string(&again.records) != csv_string(&log.records) {
                mismatched.push(format!("{}:{}", log.summary.config.policy, log.summary.seed));
            }
        }
        Ok((
            mismatched.is_empty(),
            format!("{} reruns, mismatched {:?}", previous.len(), mismatched),
        ))
    })();
    Outcome::from_result(10, "determinism", result)
}

/// Every criterion at full size, in order. `report` sees each outcome as it lands.
pub fn run_all(jobs: usize, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    let mut out = Vec::new();
    let mut push = |o: Outcome| {
        report(&o);
        out.push(o);
    };
    push(derivative_identities(10_000));
    push(self_concordance(10_000));
    push(mle_consistency(100, 20, jobs));

    let batch = coverage_batch(COVERAGE_RUNS, COVERAGE_HORIZON, jobs);
    match &batch {
        Ok(b) => push(coverage(b)),
        Err(e) => push(Outcome::new(4, "coverage", false, format!("error: {e}"))),
    }
    push(set_inclusion(50, 20));
    match &batch {
        Ok(b) => {
            push(deviation_bound(b));
            push(elliptical(b));
        }
        Err(e) => {
            push(Outcome::new(6, "deviation bound", false, format!("error: {e}")));
            push(Outcome::new(7, "elliptical potential and determinant-trace", false, format!("error: {e}")));
        }
    }
    push(psd_ordering(200));

    let regret = regret_runs(REGRET_SEEDS, REGRET_HORIZON, jobs);
    match &regret {
        Ok(r) => push(regret_behavior(r)),
        Err(e) => push(Outcome::new(9, "regret behavior", false, format!("error: {e}"))),
    }

    let mut previous = Vec::new();
    if let Ok(b) = &batch {
        previous.extend(b.logs.first());
    }
    if let Ok(r) = &regret {
        previous.extend(r.e_set.first());
        previous.extend(r.random.first());
    }
    if previous.is_empty() {
        push(Outcome::new(10, "determinism", false, "no completed runs to repeat".into()));
    } else {
        push(determinism(&previous));
    }
    out
}
