//! Experiment loop, regret accounting, diagnostics, persistence and aggregation.
//!
//! A run is a pure function of `(ExperimentConfig, seed)`: the instance, the context
//! stream, the policy's randomness and the environment's draws all come from streams
//! derived from the seed. Diagnostics that read `θ*` are computed here, never inside
//! a policy.

pub mod checks;

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::choice::{expected_revenue, softmax_with_outside, AssortmentContexts};
use crate::confidence::{
    default_lambda, in_set_c, in_set_e, AscentOptions, ConfidenceConfig, ConfidenceState,
    DEFAULT_L_CONST,
};
use crate::error::{Error, Result};
use crate::estimator::{fit_mle, matrix_h, matrix_v, History, DEFAULT_MLE_MAX_ITER, DEFAULT_MLE_TOL};
use crate::json;
use crate::linalg::{DesignMatrix, Vector};
use crate::policy::{
    bonus_ucb_step, cb_mnl_step, oracle_assortment, random_assortment, Decision, PolicyKind,
    SetKind,
};
use crate::rng::{stream, stream_rng};
use crate::simulator::{
    environment_step, estimate_kappa, make_instance, serve_contexts, ContextMode, Instance,
    InstanceConfig, KappaEstimate,
};

pub const LIBRARY_VERSION: &str = concat!("cbmnl ", env!("CARGO_PKG_VERSION"));

pub const CSV_HEADER: &str =
    "t,assortment,outcome,opt_value,oracle_value,inst_regret,cum_regret,gamma,beta,covered,dev_H,dev_bound";

fn default_l_const() -> f64 {
    DEFAULT_L_CONST
}

fn default_m_const() -> f64 {
    0.25
}

fn default_restarts() -> usize {
    AscentOptions::default().restarts
}

fn default_kappa_grid() -> usize {
    1000
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: InstanceConfig,
    pub policy: PolicyKind,
    /// Number of rounds `T`.
    #[serde(alias = "T")]
    pub horizon: usize,
    pub delta: f64,
    /// Overrides `max(1, d ln(KT))`.
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_l_const")]
    pub l_const: f64,
    /// Bound on `|μ̈|` used by the additive-bonus policy.
    #[serde(default = "default_m_const")]
    pub m_const: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_kappa_grid")]
    pub kappa_grid: usize,
    /// Draw the instance from this seed instead of each run's seed.
    #[serde(default)]
    pub instance_seed: Option<u64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults for everything but the instance, the policy and the horizon.
    pub fn new(instance: InstanceConfig, policy: PolicyKind, horizon: usize) -> Self {
        Self {
            instance,
            policy,
            horizon,
            delta: 0.1,
            lambda: None,
            l_const: default_l_const(),
            m_const: default_m_const(),
            restarts: default_restarts(),
            kappa_grid: default_kappa_grid(),
            instance_seed: None,
            seeds: default_seeds(),
            output_dir: None,
        }
    }

    /// `horizon = 0` is allowed and produces an empty trace.
    pub fn validate(&self) -> Result<()> {
        self.instance.validate()?;
        self.confidence_config()?;
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        if !(self.m_const > 0.0 && self.m_const.is_finite()) {
            return Err(Error::InvalidConfig(format!("M must be positive, got {}", self.m_const)));
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
            .unwrap_or_else(|| default_lambda(self.instance.d, self.instance.k, self.horizon))
    }

    pub fn confidence_config(&self) -> Result<ConfidenceConfig> {
        let cfg = ConfidenceConfig {
            delta: self.delta,
            lambda: self.lambda(),
            s: self.instance.s,
            l_const: self.l_const,
            d: self.instance.d,
            k: self.instance.k,
            horizon: self.horizon,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn ascent_options(&self) -> AscentOptions {
        AscentOptions {
            restarts: self.restarts,
            ..AscentOptions::default()
        }
    }

    /// Equal up to the seed list and output location.
    pub fn same_experiment(&self, other: &Self) -> bool {
        let strip = |c: &Self| Self {
            seeds: Vec::new(),
            output_dir: None,
            ..c.clone()
        };
        strip(self) == strip(other)
    }
}

/// One round of a run; mirrors a CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub t: usize,
    pub assortment: Vec<usize>,
    pub outcome: usize,
    pub opt_value: f64,
    pub oracle_value: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub gamma: f64,
    pub beta: f64,
    /// `θ* ∈ C_t` for the `C_t` and bonus policies, `θ* ∈ E_t` otherwise.
    pub covered: bool,
    /// `‖θ_t − θ*‖_{H_t(θ*)}`.
    pub dev_h: f64,
    /// `2(1 + 2S)γ_t`.
    pub dev_bound: f64,
}

/// Terminal summary of a run; written as the run's metadata JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub library_version: String,
    pub config: ExperimentConfig,
    pub seed: u64,
    pub instance: Instance,
    pub lambda: f64,
    pub kappa: KappaEstimate,
    pub rounds: usize,
    pub total_regret: f64,
    pub covered_all: bool,
    pub covered_rounds: usize,
    pub mle_nonconverged_rounds: usize,
    pub wall_time_secs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunLog {
    pub summary: RunSummary,
    pub records: Vec<RunRecord>,
}

pub fn run_experiment(cfg: &ExperimentConfig, seed: u64) -> Result<RunLog> {
    Ok(run_experiment_with_history(cfg, seed)?.0)
}

/// Runs one seed and also returns the final interaction history.
pub fn run_experiment_with_history(cfg: &ExperimentConfig, seed: u64) -> Result<(RunLog, History)> {
    let started = Instant::now();
    cfg.validate()?;
    let instance = make_instance(&cfg.instance, cfg.instance_seed.unwrap_or(seed))?;
    let ccfg = cfg.confidence_config()?;
    let kappa = estimate_kappa(&instance, cfg.kappa_grid)?;
    let theta_star = instance.theta_star();
    let prices = instance.prices.clone();
    let lambda = ccfg.lambda;
    let s = ccfg.s;

    let mut history = History::new(instance.d);
    let mut env_rng = stream_rng(seed, &[stream::ENVIRONMENT]);
    let mut policy_rng = stream_rng(seed, &[stream::POLICY]);
    let mut oracle_cache = None;
    let mut records = Vec::with_capacity(cfg.horizon);
    let mut cum_regret = 0.0;
    let mut mle_nonconverged = 0;

    for t in 1..=cfg.horizon {
        let contexts = serve_contexts(&instance, t)?;
        let (oracle_set, oracle_value) = match (&oracle_cache, instance.context_mode) {
            (Some(cached), ContextMode::FixedPool) => Clone::clone(cached),
            _ => {
                let fresh = oracle_assortment(&contexts, &prices, &theta_star, instance.k)?;
                oracle_cache = Some(fresh.clone());
                fresh
            }
        };

        let fit = fit_mle(&history, lambda, DEFAULT_MLE_TOL, DEFAULT_MLE_MAX_ITER)?;
        if !fit.converged {
            mle_nonconverged += 1;
        }
        let state = ConfidenceState::from_fit(&history, &ccfg, fit)?;

        let decision = match cfg.policy {
            PolicyKind::CbMnlE | PolicyKind::CbMnlC => {
                let kind = if cfg.policy == PolicyKind::CbMnlE {
                    SetKind::E
                } else {
                    SetKind::C
                };
                cb_mnl_step(
                    &contexts,
                    &prices,
                    &history,
                    &ccfg,
                    &state,
                    kind,
                    cfg.ascent_options(),
                    &mut policy_rng,
                )?
            }
            PolicyKind::BonusUcb => {
                bonus_ucb_step(&contexts, &prices, &ccfg, &state, kappa.value, cfg.m_const)?
            }
            PolicyKind::Oracle => Decision {
                assortment: AssortmentContexts::select(&oracle_set, &contexts, &prices)?,
                theta_used: theta_star.clone(),
                optimistic_value: oracle_value,
            },
            PolicyKind::Random => {
                let indices = random_assortment(instance.n, instance.k, &mut policy_rng)?;
                let assortment = AssortmentContexts::select(&indices, &contexts, &prices)?;
                let value = expected_revenue(&assortment, &state.theta_hat)?;
                Decision {
                    assortment,
                    theta_used: state.theta_hat.clone(),
                    optimistic_value: value,
                }
            }
        };

        let inst_regret = oracle_value - expected_revenue(&decision.assortment, &theta_star)?;
        cum_regret += inst_regret;
        let covered = match cfg.policy {
            PolicyKind::CbMnlC | PolicyKind::BonusUcb => {
                in_set_c(&theta_star, &history, &ccfg, &state)?
            }
            _ => in_set_e(&theta_star, &history, &ccfg, &state)?,
        };
        let h_star = matrix_h(&history, &theta_star, lambda)?;
        let dev_h = h_star.norm(&(&decision.theta_used - &theta_star));

        let outcome = environment_step(&instance, &decision.assortment, &mut env_rng)?;
        records.push(RunRecord {
            t,
            assortment: decision.assortment.indices(),
            outcome,
            opt_value: decision.optimistic_value,
            oracle_value,
            inst_regret,
            cum_regret,
            gamma: state.gamma,
            beta: state.beta,
            covered,
            dev_h,
            dev_bound: 2.0 * (1.0 + 2.0 * s) * state.gamma,
        });
        history.push(decision.assortment, outcome)?;
    }

    let covered_rounds = records.iter().filter(|r| r.covered).count();
    let summary = RunSummary {
        library_version: LIBRARY_VERSION.to_string(),
        config: cfg.clone(),
        seed,
        instance,
        lambda,
        kappa,
        rounds: records.len(),
        total_regret: cum_regret,
        covered_all: covered_rounds == records.len(),
        covered_rounds,
        mle_nonconverged_rounds: mle_nonconverged,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok((RunLog { summary, records }, history))
}

/// Runs every seed, at most `jobs` at a time; results keep the order of `seeds`.
pub fn run_many(cfg: &ExperimentConfig, seeds: &[u64], jobs: usize) -> Result<Vec<RunLog>> {
    if jobs <= 1 {
        return seeds.iter().map(|&s| run_experiment(cfg, s)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {jobs} workers: {e}")))?;
    pool.install(|| seeds.par_iter().map(|&s| run_experiment(cfg, s)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticalReport {
    /// `Σ_t min{Σ_i ‖x̃_{t,i}‖²_{J_t⁻¹}, 1}` with `x̃ = √μ̇(θ*) x`.
    pub potential_sum: f64,
    /// `2 ln(det J_{T+1} / λ^d)`.
    pub potential_bound: f64,
    pub log_det_v: f64,
    /// `d ln(λ + TK/d)`.
    pub log_det_v_bound: f64,
}

impl EllipticalReport {
    const TOL: f64 = 1e-9;

    pub fn potential_holds(&self) -> bool {
        self.potential_sum <= self.potential_bound + Self::TOL * self.potential_bound.abs().max(1.0)
    }

    pub fn determinant_holds(&self) -> bool {
        self.log_det_v <= self.log_det_v_bound + Self::TOL * self.log_det_v_bound.abs().max(1.0)
    }
}

/// Evaluates both sides of the generalized elliptical potential and determinant-trace
/// inequalities on a completed run.
pub fn elliptical_potential_check(log: &RunLog, history: &History) -> Result<EllipticalReport> {
    elliptical_potential(
        history,
        &log.summary.instance.theta_star(),
        log.summary.lambda,
        log.summary.instance.k,
    )
}

pub fn elliptical_potential(
    history: &History,
    theta_star: &Vector,
    lambda: f64,
    k: usize,
) -> Result<EllipticalReport> {
    let d = history.dim();
    let mut j = DesignMatrix::regularizer(d, lambda);
    let mut potential_sum = 0.0;
    for round in history.rounds() {
        let a = &round.assortment;
        if a.is_empty() {
            continue;
        }
        let (probs, _) = softmax_with_outside(&a.utilities(theta_star)?);
        let factor = j.factor()?;
        let mut step = 0.0;
        for (item, p) in a.items().iter().zip(&probs) {
            let w = p * (1.0 - p);
            step += w * factor.inverse_norm_sq(item.context.as_vector());
        }
        potential_sum += step.min(1.0);
        for (item, p) in a.items().iter().zip(&probs) {
            j.add_rank_one(p * (1.0 - p), item.context.as_vector());
        }
    }
    let df = d as f64;
    let rounds = history.len() as f64;
    Ok(EllipticalReport {
        potential_sum,
        potential_bound: 2.0 * (j.log_det()? - df * lambda.ln()),
        log_det_v: matrix_v(history, lambda).log_det()?,
        log_det_v_bound: df * (lambda + rounds * k as f64 / df).ln(),
    })
}

// ---------------------------------------------------------------------------------
// Persistence

fn join_indices(indices: &[usize]) -> String {
    indices
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

pub fn write_csv<W: Write>(records: &[RunRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            join_indices(&r.assortment),
            r.outcome,
            json::real(r.opt_value),
            json::real(r.oracle_value),
            json::real(r.inst_regret),
            json::real(r.cum_regret),
            json::real(r.gamma),
            json::real(r.beta),
            r.covered,
            json::real(r.dev_h),
            json::real(r.dev_bound),
        )?;
    }
    out.flush()
}

pub fn csv_string(records: &[RunRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

fn parse_row(line: &str, lineno: usize) -> Result<RunRecord> {
    let bad = |what: &str| Error::InvalidConfig(format!("CSV line {lineno}: bad {what}"));
    let cols: Vec<&str> = line.split(',').collect();
    if cols.len() != 12 {
        return Err(bad("column count"));
    }
    let real = |i: usize, name: &str| cols[i].parse::<f64>().map_err(|_| bad(name));
    let assortment = if cols[1].is_empty() {
        Vec::new()
    } else {
        cols[1]
            .split(';')
            .map(|s| s.parse::<usize>().map_err(|_| bad("assortment")))
            .collect::<Result<_>>()?
    };
    Ok(RunRecord {
        t: cols[0].parse().map_err(|_| bad("t"))?,
        assortment,
        outcome: cols[2].parse().map_err(|_| bad("outcome"))?,
        opt_value: real(3, "opt_value")?,
        oracle_value: real(4, "oracle_value")?,
        inst_regret: real(5, "inst_regret")?,
        cum_regret: real(6, "cum_regret")?,
        gamma: real(7, "gamma")?,
        beta: real(8, "beta")?,
        covered: cols[9].parse().map_err(|_| bad("covered"))?,
        dev_h: real(10, "dev_H")?,
        dev_bound: real(11, "dev_bound")?,
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim_end() != CSV_HEADER {
        return Err(Error::InvalidConfig(format!(
            "{} does not start with the run CSV header",
            path.display()
        )));
    }
    lines
        .enumerate()
        .filter_map(|(i, line)| match line {
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(parse_row(l.trim_end(), i + 2)),
            Err(e) => Some(Err(e.into())),
        })
        .collect()
}

/// File stem for one run's outputs.
pub fn run_stem(policy: PolicyKind, seed: u64) -> String {
    format!("{policy}_seed{seed}")
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`; returns both paths.
pub fn write_run(log: &RunLog, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let stem = run_stem(log.summary.config.policy, log.summary.seed);
    let csv = dir.join(format!("{stem}.csv"));
    let meta = dir.join(format!("{stem}.json"));
    write_csv(&log.records, BufWriter::new(fs::File::create(&csv)?))?;
    json::write_file(&meta, &log.summary)?;
    Ok((csv, meta))
}

/// Loads a run from its metadata JSON and the CSV next to it.
pub fn read_run(meta_path: &Path) -> Result<RunLog> {
    let summary: RunSummary = json::read_file(meta_path)?;
    let records = read_csv(&meta_path.with_extension("csv"))?;
    Ok(RunLog { summary, records })
}

// ---------------------------------------------------------------------------------
// Aggregation

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub policy: PolicyKind,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub mean_cum_regret: Vec<f64>,
    /// Standard error of the mean: sample standard deviation over `√runs`.
    pub se_cum_regret: Vec<f64>,
    /// Fraction of runs covered in every round.
    pub coverage_rate: f64,
    /// Least-squares slope of `ln(mean regret)` on `ln t` over `t ∈ [⌈T/2⌉, T]`.
    pub loglog_slope: Option<f64>,
    pub mean_total_regret: f64,
}

pub fn summarize_runs(logs: &[RunLog]) -> Result<Aggregate> {
    let first = logs
        .first()
        .ok_or_else(|| Error::Aggregation("no runs to summarize".into()))?;
    let cfg = &first.summary.config;
    let len = first.records.len();
    for log in &logs[1..] {
        if !log.summary.config.same_experiment(cfg) {
            return Err(Error::Aggregation(format!(
                "seed {} was run with a different configuration than seed {}",
                log.summary.seed, first.summary.seed
            )));
        }
        if log.records.len() != len {
            return Err(Error::Aggregation(format!(
                "seed {} has {} rounds, seed {} has {len}",
                log.summary.seed,
                log.records.len(),
                first.summary.seed
            )));
        }
    }
    let n = logs.len() as f64;
    let mut mean = vec![0.0; len];
    let mut se = vec![0.0; len];
    for t in 0..len {
        let values: Vec<f64> = logs.iter().map(|l| l.records[t].cum_regret).collect();
        let m = values.iter().sum::<f64>() / n;
        mean[t] = m;
        if logs.len() > 1 {
            let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
            se[t] = (var / n).sqrt();
        }
    }
    let covered = logs.iter().filter(|l| l.records.iter().all(|r| r.covered)).count();
    Ok(Aggregate {
        policy: cfg.policy,
        horizon: len,
        seeds: logs.iter().map(|l| l.summary.seed).collect(),
        mean_total_regret: mean.last().copied().unwrap_or(0.0),
        loglog_slope: loglog_slope(&mean),
        mean_cum_regret: mean,
        se_cum_regret: se,
        coverage_rate: covered as f64 / n,
    })
}

/// Slope of `ln y_t` against `ln t` (rounds numbered from 1) over the second half.
/// `None` when fewer than two points or a nonpositive value is in range.
pub fn loglog_slope(series: &[f64]) -> Option<f64> {
    let horizon = series.len();
    let start = horizon.div_ceil(2).max(1);
    let points: Vec<(f64, f64)> = (start..=horizon)
        .map(|t| (t as f64, series[t - 1]))
        .collect();
    if points.len() < 2 || points.iter().any(|&(_, y)| !(y > 0.0)) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(t, y)| (t.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{AssortmentItem, ContextVector};

    pub(crate) fn small_config(policy: PolicyKind, horizon: usize) -> ExperimentConfig {
        let instance = InstanceConfig {
            d: 2,
            n: 4,
            k: 2,
            s: 1.0,
            s_true: 1.0,
            context_mode: ContextMode::FixedPool,
            prices: None,
        };
        ExperimentConfig {
            kappa_grid: 50,
            ..ExperimentConfig::new(instance, policy, horizon)
        }
    }

    fn synthetic(seed: u64, slope: f64, cfg: &ExperimentConfig) -> RunLog {
        let base = run_experiment(cfg, 0).unwrap();
        let records = (1..=4)
            .map(|t| RunRecord {
                t,
                cum_regret: slope * t as f64,
                ..base.records[0].clone()
            })
            .collect();
        let mut summary = base.summary;
        summary.seed = seed;
        RunLog { summary, records }
    }

    #[test]
    fn empty_horizon_gives_empty_trace() {
        let log = run_experiment(&small_config(PolicyKind::CbMnlE, 0), 3).unwrap();
        assert!(log.records.is_empty());
        assert_eq!(log.summary.total_regret, 0.0);
        assert!(log.summary.covered_all);
    }

    #[test]
    fn oracle_has_zero_regret() {
        let log = run_experiment(&small_config(PolicyKind::Oracle, 50), 1).unwrap();
        assert!(log.records.iter().all(|r| r.cum_regret == 0.0 && r.dev_h == 0.0));
    }

    #[test]
    fn cumulative_regret_accounting() {
        for policy in PolicyKind::ALL {
            let log = run_experiment(&small_config(policy, 30), 2).unwrap();
            let mut sum = 0.0;
            for r in &log.records {
                assert!(r.inst_regret >= -1e-9, "{policy}: {}", r.inst_regret);
                sum += r.inst_regret;
                assert!((sum - r.cum_regret).abs() < 1e-9);
            }
            assert!((log.summary.total_regret - sum).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_round_trip_and_determinism() {
        let cfg = small_config(PolicyKind::CbMnlE, 20);
        let a = run_experiment(&cfg, 9).unwrap();
        let b = run_experiment(&cfg, 9).unwrap();
        let text = csv_string(&a.records);
        assert_eq!(text, csv_string(&b.records));
        assert!(text.starts_with(CSV_HEADER));
        let dir = tempfile::tempdir().unwrap();
        let (csv, meta) = write_run(&a, dir.path()).unwrap();
        assert_eq!(read_csv(&csv).unwrap(), a.records);
        let back = read_run(&meta).unwrap();
        assert_eq!(back.summary, a.summary);
    }

    #[test]
    fn summaries() {
        let cfg = small_config(PolicyKind::Random, 4);
        let one = synthetic(0, 1.0, &cfg);
        let agg = summarize_runs(std::slice::from_ref(&one)).unwrap();
        assert_eq!(agg.mean_cum_regret, vec![1.0, 2.0, 3.0, 4.0]);
        assert!(agg.se_cum_regret.iter().all(|&s| s == 0.0));

        let twin = summarize_runs(&[one.clone(), synthetic(1, 1.0, &cfg)]).unwrap();
        assert!(twin.se_cum_regret.iter().all(|&s| s == 0.0));

        let spread = summarize_runs(&[one.clone(), synthetic(1, 3.0, &cfg)]).unwrap();
        for t in 1..=4 {
            let tf = t as f64;
            assert!((spread.mean_cum_regret[t - 1] - 2.0 * tf).abs() < 1e-12);
            assert!((spread.se_cum_regret[t - 1] - tf).abs() < 1e-12);
        }
        assert!((spread.loglog_slope.unwrap() - 1.0).abs() < 1e-12);

        let other = synthetic(2, 1.0, &ExperimentConfig { delta: 0.2, ..cfg });
        assert!(matches!(summarize_runs(&[one, other]), Err(Error::Aggregation(_))));
        assert!(summarize_runs(&[]).is_err());
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let series: Vec<f64> = (1..=100).map(|t| (t as f64).powf(0.5)).collect();
        assert!((loglog_slope(&series).unwrap() - 0.5).abs() < 1e-12);
        assert!(loglog_slope(&[0.0, 0.0, 0.0]).is_none());
    }

    #[test]
    fn elliptical_boundary_case() {
        let h = History::new(1);
        let empty = elliptical_potential(&h, &Vector::zeros(1), 1.0, 1).unwrap();
        assert_eq!(empty.potential_sum, 0.0);
        assert!(empty.potential_holds() && empty.determinant_holds());

        let mut h = History::new(1);
        let a = AssortmentContexts::new(vec![AssortmentItem::new(0, ContextVector::new(vec![1.0]).unwrap())])
            .unwrap();
        h.push(a, 0).unwrap();
        let r = elliptical_potential(&h, &Vector::zeros(1), 1.0, 1).unwrap();
        assert!((r.log_det_v - 2f64.ln()).abs() < 1e-12);
        assert!((r.log_det_v_bound - 2f64.ln()).abs() < 1e-12);
        assert!(r.determinant_holds() && r.potential_holds());
        // One step of 0.25 against 2 ln 1.25.
        assert!((r.potential_sum - 0.25).abs() < 1e-12);
        assert!((r.potential_bound - 2.0 * 1.25f64.ln()).abs() < 1e-12);
    }
}
