//! Command-line front end: run experiments, run the acceptance checks, aggregate run
//! logs and generate or inspect instances.

use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cbmnl::harness::checks::{self, acceptance_config};
use cbmnl::harness::{read_run, run_many, summarize_runs, write_run, ExperimentConfig, RunLog};
use cbmnl::json;
use cbmnl::policy::{oracle_assortment, PolicyKind};
use cbmnl::simulator::{estimate_kappa, make_instance, serve_contexts, Instance};

#[derive(Parser)]
#[command(name = "cbmnl", version, about = "Contextual MNL bandit simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration over a range of seeds and write per-run CSV and JSON.
    Run(Common),
    /// Run the acceptance checks and print one PASS/FAIL line per criterion.
    Check {
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Aggregate run logs (metadata JSON files, or directories holding them).
    Summarize {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Write one aggregate JSON per policy here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate instances from a configuration, or inspect an instance file.
    Instance {
        #[command(flatten)]
        common: Common,
        /// Instance JSON to inspect instead of generating.
        #[arg(long, conflicts_with = "config")]
        inspect: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (snake_case JSON). Defaults to the acceptance instance.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed range `a..b` (end excluded), `a..=b`, or a single seed.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<Range<u64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_policy)]
    policy: Option<PolicyKind>,
    /// Horizon.
    #[arg(long = "T")]
    horizon: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn parse_seeds(text: &str) -> Result<Range<u64>, String> {
    let num = |s: &str| {
        s.trim()
            .parse::<u64>()
            .map_err(|_| format!("`{s}` is not a seed"))
    };
    let range = if let Some((a, b)) = text.split_once("..=") {
        num(a)?..num(b)?.checked_add(1).ok_or("seed range overflows")?
    } else if let Some((a, b)) = text.split_once("..") {
        num(a)?..num(b)?
    } else {
        let s = num(text)?;
        s..s + 1
    };
    if range.is_empty() {
        return Err(format!("seed range `{text}` is empty"));
    }
    Ok(range)
}

fn parse_policy(text: &str) -> Result<PolicyKind, String> {
    text.parse().map_err(|e| format!("{e}"))
}

impl Common {
    /// The configuration file (or the default) with command-line overrides applied.
    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => json::read_file::<ExperimentConfig>(path)
                .with_context(|| format!("reading config {}", path.display()))?,
            None => acceptance_config(PolicyKind::CbMnlE, 500),
        };
        if let Some(range) = &self.seeds {
            cfg.seeds = range.clone().collect();
        }
        if let Some(policy) = self.policy {
            cfg.policy = policy;
        }
        if let Some(t) = self.horizon {
            cfg.horizon = t;
        }
        if let Some(delta) = self.delta {
            cfg.delta = delta;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(common) => cmd_run(&common),
        Command::Check { jobs } => Ok(cmd_check(jobs)),
        Command::Summarize { paths, out } => cmd_summarize(&paths, out.as_deref()),
        Command::Instance { common, inspect } => match inspect {
            Some(path) => cmd_inspect(&path),
            None => cmd_instance(&common),
        },
    }
}

fn cmd_run(common: &Common) -> Result<ExitCode> {
    let cfg = common.experiment()?;
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("runs"));
    let logs = run_many(&cfg, &cfg.seeds, common.jobs)?;
    for log in &logs {
        let (csv, _) = write_run(log, &dir)?;
        let s = &log.summary;
        println!(
            "seed {:>4}  regret {:>10.4}  covered {:>4}/{:<4}  kappa {:>8.3}  {:.2} s  -> {}",
            s.seed,
            s.total_regret,
            s.covered_rounds,
            s.rounds,
            s.kappa.value,
            s.wall_time_secs,
            csv.display()
        );
    }
    print_aggregate(&logs)?;
    Ok(ExitCode::SUCCESS)
}

fn print_aggregate(logs: &[RunLog]) -> Result<()> {
    let agg = summarize_runs(logs)?;
    let slope = agg
        .loglog_slope
        .map_or_else(|| "n/a".to_string(), |s| format!("{s:.3}"));
    let se = agg.se_cum_regret.last().copied().unwrap_or(0.0);
    println!(
        "{}: {} runs, T = {}, mean regret {:.4} (se {:.4}), log-log slope {slope}, coverage {:.3}",
        agg.policy,
        agg.seeds.len(),
        agg.horizon,
        agg.mean_total_regret,
        se,
        agg.coverage_rate
    );
    Ok(())
}

fn cmd_check(jobs: usize) -> ExitCode {
    let outcomes = checks::run_all(jobs, |o| println!("{}", o.line()));
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

/// Run metadata files named directly or found one level inside directories.
fn metadata_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(path)?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<_, _>>()?;
            found.retain(|p| {
                p.extension().is_some_and(|e| e == "json") && p.with_extension("csv").is_file()
            });
            found.sort();
            files.extend(found);
        } else {
            files.push(path.clone());
        }
    }
    if files.is_empty() {
        bail!("no run logs found");
    }
    Ok(files)
}

fn cmd_summarize(paths: &[PathBuf], out: Option<&Path>) -> Result<ExitCode> {
    let mut groups: Vec<Vec<RunLog>> = Vec::new();
    for path in metadata_files(paths)? {
        let log = read_run(&path).with_context(|| format!("reading {}", path.display()))?;
        match groups
            .iter_mut()
            .find(|g| g[0].summary.config.same_experiment(&log.summary.config))
        {
            Some(group) => group.push(log),
            None => groups.push(vec![log]),
        }
    }
    for (i, group) in groups.iter().enumerate() {
        print_aggregate(group)?;
        if let Some(dir) = out {
            fs::create_dir_all(dir)?;
            let agg = summarize_runs(group)?;
            let path = dir.join(format!("summary_{}_{i}.json", agg.policy));
            json::write_file(&path, &agg)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_instance(common: &Common) -> Result<ExitCode> {
    let cfg = common.experiment()?;
    let seeds = match cfg.instance_seed {
        Some(seed) if common.seeds.is_none() => vec![seed],
        _ => cfg.seeds.clone(),
    };
    for seed in seeds {
        let instance = make_instance(&cfg.instance, seed)?;
        match &common.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                let path = dir.join(format!("instance_seed{seed}.json"));
                json::write_file(&path, &instance)?;
                println!("{}", path.display());
            }
            None => print!("{}", json::to_string(&instance)?),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_inspect(path: &Path) -> Result<ExitCode> {
    let instance: Instance =
        json::read_file(path).with_context(|| format!("reading instance {}", path.display()))?;
    instance.validate()?;
    let theta = instance.theta_star();
    let kappa = estimate_kappa(&instance, 1000)?;
    println!(
        "d = {}, N = {}, K = {}, S = {}, S_true = {}, mode = {:?}, seed = {}",
        instance.d, instance.n, instance.k, instance.s, instance.s_true, instance.context_mode, instance.seed
    );
    println!("|theta*| = {:.6}, kappa estimate = {:.6}", theta.norm(), kappa.value);
    let contexts = serve_contexts(&instance, 1)?;
    let (set, value) = oracle_assortment(&contexts, &instance.prices, &theta, instance.k)?;
    println!("round 1: oracle assortment {set:?}, expected revenue {value:.6}");
    for (i, x) in contexts.iter().enumerate() {
        println!(
            "  item {i}: utility {:+.6}, price {}",
            x.utility(&theta),
            instance.prices[i]
        );
    }
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges() {
        assert_eq!(parse_seeds("0..3").unwrap(), 0..3);
        assert_eq!(parse_seeds("2..=4").unwrap(), 2..5);
        assert_eq!(parse_seeds("7").unwrap(), 7..8);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("a..b").is_err());
    }
}
