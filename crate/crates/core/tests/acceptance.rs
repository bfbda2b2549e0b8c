//! Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero if any
//! criterion fails.
//!
//! `CBMNL_JOBS` sets the worker count (default: available parallelism).

use std::process::ExitCode;
use std::time::Instant;

use cbmnl::harness::checks;

fn main() -> ExitCode {
    // `cargo test` passes libtest flags such as `--list`; there is nothing to list.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let jobs = std::env::var("CBMNL_JOBS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let started = Instant::now();
    println!("acceptance suite ({jobs} workers)");
    let outcomes = checks::run_all(jobs, |o| println!("{}", o.line()));
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!(
        "{} of {} criteria passed in {:.1} s; failed: {:?}",
        outcomes.len() - failed.len(),
        outcomes.len(),
        started.elapsed().as_secs_f64(),
        failed
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
