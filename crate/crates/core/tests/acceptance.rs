//! Acceptance battery: one line per criterion, nonzero exit if any fails.
//!
//! Tolerances live in `sketchlab::verify` as named constants; the seed is
//! fixed here so reruns reproduce the same numbers.

use std::process::ExitCode;

use sketchlab::verify::{run_criterion, VerifyOptions};

const SEED: u64 = 7;

fn main() -> ExitCode {
    let opts = VerifyOptions { seed: SEED, trials: None };
    let only: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    println!("acceptance criteria (seed {SEED})");
    for id in 1..=16u8 {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let check = run_criterion(id, &opts);
        println!("{check}");
        failed += usize::from(!check.passed);
    }
    println!("{failed} failed");
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
