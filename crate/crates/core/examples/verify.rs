//! Run every randomized verification suite with a handful of trials.
//!
//! Run with `cargo run --release --example verify [trials]`.

use holotor::cli::suites::{run_suite, SUITES};

fn main() {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let mut all = true;
    for name in SUITES {
        let report = run_suite(name, trials, 0).expect("known suite");
        println!("{name} ({} trials): {}", report.trials, if report.passed { "pass" } else { "FAIL" });
        for check in &report.checks {
            println!("  {:<24} max {:.2e}  threshold {:.0e}", check.name, check.max, check.threshold);
        }
        all &= report.passed;
    }
    std::process::exit(if all { 0 } else { 1 });
}
