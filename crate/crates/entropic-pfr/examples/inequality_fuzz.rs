//! Seeded fuzzing of the inequality registry: every registered bound is
//! evaluated as a slack (pass means slack >= -tol) on random exact-rational
//! laws.
//!
//! ```sh
//! cargo run --release --example inequality_fuzz
//! ```

use entropic_pfr::fuzz::{run_fuzz, FuzzConfig};

fn main() -> entropic_pfr::Result<()> {
    let cfg = FuzzConfig {
        trials: 300,
        seed: 7,
        ..Default::default()
    };
    let t0 = std::time::Instant::now();
    let report = run_fuzz(&cfg)?;
    println!(
        "{} checks across {} trials in {:?}",
        report.checks_run,
        report.trials,
        t0.elapsed()
    );
    println!("worst value per registry entry (slacks minimized, residuals maximized):");
    for (name, worst) in &report.worst {
        println!("  {name:<10} {worst:+.3e}");
    }
    if report.passed() {
        println!("all checks passed at tolerance {:.0e}", report.tolerance);
    } else {
        println!("{} counterexamples; first:", report.failures.len());
        println!(
            "{}",
            serde_json::to_string_pretty(&report.failures[0]).unwrap()
        );
    }
    Ok(())
}
