//! Structural checks of the discrete operators with their worst-case witnesses.
//!
//! cargo run --release --example operator_checks

use levyfd::harness::{run_operator_checks, StudyConfig};

fn main() -> levyfd::Result<()> {
    let report = run_operator_checks(&StudyConfig::default())?;
    for p in &report.properties {
        println!(
            "{:<22} {}  worst {:.3e} (threshold {:.1e})  {:.2}s",
            p.name,
            if p.passed { "PASS" } else { "FAIL" },
            p.worst,
            p.threshold,
            p.runtime_s
        );
        println!("    {}", p.witness);
    }
    Ok(())
}
