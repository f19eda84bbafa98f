//! Spatial convergence study on the default degenerate problem; writes
//! `report.json` and `errors.csv` under `out/space`.
//!
//! cargo run --release --example space_study

use std::path::Path;

use levyfd::harness::{run_convergence_space, StudyConfig};

fn main() -> levyfd::Result<()> {
    let mut cfg = StudyConfig::default();
    cfg.space.spacings = vec![8, 16, 32];
    let report = run_convergence_space(&cfg)?;
    for l in &report.levels {
        println!(
            "h={:<8} sup {:.3e}  l2 {:.3e}  K_max {}  ({:.2}s)",
            l.h, l.sup_err, l.l2_err, l.k_max, l.runtime_s
        );
    }
    println!("sup fit {:?}", report.sup_fit);
    println!("{}: {}", if report.passed { "PASS" } else { "FAIL" }, report.status);
    report.write_to(Path::new("out/space"))?;
    Ok(())
}
