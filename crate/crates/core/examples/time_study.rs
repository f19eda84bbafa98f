//! Temporal convergence of implicit Euler for data smooth in time and for
//! `sqrt(t)`-modulated coefficients (Hölder-1/2 in time).
//!
//! cargo run --release --example time_study

use levyfd::harness::{run_convergence_time, StudyConfig};

const ROUGH: &str = r#"
[problem]
gamma = 0.5
profile = { kind = "poly-bump", radius = 1.0, power = 6 }
time_factor = { kind = "one" }

[problem.coefficients.a]
space = { kind = "capped-quadratic", scale = 1.0, cap = 1.0 }
time = { kind = "sqrt", offset = 0.0, scale = 1.0 }

[problem.coefficients.b]
space = { kind = "sine", offset = 0.0, amp = 1.0, freq = 2.0 }
time = { kind = "sqrt", offset = 0.0, scale = 1.0 }
"#;

fn main() -> levyfd::Result<()> {
    for (name, cfg) in [
        ("smooth", StudyConfig::default()),
        ("rough", StudyConfig::from_toml(ROUGH)?),
    ] {
        let r = run_convergence_time(&cfg)?;
        println!("{name} (gamma = {}):", cfg.problem.gamma);
        for l in &r.levels {
            println!(
                "  tau={:<10.6} sup {:.3e}  l2 {:.3e}",
                l.parameter(),
                l.sup_err,
                l.l2_err
            );
        }
        println!(
            "  slope {:.3} vs threshold {} -> {}",
            r.sup_fit.slope().unwrap_or(f64::NAN),
            r.threshold,
            if r.passed { "PASS" } else { "FAIL" }
        );
    }
    Ok(())
}
