//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.
//!
//! Runs without the libtest harness so the summary is always printed:
//! `cargo test --test acceptance`.

use std::time::{Duration, Instant};

use num_rational::Ratio;

use levyfd::coefficients::CoefficientSet;
use levyfd::grid::{GridSpec, Spacing};
use levyfd::harness::checks::{
    check_collapsed_stencil, check_consistency, check_negative_semidefinite, check_no_blowup, check_theta_closure,
};
use levyfd::harness::{run_convergence_space, run_convergence_time, StudyConfig};
use levyfd::integrator::{implicit_euler_solve, semidiscrete_solve, ImplicitOptions, RkOptions, TimeGrid};
use levyfd::levy::{JumpDensity, LevyMeasure, DEFAULT_TAIL_CAP};
use levyfd::operators::theta;
use levyfd::problem::ProblemSpec;
use levyfd::reference::Shape;

struct Outcome {
    passed: bool,
    summary: String,
}

fn outcome(passed: bool, summary: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        summary: summary.into(),
    }
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn config(text: &str) -> StudyConfig {
    StudyConfig::from_toml(text).expect("valid config")
}

fn negative_semidefinite() -> Outcome {
    let cfg = StudyConfig::default();
    let p = check_negative_semidefinite(&cfg).expect("check runs");
    let forms = p.details["quadratic_forms"].as_u64().unwrap_or(0);
    // 100 samples x 3 families x 3 spacings, each with phi and its difference.
    let enough = forms >= 100 * 3 * 3;
    outcome(
        p.passed && enough,
        format!(
            "max (J^h phi, phi)/|phi|^2 = {:.3e} <= {:.0e} over {forms} forms; worst at {}",
            p.worst, p.threshold, p.witness
        ),
    )
}

fn collapsed_stencil() -> Outcome {
    let p = check_collapsed_stencil(&StudyConfig::default()).expect("check runs");
    outcome(
        p.passed,
        format!(
            "max sup difference {:.3e} <= {:.0e}; worst at {}",
            p.worst, p.threshold, p.witness
        ),
    )
}

fn theta_closure() -> Outcome {
    let p = check_theta_closure(&StudyConfig::default());
    // Independent oracle: the weights in exact arithmetic, against the library's floats.
    let mut float_dev: f64 = 0.0;
    let mut exact = true;
    for k in (-64i64..=64).filter(|&k| k != 0) {
        let mut sum = Ratio::from_integer(0i64);
        for l in 0..k.abs() {
            let w = Ratio::new(2 * k.abs() - 2 * l - 1, 2 * k * k);
            float_dev = float_dev.max((theta(k, l) - *w.numer() as f64 / *w.denom() as f64).abs());
            sum += w;
        }
        exact &= sum == Ratio::new(1, 2);
    }
    outcome(
        p.passed && exact && float_dev <= 1e-16,
        format!(
            "exact sums = 1/2 for |k| <= 64: {exact}; library check {}; float weights within {float_dev:.1e}",
            p.passed
        ),
    )
}

fn consistency() -> Outcome {
    let cfg = StudyConfig::default();
    let p = check_consistency(&cfg).expect("check runs");
    let r2 = p.details["fit"]["r2"].as_f64().unwrap_or(f64::NAN);
    let mut narrow = cfg.clone();
    narrow.checks.consistency_shape = Shape::CinfBump { radius: 1.0 };
    let q = check_consistency(&narrow).expect("check runs");
    let r2_narrow = q.details["fit"]["r2"].as_f64().unwrap_or(f64::NAN);
    outcome(
        p.passed,
        format!(
            "C-inf bump r=16: slope {:.3} (>= 0.9), R^2 {r2:.5} (>= 0.98); [info] r=1 bump is preasymptotic on this ladder: slope {:.3}, R^2 {r2_narrow:.3}",
            p.worst, q.worst
        ),
    )
}

fn no_blowup() -> Outcome {
    let p = check_no_blowup(&StudyConfig::default()).expect("check runs");
    let norms: Vec<String> = p.details["norms"]
        .as_array()
        .map(|a| {
            a.iter()
                .map(|v| format!("{:.4}", v[1].as_f64().unwrap_or(f64::NAN)))
                .collect()
        })
        .unwrap_or_default();
    outcome(
        p.passed,
        format!(
            "|J^h phi|_l2 = [{}], variation {:.2}% <= 10%",
            norms.join(", "),
            100.0 * p.worst
        ),
    )
}

fn fit_summary(r: &levyfd::harness::ConvergenceReport) -> String {
    let errs: Vec<String> = r.levels.iter().map(|l| format!("{:.2e}", l.sup_err)).collect();
    format!(
        "sup slope {} / l2 slope {} (>= {}); sup errors [{}]; {}",
        r.sup_fit.slope().map_or("-".into(), |s| format!("{s:.3}")),
        r.l2_fit.slope().map_or("-".into(), |s| format!("{s:.3}")),
        r.threshold,
        errs.join(", "),
        r.status
    )
}

fn spatial() -> Outcome {
    let cfg = config(include_str!("../../../configs/space.toml"));
    let r = run_convergence_space(&cfg).expect("study runs");
    let ok = r.passed && r.threshold >= 0.9 && r.levels.len() == 4;
    let mut narrow = cfg.clone();
    narrow.problem.profile = Shape::CinfBump { radius: 1.0 };
    let q = run_convergence_space(&narrow).expect("study runs");
    outcome(
        ok,
        format!(
            "C-inf bump r=4: {}; [info] r=1: sup slope {:.3}, R^2 {:.3} (coarse levels preasymptotic)",
            fit_summary(&r),
            q.sup_fit.slope().unwrap_or(f64::NAN),
            q.sup_fit.r2().unwrap_or(f64::NAN)
        ),
    )
}

fn temporal_smooth() -> Outcome {
    let cfg = config(include_str!("../../../configs/smooth-time.toml"));
    assert_eq!(cfg.time.spacing, 32);
    let r = run_convergence_time(&cfg).expect("study runs");
    outcome(r.passed && r.threshold >= 0.9, fit_summary(&r))
}

fn temporal_rough() -> Outcome {
    let cfg = config(include_str!("../../../configs/rough-time.toml"));
    let r = run_convergence_time(&cfg).expect("study runs");
    outcome(r.passed && r.threshold >= 0.2, fit_summary(&r))
}

fn bump(x: f64) -> f64 {
    (1.0 - x * x).max(0.0).powi(4)
}

fn dissipativity() -> Outcome {
    let problems: Vec<(&str, CoefficientSet, LevyMeasure)> = vec![
        (
            "a=1, c=0, power-law",
            CoefficientSet::new(|_, _| 1.0, |_, _| 0.0, |_, _| 0.0, 1.0),
            LevyMeasure::power_law(1.0, 0.5).unwrap(),
        ),
        (
            "a=0.5, c=-1, tempered",
            CoefficientSet::new(|_, _| 0.5, |_, _| 0.0, |_, _| -1.0, 1.0),
            LevyMeasure::tempered(1.0, 0.5, 1.0).unwrap(),
        ),
        (
            "a=0, c=-(1+x^2)/2 * t, compound Poisson",
            CoefficientSet::new(|_, _| 0.0, |_, _| 0.0, |t, x| -0.5 * (1.0 + x * x).min(5.0) * t, 3.0),
            LevyMeasure::compound_poisson(2.0, JumpDensity::Normal { mean: 0.2, std: 0.6 }).unwrap(),
        ),
    ];
    let pairs = [(8u32, 8usize), (16, 16), (32, 32)];
    let mut worst_growth = f64::NEG_INFINITY;
    let mut worst_residual: f64 = 0.0;
    let mut where_ = String::new();
    let mut solves = 0;
    for (name, coeffs, m) in &problems {
        for &(n, steps) in &pairs {
            let grid = GridSpec::new(Spacing::new(n).unwrap(), 3.0).unwrap();
            let k = m
                .tail_truncation_index(grid.spacing(), 1e-10, DEFAULT_TAIL_CAP)
                .unwrap();
            let p = ProblemSpec::homogeneous(coeffs.clone(), bump, 1.0);
            let tg = TimeGrid::new(1.0, steps).unwrap();
            let traj = match implicit_euler_solve(&p, grid, m, k, tg, &ImplicitOptions::default()) {
                Ok(t) => t,
                Err(e) => return outcome(false, format!("{name}, h=1/{n}: {e}")),
            };
            for w in traj.states().windows(2) {
                let growth = w[1].norm_l2() - w[0].norm_l2();
                if growth > worst_growth {
                    worst_growth = growth;
                    where_ = format!("{name}, h=1/{n}, tau=1/{steps}");
                }
            }
            for d in traj.step_diagnostics() {
                solves += 1;
                worst_residual = worst_residual.max(d.residual / (1.0 + d.rhs_norm));
            }
        }
    }
    outcome(
        worst_growth <= 1e-8 && worst_residual <= 1e-10,
        format!(
            "max per-step norm increase {worst_growth:.2e} (<= 1e-8, at {where_}); max residual/(1+|rhs|) {worst_residual:.2e} (<= 1e-10) over {solves} solves"
        ),
    )
}

fn scalar_decay() -> Outcome {
    let grid = GridSpec::new(Spacing::new(16).unwrap(), 2.0).unwrap();
    let p = ProblemSpec::homogeneous(CoefficientSet::new(|_, _| 0.0, |_, _| 0.0, |_, _| -1.0, 1.0), bump, 1.0);
    let m = LevyMeasure::zero();
    let opts = RkOptions {
        dt_fine: Some(1e-3),
        ..Default::default()
    };
    let rk = semidiscrete_solve(&p, grid, &m, 16, &opts, &[0.25, 0.5, 1.0]).expect("rk runs");
    let mut rk_err: f64 = 0.0;
    for (t, s) in rk.times().iter().zip(rk.states()) {
        for (x, v) in grid.xs().zip(s.values()) {
            rk_err = rk_err.max((v - (-t).exp() * bump(x)).abs());
        }
    }
    let tg = TimeGrid::new(1.0, 10).unwrap();
    let ie = implicit_euler_solve(&p, grid, &m, 16, tg, &ImplicitOptions::default()).expect("implicit runs");
    let mut ie_err: f64 = 0.0;
    for (i, s) in ie.states().iter().enumerate() {
        let f = (1.0 + tg.tau()).powi(-(i as i32));
        for (x, v) in grid.xs().zip(s.values()) {
            ie_err = ie_err.max((v - f * bump(x)).abs());
        }
    }
    outcome(
        rk_err <= 1e-8 && ie_err <= 1e-10,
        format!("RK4 vs e^-t: {rk_err:.2e} (<= 1e-8); implicit vs (1+tau)^-i: {ie_err:.2e} (<= 1e-10)"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            1,
            "negative semi-definiteness",
            Duration::from_secs(10),
            negative_semidefinite,
        ),
        (
            2,
            "collapsed stencil identity",
            Duration::from_secs(10),
            collapsed_stencil,
        ),
        (3, "theta-weight closure", Duration::from_secs(1), theta_closure),
        (4, "operator consistency", Duration::from_secs(60), consistency),
        (5, "no blow-up under refinement", Duration::from_secs(30), no_blowup),
        (6, "spatial convergence", Duration::from_secs(600), spatial),
        (
            7,
            "temporal convergence, smooth",
            Duration::from_secs(600),
            temporal_smooth,
        ),
        (
            8,
            "temporal convergence, rough",
            Duration::from_secs(600),
            temporal_rough,
        ),
        (
            9,
            "implicit solvability and dissipativity",
            Duration::from_secs(300),
            dissipativity,
        ),
        (10, "scalar decay oracle", Duration::from_secs(10), scalar_decay),
    ];
    let mut failures = 0;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let passed = o.passed && in_time;
        if !passed {
            failures += 1;
        }
        println!(
            "criterion {id:>2}: {} {name} [{:.2}s / {}s{}] {}",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { ", over time limit" },
            o.summary
        );
    }
    println!("acceptance: {}/10 criteria passed", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
