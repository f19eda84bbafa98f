//! Structural property checks of the discrete operators, each reported with
//! its worst-case witness.

use std::time::Instant;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::StudyConfig;
use super::report::{fit_rate, RateFit};
use super::studies::thread_pool;
use crate::error::Result;
use crate::grid::{restrict, GridFunction, GridSpec, Spacing};
use crate::levy::{JumpDensity, LevyMeasure};
use crate::operators::{apply_j1, apply_j1_direct, apply_jump, theta, JumpOperator, StencilWeights};
use crate::reference::{continuous_j, Shape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub threshold: f64,
    pub witness: String,
    pub runtime_s: f64,
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub config: StudyConfig,
    pub properties: Vec<PropertyResult>,
    pub passed: bool,
}

impl CheckReport {
    pub fn property(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }
}

/// The three families exercised by the structural checks.
pub fn reference_measures() -> Vec<(&'static str, LevyMeasure)> {
    vec![
        (
            "power-law(c=1, alpha=0.5)",
            LevyMeasure::power_law(1.0, 0.5).expect("valid"),
        ),
        (
            "tempered(c=1, alpha=0.5, lambda=1)",
            LevyMeasure::tempered(1.0, 0.5, 1.0).expect("valid"),
        ),
        (
            "compound-poisson(rate=2, normal(0.2, 0.6))",
            LevyMeasure::compound_poisson(2.0, JumpDensity::Normal { mean: 0.2, std: 0.6 }).expect("valid"),
        ),
    ]
}

/// Random grid function supported in `|x| <= support`: rough (independent
/// values) or smooth (a sum of random bumps), alternating with `index`.
pub fn random_compact(grid: GridSpec, rng: &mut ChaCha8Rng, support: f64, index: usize) -> GridFunction {
    let mut g = GridFunction::zeros(grid);
    if index.is_multiple_of(2) {
        for (i, v) in g.values_mut().iter_mut().enumerate() {
            if grid.x(i).abs() <= support {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
    } else {
        let bumps: Vec<(f64, f64, f64)> = (0..4)
            .map(|_| {
                let w = rng.gen_range(0.1..0.5 * support);
                (rng.gen_range(-support + w..support - w), w, rng.gen_range(-1.0..1.0))
            })
            .collect();
        for (i, v) in g.values_mut().iter_mut().enumerate() {
            let x = grid.x(i);
            *v = bumps
                .iter()
                .map(|&(c, w, a)| {
                    let s = (x - c) / w;
                    if s.abs() < 1.0 {
                        a * (1.0 - s * s).powi(3)
                    } else {
                        0.0
                    }
                })
                .sum();
        }
    }
    g
}

fn grid_for(n: u32, radius: f64) -> Result<GridSpec> {
    GridSpec::new(Spacing::new(n)?, radius)
}

fn measures_with_config(cfg: &StudyConfig) -> Vec<(String, LevyMeasure)> {
    let mut out: Vec<(String, LevyMeasure)> = reference_measures()
        .into_iter()
        .map(|(n, m)| (n.to_string(), m))
        .collect();
    let own = &cfg.problem.measure;
    if !out.iter().any(|(_, m)| m == own) && *own != LevyMeasure::zero() {
        out.push(("configured".into(), own.clone()));
    }
    out
}

/// `(J^h φ, φ) <= tol ‖φ‖²` over random compactly supported `φ`, and the
/// same for their forward differences.
pub fn check_negative_semidefinite(cfg: &StudyConfig) -> Result<PropertyResult> {
    let start = Instant::now();
    let c = &cfg.checks;
    let mut cases = Vec::new();
    for (mi, (name, m)) in measures_with_config(cfg).into_iter().enumerate() {
        for &n in &c.spacings {
            cases.push((mi, name.clone(), m.clone(), n));
        }
    }
    let results = cases
        .par_iter()
        .map(|(mi, name, m, n)| -> Result<(f64, String, usize)> {
            let grid = grid_for(*n, 3.0)?;
            let k_max = m.tail_truncation_index(grid.spacing(), cfg.tolerances.eps_tail, cfg.tolerances.tail_cap)?;
            let jump = JumpOperator::new(m, grid, k_max)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ ((*mi as u64) << 32) ^ *n as u64);
            let mut worst = f64::NEG_INFINITY;
            let mut witness = String::new();
            let mut count = 0;
            for s in 0..c.samples {
                let support = rng.gen_range(0.5..2.0);
                let phi = random_compact(grid, &mut rng, support, s);
                let dphi = phi.delta_forward(grid.h())?;
                for (label, f) in [("phi", phi), ("delta phi", dphi)] {
                    let nn = f.inner(&f)?;
                    if nn == 0.0 {
                        continue;
                    }
                    let jf = GridFunction::from_values(grid, jump.matrix().matvec(f.values()))?;
                    let ratio = jf.inner(&f)? / nn;
                    count += 1;
                    if ratio > worst {
                        worst = ratio;
                        witness = format!("{name}, h=1/{n}, sample {s} ({label})");
                    }
                }
            }
            Ok((worst, witness, count))
        })
        .collect::<Result<Vec<_>>>()?;
    let (worst, witness) = results
        .iter()
        .map(|(w, s, _)| (*w, s.clone()))
        .fold((f64::NEG_INFINITY, String::new()), |a, b| if b.0 > a.0 { b } else { a });
    let total: usize = results.iter().map(|r| r.2).sum();
    Ok(PropertyResult {
        name: "negative-semidefinite".into(),
        passed: worst <= c.definiteness_tol,
        worst,
        threshold: c.definiteness_tol,
        witness,
        runtime_s: start.elapsed().as_secs_f64(),
        details: serde_json::json!({ "quadratic_forms": total, "spacings": c.spacings }),
    })
}

/// Collapsed four-point stencils against the literal double sum.
pub fn check_collapsed_stencil(cfg: &StudyConfig) -> Result<PropertyResult> {
    let start = Instant::now();
    let c = &cfg.checks;
    let measures = measures_with_config(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut worst: f64 = 0.0;
    let mut witness = String::from("none");
    let mut weights = Vec::new();
    for (name, m) in &measures {
        for &n in &c.collapse_spacings {
            let grid = grid_for(n, 2.0)?;
            weights.push((name.clone(), m.clone(), n, StencilWeights::new(m, grid, n as u64)?));
        }
    }
    for s in 0..c.collapse_samples {
        let (name, m, n, w) = &weights[s % weights.len()];
        let grid = *w.grid();
        let phi = random_compact(grid, &mut rng, 1.0, s);
        let a = apply_j1(&phi, w)?;
        let b = apply_j1_direct(&phi, m)?;
        let d = a.sub(&b)?.norm_sup();
        if d > worst {
            worst = d;
            witness = format!("{name}, h=1/{n}, sample {s}");
        }
    }
    Ok(PropertyResult {
        name: "collapsed-stencil".into(),
        passed: worst <= c.collapse_tol,
        worst,
        threshold: c.collapse_tol,
        witness,
        runtime_s: start.elapsed().as_secs_f64(),
        details: serde_json::json!({ "samples": c.collapse_samples, "spacings": c.collapse_spacings }),
    })
}

/// `Σ_l θ_k^l = 1/2` in exact rational arithmetic, and in floating point.
pub fn check_theta_closure(cfg: &StudyConfig) -> PropertyResult {
    let start = Instant::now();
    let max_k = cfg.checks.theta_max_k;
    let half = Ratio::new(1i64, 2);
    let mut exact_failures = Vec::new();
    let mut worst_float: f64 = 0.0;
    for k in (-max_k..=max_k).filter(|&k| k != 0) {
        let m = k.abs();
        let sum: Ratio<i64> = (0..m).map(|l| Ratio::new(2 * m - 2 * l - 1, 2 * k * k)).sum();
        if sum != half {
            exact_failures.push(k);
        }
        let fsum: f64 = (0..m).map(|l| theta(k, l)).sum();
        worst_float = worst_float.max((fsum - 0.5).abs());
    }
    PropertyResult {
        name: "theta-closure".into(),
        passed: exact_failures.is_empty(),
        worst: exact_failures.len() as f64,
        threshold: 0.0,
        witness: if exact_failures.is_empty() {
            "none".into()
        } else {
            format!("k = {exact_failures:?}")
        },
        runtime_s: start.elapsed().as_secs_f64(),
        details: serde_json::json!({ "max_k": max_k, "float_deviation": worst_float }),
    }
}

/// Sup distance between `J^h φ` and the quadrature oracle `J φ` on the grid.
pub fn consistency_error(
    shape: &Shape,
    measure: &LevyMeasure,
    grid: GridSpec,
    k_max: u64,
    quad_tol: f64,
) -> Result<f64> {
    let phi = restrict(|x| shape.value(x), grid)?;
    let w = StencilWeights::new(measure, grid, k_max)?;
    let jh = apply_jump(&phi, &w)?;
    let errs = (0..grid.len())
        .into_par_iter()
        .map(|i| Ok((jh.values()[i] - continuous_j(shape, grid.x(i), measure, quad_tol)?).abs()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(errs.into_iter().fold(0.0, f64::max))
}

fn consistency_measure(cfg: &StudyConfig) -> LevyMeasure {
    if cfg.problem.measure == LevyMeasure::zero() {
        LevyMeasure::power_law(1.0, 0.5).expect("valid")
    } else {
        cfg.problem.measure.clone()
    }
}

/// `‖J^h φ - J φ‖_sup = O(h)` with a log-log fit.
pub fn check_consistency(cfg: &StudyConfig) -> Result<PropertyResult> {
    let start = Instant::now();
    let c = &cfg.checks;
    let shape = c.consistency_shape;
    let measure = consistency_measure(cfg);
    let radius = shape.support_radius().unwrap_or(1.0) + 2.0;
    let mut levels = Vec::new();
    for &n in &c.consistency_spacings {
        let grid = grid_for(n, radius)?;
        let k_max = measure.tail_truncation_index(grid.spacing(), cfg.tolerances.eps_tail, cfg.tolerances.tail_cap)?;
        levels.push((
            grid.h(),
            consistency_error(&shape, &measure, grid, k_max, cfg.tolerances.quad_tol)?,
        ));
    }
    let fit = fit_rate(&levels);
    let passed = fit.passes(c.consistency_slope, Some(c.consistency_r2));
    Ok(PropertyResult {
        name: "consistency".into(),
        passed,
        worst: fit.slope().unwrap_or(f64::NAN),
        threshold: c.consistency_slope,
        witness: format!("{fit:?}"),
        runtime_s: start.elapsed().as_secs_f64(),
        details: serde_json::json!({
            "levels": levels,
            "fit": fit,
            "min_r2": c.consistency_r2,
            "shape": shape,
            "measure": measure,
        }),
    })
}

/// `‖J^h φ‖_{l2}` must stay within a relative band across the ladder.
pub fn check_no_blowup(cfg: &StudyConfig) -> Result<PropertyResult> {
    let start = Instant::now();
    let c = &cfg.checks;
    let shape = c.blowup_shape;
    let measure = consistency_measure(cfg);
    let radius = shape.support_radius().unwrap_or(1.0) + 2.0;
    let mut norms = Vec::new();
    for &n in &c.blowup_spacings {
        let grid = grid_for(n, radius)?;
        let k_max = measure.tail_truncation_index(grid.spacing(), cfg.tolerances.eps_tail, cfg.tolerances.tail_cap)?;
        let w = StencilWeights::new(&measure, grid, k_max)?;
        let phi = restrict(|x| shape.value(x), grid)?;
        norms.push((grid.h(), apply_jump(&phi, &w)?.norm_l2()));
    }
    let max = norms.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let min = norms.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let variation = if min > 0.0 { (max - min) / min } else { f64::INFINITY };
    Ok(PropertyResult {
        name: "no-blowup".into(),
        passed: variation <= c.blowup_variation,
        worst: variation,
        threshold: c.blowup_variation,
        witness: format!("norms {norms:?}"),
        runtime_s: start.elapsed().as_secs_f64(),
        details: serde_json::json!({ "norms": norms }),
    })
}

/// Runs every property check.
pub fn run_operator_checks(cfg: &StudyConfig) -> Result<CheckReport> {
    cfg.validate()?;
    let pool = thread_pool(cfg.workers)?;
    let properties = pool.install(|| -> Result<Vec<PropertyResult>> {
        Ok(vec![
            check_negative_semidefinite(cfg)?,
            check_collapsed_stencil(cfg)?,
            check_theta_closure(cfg),
            check_consistency(cfg)?,
            check_no_blowup(cfg)?,
        ])
    })?;
    let passed = properties.iter().all(|p| p.passed);
    Ok(CheckReport {
        config: cfg.clone(),
        properties,
        passed,
    })
}

/// Status of a [`RateFit`] as a short string, for console summaries.
pub fn describe_fit(fit: &RateFit) -> String {
    match fit {
        RateFit::Fitted { slope, r2, levels, .. } => format!("slope {slope:.3} (R² {r2:.4}, {levels} levels)"),
        RateFit::Exact => "exact".into(),
        RateFit::InsufficientData { levels } => format!("insufficient data ({levels} levels)"),
    }
}
