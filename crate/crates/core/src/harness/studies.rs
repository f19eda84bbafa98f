//! Convergence studies in `h` (semidiscrete vs. manufactured solution) and
//! in `τ` (implicit Euler vs. semidiscrete oracle), plus single runs.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::StudyConfig;
use super::report::{Budget, ConvergenceReport, LevelResult, StudyKind};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::integrator::{
    implicit_euler_with, rk_error_estimate, semidiscrete_with, ImplicitOptions, ProbeOptions, RkOptions, TimeGrid,
    Trajectory,
};
use crate::operators::JumpOperator;
use crate::problem::ProblemSpec;
use crate::reference::ManufacturedProblem;
use crate::solver::SolverOptions;

/// Rayon pool with `workers` threads (all cores when `None`).
pub fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w.max(1));
    }
    b.build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

pub fn manufactured(cfg: &StudyConfig) -> Arc<ManufacturedProblem> {
    Arc::new(ManufacturedProblem::new(
        cfg.profile(),
        cfg.coefficients(),
        cfg.problem.measure.clone(),
        cfg.tolerances.quad_tol,
    ))
}

fn problem_of(cfg: &StudyConfig, mp: &Arc<ManufacturedProblem>) -> ProblemSpec {
    mp.clone().into_problem(cfg.problem.horizon, cfg.problem.gamma)
}

fn jump_for(cfg: &StudyConfig, n: u32) -> Result<(GridSpec, JumpOperator)> {
    let grid = cfg.grid(n)?;
    let k_max = cfg.k_max(n)?;
    Ok((grid, JumpOperator::new(&cfg.problem.measure, grid, k_max)?))
}

fn implicit_options(cfg: &StudyConfig) -> ImplicitOptions {
    ImplicitOptions {
        solver: SolverOptions {
            tol: cfg.tolerances.solver_tol,
            direct_limit: cfg.tolerances.direct_limit,
            ..Default::default()
        },
        probes: ProbeOptions {
            seed: cfg.seed,
            ..Default::default()
        },
    }
}

/// `max_t` sup and `l2` distances between matching snapshots.
fn max_errors(
    a: &Trajectory,
    times: &[f64],
    exact: impl Fn(f64) -> Result<crate::grid::GridFunction>,
) -> Result<(f64, f64)> {
    let (mut sup, mut l2) = (0.0f64, 0.0f64);
    for &t in times {
        let s = a
            .state_at(t)
            .ok_or_else(|| Error::Config(format!("no snapshot at t = {t}")))?;
        let d = s.sub(&exact(t)?)?;
        sup = sup.max(d.norm_sup());
        l2 = l2.max(d.norm_l2());
    }
    Ok((sup, l2))
}

fn snapshot_times(cfg: &StudyConfig) -> Vec<f64> {
    let mut t: Vec<f64> = cfg.space.snapshots.iter().map(|s| s * cfg.problem.horizon).collect();
    t.push(0.0);
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

fn space_level(cfg: &StudyConfig, mp: &Arc<ManufacturedProblem>, level: usize, n: u32) -> Result<LevelResult> {
    let start = Instant::now();
    let (grid, jump) = jump_for(cfg, n)?;
    let problem = problem_of(cfg, mp);
    let opts = RkOptions {
        dt_fine: cfg.space.dt_fine,
        stability_factor: cfg.space.stability_factor,
    };
    let times = snapshot_times(cfg);
    let traj = semidiscrete_with(&problem, &jump, &opts, &times)?;
    let (sup_err, l2_err) = max_errors(&traj, &times, |t| mp.exact_on(t, &grid))?;
    let rk = rk_error_estimate(&problem, &jump, &traj)?;
    let mut u_max: f64 = 0.0;
    for &t in &times {
        u_max = u_max.max(mp.exact_on(t, &grid)?.norm_sup());
    }
    let horizon = cfg.problem.horizon;
    let budget = Budget {
        quadrature: horizon * cfg.tolerances.quad_tol,
        tail: horizon * jump.weights().truncated_mass() * u_max,
        rk,
        solver: 0.0,
    };
    let total = budget.total();
    Ok(LevelResult {
        level,
        h: grid.h(),
        tau: None,
        sup_err,
        l2_err,
        runtime_s: start.elapsed().as_secs_f64(),
        k_max: jump.weights().k_max(),
        budget,
        budget_total: total,
        contaminated: sup_err.min(l2_err) < cfg.thresholds.budget_factor * total,
        failure: None,
        diagnostics: serde_json::to_value(traj.rk_diagnostics())?,
    })
}

fn require_levels(count: usize, what: &str) -> Result<()> {
    if count < 3 {
        return Err(Error::Config(format!(
            "{what} ladder needs at least 3 levels, got {count}"
        )));
    }
    Ok(())
}

/// Semidiscrete solution against the manufactured `u` over the `h` ladder.
pub fn run_convergence_space(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    require_levels(cfg.space.spacings.len(), "spatial")?;
    let mp = manufactured(cfg);
    let pool = thread_pool(cfg.workers)?;
    let levels: Vec<LevelResult> = pool.install(|| {
        cfg.space
            .spacings
            .par_iter()
            .enumerate()
            .map(|(i, &n)| {
                space_level(cfg, &mp, i, n)
                    .unwrap_or_else(|e| LevelResult::failed(i, 1.0 / n as f64, None, e.to_string()))
            })
            .collect()
    });
    let resolved = serde_json::json!({
        "radius": cfg.radius(),
        "snapshot_times": snapshot_times(cfg),
        "k_max": levels.iter().map(|l| l.k_max).collect::<Vec<_>>(),
        "profile_smoothness": cfg.profile().smoothness(),
    });
    Ok(ConvergenceReport::assemble(
        StudyKind::Space,
        cfg.clone(),
        resolved,
        levels,
        cfg.thresholds.space_slope,
        true,
    ))
}

/// Implicit Euler against the RK4 semidiscrete oracle over the `τ` ladder at
/// fixed `h`.
pub fn run_convergence_time(cfg: &StudyConfig) -> Result<ConvergenceReport> {
    cfg.validate()?;
    require_levels(cfg.time.steps.len(), "time")?;
    let mp = manufactured(cfg);
    let problem = problem_of(cfg, &mp);
    let (grid, jump) = jump_for(cfg, cfg.time.spacing)?;
    let horizon = cfg.problem.horizon;
    let grids = cfg
        .time
        .steps
        .iter()
        .map(|&s| TimeGrid::new(horizon, s))
        .collect::<Result<Vec<_>>>()?;
    let mut knots: Vec<f64> = grids.iter().flat_map(|g| g.knots()).collect();
    knots.sort_by(f64::total_cmp);
    let pool = thread_pool(cfg.workers)?;
    let oracle_start = Instant::now();
    let (oracle, rk) = pool.install(|| -> Result<_> {
        let opts = RkOptions {
            dt_fine: cfg.time.dt_fine,
            stability_factor: cfg.time.stability_factor,
        };
        let oracle = semidiscrete_with(&problem, &jump, &opts, &knots)?;
        let rk = rk_error_estimate(&problem, &jump, &oracle)?;
        Ok((oracle, rk))
    })?;
    let oracle_runtime = oracle_start.elapsed().as_secs_f64();
    let opts = implicit_options(cfg);
    let levels: Vec<LevelResult> = pool.install(|| {
        grids
            .par_iter()
            .enumerate()
            .map(|(i, tg)| {
                let start = Instant::now();
                let run = || -> Result<LevelResult> {
                    let traj = implicit_euler_with(&problem, &jump, *tg, &opts)?;
                    let (sup_err, l2_err) = max_errors(&traj, &tg.knots(), |t| {
                        oracle
                            .state_at(t)
                            .cloned()
                            .ok_or_else(|| Error::Config(format!("oracle has no snapshot at t = {t}")))
                    })?;
                    let rhs_max = traj.step_diagnostics().iter().map(|d| d.rhs_norm).fold(0.0, f64::max);
                    let budget = Budget {
                        quadrature: 0.0,
                        tail: 0.0,
                        rk,
                        solver: tg.steps() as f64 * cfg.tolerances.solver_tol * (1.0 + rhs_max),
                    };
                    let total = budget.total();
                    Ok(LevelResult {
                        level: i,
                        h: grid.h(),
                        tau: Some(tg.tau()),
                        sup_err,
                        l2_err,
                        runtime_s: start.elapsed().as_secs_f64(),
                        k_max: jump.weights().k_max(),
                        budget,
                        budget_total: total,
                        contaminated: sup_err.min(l2_err) < cfg.thresholds.budget_factor * total,
                        failure: None,
                        diagnostics: traj.diagnostics_json(),
                    })
                };
                run().unwrap_or_else(|e| LevelResult::failed(i, grid.h(), Some(tg.tau()), e.to_string()))
            })
            .collect()
    });
    let resolved = serde_json::json!({
        "radius": cfg.radius(),
        "h": grid.h(),
        "k_max": jump.weights().k_max(),
        "oracle": oracle.rk_diagnostics(),
        "oracle_rk_error": rk,
        "oracle_runtime_s": oracle_runtime,
        "threshold_rule": if cfg.thresholds.time_slope.is_some() { "configured" } else if cfg.problem.gamma >= 1.0 { "gamma >= 1: first order" } else { "gamma < 1: 0.4 gamma" },
    });
    Ok(ConvergenceReport::assemble(
        StudyKind::Time,
        cfg.clone(),
        resolved,
        levels,
        cfg.time_threshold(),
        false,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeChoice {
    Semidiscrete,
    Implicit,
    Both,
}

/// One problem at one `(h, τ)`.
pub struct SolveOutcome {
    pub trajectories: Vec<Trajectory>,
    /// Errors against the manufactured solution per scheme.
    pub summary: serde_json::Value,
}

pub fn run_solve(cfg: &StudyConfig, n: u32, steps: usize, scheme: SchemeChoice) -> Result<SolveOutcome> {
    cfg.validate()?;
    let mp = manufactured(cfg);
    let problem = problem_of(cfg, &mp);
    let (grid, jump) = jump_for(cfg, n)?;
    let tg = TimeGrid::new(cfg.problem.horizon, steps)?;
    let mut trajectories = Vec::new();
    if matches!(scheme, SchemeChoice::Semidiscrete | SchemeChoice::Both) {
        let opts = RkOptions {
            dt_fine: cfg.time.dt_fine,
            stability_factor: cfg.time.stability_factor,
        };
        trajectories.push(semidiscrete_with(&problem, &jump, &opts, &tg.knots())?);
    }
    if matches!(scheme, SchemeChoice::Implicit | SchemeChoice::Both) {
        trajectories.push(implicit_euler_with(&problem, &jump, tg, &implicit_options(cfg))?);
    }
    let mut runs = Vec::new();
    for t in &trajectories {
        let (sup, l2) = max_errors(t, &tg.knots(), |s| mp.exact_on(s, &grid))?;
        runs.push(serde_json::json!({
            "scheme": t.scheme(),
            "max_sup_error_vs_exact": sup,
            "max_l2_error_vs_exact": l2,
            "diagnostics": t.diagnostics_json(),
        }));
    }
    let summary = serde_json::json!({
        "config": cfg,
        "h": grid.h(),
        "radius": grid.radius(),
        "k_max": jump.weights().k_max(),
        "tau": tg.tau(),
        "steps": steps,
        "runs": runs,
    });
    Ok(SolveOutcome { trajectories, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientSpec;
    use crate::levy::LevyMeasure;
    use crate::reference::{Shape, TimeFactor};

    fn heat() -> StudyConfig {
        let mut cfg = StudyConfig::default();
        cfg.problem.measure = LevyMeasure::zero();
        cfg.problem.coefficients = CoefficientSpec {
            a: crate::coefficients::FieldSpec::constant(1.0),
            ..Default::default()
        };
        cfg.problem.horizon = 0.25;
        cfg.space.spacings = vec![4, 8, 16];
        cfg
    }

    #[test]
    fn heat_equation_space_study() {
        let r = run_convergence_space(&heat()).unwrap();
        assert!(r.passed, "{} {:?}", r.status, r.sup_fit);
        assert!(r.sup_fit.slope().unwrap() >= 0.9);
    }

    #[test]
    fn trivial_problem_is_exact() {
        let mut cfg = StudyConfig::default();
        cfg.problem.measure = LevyMeasure::zero();
        cfg.problem.coefficients = CoefficientSpec::default();
        cfg.problem.profile = Shape::Constant { value: 1.0 };
        cfg.problem.time_factor = TimeFactor::One;
        cfg.space.spacings = vec![4, 8, 16];
        let r = run_convergence_space(&cfg).unwrap();
        assert!(r.levels.iter().all(|l| l.sup_err == 0.0));
        assert!(r.passed, "{}", r.status);
        cfg.time.spacing = 4;
        cfg.time.steps = vec![2, 4, 8];
        let t = run_convergence_time(&cfg).unwrap();
        assert!(t.levels.iter().all(|l| l.sup_err <= 1e-10), "{:?}", t.levels);
        assert!(t.passed, "{}", t.status);
    }

    #[test]
    fn short_ladder_is_rejected() {
        let mut cfg = heat();
        cfg.space.spacings = vec![4, 8];
        assert!(matches!(run_convergence_space(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn single_solve_emits_both_schemes() {
        let mut cfg = heat();
        cfg.problem.time_factor = TimeFactor::ExpDecay { rate: 1.0 };
        let out = run_solve(&cfg, 8, 8, SchemeChoice::Both).unwrap();
        assert_eq!(out.trajectories.len(), 2);
        assert_eq!(out.summary["runs"].as_array().unwrap().len(), 2);
    }
}
