//! Time stepping: classical RK4 for the semidiscrete system (the reference
//! `v^h`) and the implicit Euler scheme with its solvability check.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::levy::LevyMeasure;
use crate::operators::{local_matrix, DiscreteOperator, JumpOperator};
use crate::problem::ProblemSpec;
use crate::solver::{LinearSolver, SolveMethod, SolverOptions};

/// Sup norm above which an explicit run is declared unstable.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

/// Uniform knots `t_i = i T / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config("time grid needs at least one step".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn knot(&self, i: usize) -> f64 {
        if i == self.steps {
            self.horizon
        } else {
            i as f64 * self.tau()
        }
    }

    pub fn knots(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.knot(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Semidiscrete,
    ImplicitEuler,
}

/// Per-step record of an implicit run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    pub method: SolveMethod,
    pub iterations: usize,
    pub residual: f64,
    pub rhs_norm: f64,
    pub coercivity: f64,
    pub l2_norm: f64,
}

/// Settings actually used by an RK4 run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RkDiagnostics {
    pub dt_max: f64,
    pub steps: usize,
    pub norm_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    scheme: Scheme,
    grid: GridSpec,
    times: Vec<f64>,
    #[serde(skip)]
    states: Vec<GridFunction>,
    steps: Vec<StepDiagnostics>,
    solvability: Option<SolvabilityReport>,
    rk: Option<RkDiagnostics>,
}

impl Trajectory {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[GridFunction] {
        &self.states
    }

    pub fn snapshot(&self, i: usize) -> (f64, &GridFunction) {
        (self.times[i], &self.states[i])
    }

    /// State stored at time `t` (matched to a relative 1e-12).
    pub fn state_at(&self, t: f64) -> Option<&GridFunction> {
        let tol = 1e-12 * t.abs().max(1.0);
        self.times
            .iter()
            .position(|s| (s - t).abs() <= tol)
            .map(|i| &self.states[i])
    }

    pub fn final_state(&self) -> &GridFunction {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn step_diagnostics(&self) -> &[StepDiagnostics] {
        &self.steps
    }

    /// Worst solvability report over the run (largest `τ N̂`).
    pub fn solvability(&self) -> Option<&SolvabilityReport> {
        self.solvability.as_ref()
    }

    pub fn rk_diagnostics(&self) -> Option<&RkDiagnostics> {
        self.rk.as_ref()
    }

    /// Long-format CSV `t,x,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,x,value")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            for (x, v) in self.grid.xs().zip(s.values()) {
                writeln!(out, "{t},{x},{v:e}")?;
            }
        }
        Ok(())
    }

    /// Snapshots as JSON.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "scheme": self.scheme,
            "h": self.grid.h(),
            "R": self.grid.radius(),
            "snapshots": self.times.iter().zip(&self.states).map(|(t, s)| serde_json::json!({
                "t": t,
                "values": s.values(),
            })).collect::<Vec<_>>(),
        })
    }

    /// Solver diagnostics as JSON.
    pub fn diagnostics_json(&self) -> serde_json::Value {
        serde_json::json!({
            "scheme": self.scheme,
            "steps": self.steps,
            "solvability": self.solvability,
            "rk": self.rk,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RkOptions {
    /// Fine step; derived from the stability bound when absent.
    pub dt_fine: Option<f64>,
    /// `dt_fine <= stability_factor / ‖A‖_∞`.
    pub stability_factor: f64,
}

impl Default for RkOptions {
    fn default() -> Self {
        Self {
            dt_fine: None,
            stability_factor: 0.5,
        }
    }
}

fn sorted_times(times: &[f64], horizon: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0];
    for &t in times {
        if !(0.0..=horizon * (1.0 + 1e-12)).contains(&t) {
            return Err(Error::Config(format!("snapshot time {t} outside [0, {horizon}]")));
        }
        out.push(t.min(horizon));
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * horizon.max(1.0));
    Ok(out)
}

/// Row-sum bound for `L^h_t + J^h`, sampling `L_t` at nine times in `[0, T]`.
pub fn operator_norm_bound(problem: &ProblemSpec, jump: &JumpOperator) -> Result<f64> {
    let mut local: f64 = 0.0;
    if !problem.coeffs.is_zero() {
        for j in 0..=8 {
            let t = problem.horizon * j as f64 / 8.0;
            local = local.max(local_matrix(&problem.coeffs, *jump.grid(), t)?.norm_inf());
        }
    }
    Ok(jump.matrix().norm_inf() + local)
}

struct RhsEval<'a> {
    problem: &'a ProblemSpec,
    jump: &'a JumpOperator,
    grid: GridSpec,
}

impl RhsEval<'_> {
    /// `(L_t + J) v + f_t` into `out`.
    fn eval(&self, t: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        self.jump.matrix().matvec_into(v, out);
        if !self.problem.coeffs.is_zero() {
            let h = self.grid.h();
            let n = v.len();
            let at = |j: i64| if j < 0 || j as usize >= n { 0.0 } else { v[j as usize] };
            for (i, o) in out.iter_mut().enumerate() {
                let lc = self.problem.coeffs.eval(t, self.grid.x(i))?;
                let j = i as i64;
                let wide = (at(j + 2) - 2.0 * v[i] + at(j - 2)) / (4.0 * h * h);
                let sym = (at(j + 1) - at(j - 1)) / (2.0 * h);
                *o += lc.a * wide + lc.b * sym + lc.c * v[i];
            }
        }
        if !self.problem.source.is_zero() {
            let f = self.problem.source.sample(t, &self.grid)?;
            for (o, fi) in out.iter_mut().zip(f.values()) {
                *o += fi;
            }
        }
        Ok(())
    }
}

/// RK4 for `dv = ((L^h_t + J^h) v + f_t) dt`, storing `v` at `snapshot_times`
/// (plus `t = 0`).
pub fn semidiscrete_solve(
    problem: &ProblemSpec,
    grid: GridSpec,
    measure: &LevyMeasure,
    k_max: u64,
    opts: &RkOptions,
    snapshot_times: &[f64],
) -> Result<Trajectory> {
    let jump = JumpOperator::new(measure, grid, k_max)?;
    semidiscrete_with(problem, &jump, opts, snapshot_times)
}

/// As [`semidiscrete_solve`] with a prebuilt jump operator.
pub fn semidiscrete_with(
    problem: &ProblemSpec,
    jump: &JumpOperator,
    opts: &RkOptions,
    snapshot_times: &[f64],
) -> Result<Trajectory> {
    let grid = *jump.grid();
    let times = sorted_times(snapshot_times, problem.horizon)?;
    let norm = operator_norm_bound(problem, jump)?;
    let stable = if norm > 0.0 {
        opts.stability_factor / norm
    } else {
        f64::INFINITY
    };
    let dt_fine = match opts.dt_fine {
        Some(dt) if dt > 0.0 => dt,
        Some(dt) => return Err(Error::Config(format!("dt_fine must be positive, got {dt}"))),
        None => stable.min(problem.horizon.max(1e-300)),
    };
    let rhs = RhsEval { problem, jump, grid };
    let n = grid.len();
    let mut v = problem.initial_on(&grid)?.into_values();
    let mut states = vec![GridFunction::from_values(grid, v.clone())?];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut total_steps = 0;
    let mut dt_max: f64 = 0.0;
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let span = t1 - t0;
        let m = ((span / dt_fine) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let dt = span / m as f64;
        dt_max = dt_max.max(dt);
        for s in 0..m {
            let t = t0 + s as f64 * dt;
            rhs.eval(t, &v, &mut k1)?;
            for i in 0..n {
                tmp[i] = v[i] + 0.5 * dt * k1[i];
            }
            rhs.eval(t + 0.5 * dt, &tmp, &mut k2)?;
            for i in 0..n {
                tmp[i] = v[i] + 0.5 * dt * k2[i];
            }
            rhs.eval(t + 0.5 * dt, &tmp, &mut k3)?;
            for i in 0..n {
                tmp[i] = v[i] + dt * k3[i];
            }
            rhs.eval(t + dt, &tmp, &mut k4)?;
            let mut sup: f64 = 0.0;
            for i in 0..n {
                v[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                sup = sup.max(v[i].abs());
            }
            if !(sup <= BLOWUP_THRESHOLD) {
                return Err(Error::Instability { t: t + dt, sup });
            }
        }
        total_steps += m;
        states.push(GridFunction::from_values(grid, v.clone())?);
    }
    Ok(Trajectory {
        scheme: Scheme::Semidiscrete,
        grid,
        times,
        states,
        steps: Vec::new(),
        solvability: None,
        rk: Some(RkDiagnostics {
            dt_max,
            steps: total_steps,
            norm_bound: norm,
        }),
    })
}

/// Richardson-style estimate of the RK4 error of `reference`: reruns with a
/// doubled step and returns `max_t ‖v_dt - v_2dt‖_sup / 15`.
pub fn rk_error_estimate(problem: &ProblemSpec, jump: &JumpOperator, reference: &Trajectory) -> Result<f64> {
    let rk = reference
        .rk_diagnostics()
        .ok_or_else(|| Error::Config("RK error estimate needs a semidiscrete trajectory".into()))?;
    let coarse = semidiscrete_with(
        problem,
        jump,
        &RkOptions {
            dt_fine: Some(2.0 * rk.dt_max),
            ..Default::default()
        },
        reference.times(),
    )?;
    let mut worst: f64 = 0.0;
    for (a, b) in reference.states().iter().zip(coarse.states()) {
        worst = worst.max(a.sub(b)?.norm_sup());
    }
    Ok(worst / 15.0)
}

/// Probe budget of the coercivity estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeOptions {
    pub random: usize,
    pub smooth: usize,
    pub power_iterations: usize,
    pub seed: u64,
    /// Pass iff `τ N̂ <= safety`.
    pub safety: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            random: 30,
            smooth: 8,
            power_iterations: 100,
            seed: 0,
            safety: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvabilityReport {
    /// Largest Rayleigh quotient `(Aφ, φ) / ‖φ‖²` found.
    pub n_hat: f64,
    pub tau: f64,
    /// `safety - τ N̂`; nonnegative iff the check passes.
    pub margin: f64,
    pub passes: bool,
    pub probes: usize,
    /// Which probe attained `N̂`.
    pub witness: String,
}

impl SolvabilityReport {
    /// Largest admissible step for the estimated bound.
    pub fn threshold(&self, safety: f64) -> f64 {
        if self.n_hat > 0.0 {
            safety / self.n_hat
        } else {
            f64::INFINITY
        }
    }
}

fn rayleigh(op: &DiscreteOperator, phi: &[f64]) -> Option<f64> {
    let nn: f64 = phi.iter().map(|v| v * v).sum();
    if nn == 0.0 {
        return None;
    }
    let ap = op.matrix().matvec(phi);
    Some(ap.iter().zip(phi).map(|(a, b)| a * b).sum::<f64>() / nn)
}

/// Estimates `N̂ = max (Aφ, φ)/‖φ‖²` from random probes, smooth probes and
/// shifted power iteration on the symmetric part of `A`.
pub fn estimate_coercivity(op: &DiscreteOperator, opts: &ProbeOptions) -> (f64, usize, String) {
    let grid = *op.grid();
    let n = grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = f64::NEG_INFINITY;
    let mut witness = String::from("none");
    let mut count = 0;
    let mut consider = |q: Option<f64>, label: &dyn Fn() -> String, best: &mut f64, witness: &mut String| {
        if let Some(q) = q {
            count += 1;
            if q > *best {
                *best = q;
                *witness = label();
            }
        }
    };
    for r in 0..opts.random {
        let phi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        consider(rayleigh(op, &phi), &|| format!("random #{r}"), &mut best, &mut witness);
    }
    let radius = grid.radius().max(grid.h());
    for m in 1..=opts.smooth {
        let phi: Vec<f64> = grid
            .xs()
            .map(|x| (std::f64::consts::FRAC_PI_2 * m as f64 * (x + radius) / radius).sin())
            .collect();
        consider(
            rayleigh(op, &phi),
            &|| format!("sine mode {m}"),
            &mut best,
            &mut witness,
        );
    }
    if opts.power_iterations > 0 && n > 0 {
        let m = op.matrix();
        let shift = m.norm_inf().max(m.norm_one());
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for it in 0..opts.power_iterations {
            let av = m.matvec(&v);
            let atv = m.matvec_transpose(&v);
            let mut w: Vec<f64> = (0..n).map(|i| 0.5 * (av[i] + atv[i]) + shift * v[i]).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            w.iter_mut().for_each(|x| *x /= norm);
            v = w;
            consider(
                rayleigh(op, &v),
                &|| format!("power iteration {it}"),
                &mut best,
                &mut witness,
            );
        }
    }
    if count == 0 {
        best = 0.0;
    }
    (best, count, witness)
}

/// Passes iff `τ N̂ <= safety`.
pub fn check_solvability(op: &DiscreteOperator, tau: f64, opts: &ProbeOptions) -> SolvabilityReport {
    let (n_hat, probes, witness) = estimate_coercivity(op, opts);
    let margin = opts.safety - tau * n_hat;
    SolvabilityReport {
        n_hat,
        tau,
        margin,
        passes: margin >= 0.0,
        probes,
        witness,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ImplicitOptions {
    pub solver: SolverOptions,
    pub probes: ProbeOptions,
}

/// `v_i = v_{i-1} + τ [(L^h_{t_i} + J^h) v_i + f_{t_i}]`, `v_0 = ψ`.
pub fn implicit_euler_solve(
    problem: &ProblemSpec,
    grid: GridSpec,
    measure: &LevyMeasure,
    k_max: u64,
    timegrid: TimeGrid,
    opts: &ImplicitOptions,
) -> Result<Trajectory> {
    let jump = JumpOperator::new(measure, grid, k_max)?;
    implicit_euler_with(problem, &jump, timegrid, opts)
}

/// As [`implicit_euler_solve`] with a prebuilt jump operator.
pub fn implicit_euler_with(
    problem: &ProblemSpec,
    jump: &JumpOperator,
    timegrid: TimeGrid,
    opts: &ImplicitOptions,
) -> Result<Trajectory> {
    let grid = *jump.grid();
    let tau = timegrid.tau();
    let mut solver = LinearSolver::new(opts.solver);
    let mut v = problem.initial_on(&grid)?;
    let mut states = vec![v.clone()];
    let mut steps = Vec::with_capacity(timegrid.steps());
    let mut worst: Option<SolvabilityReport> = None;
    let mut last: Option<(crate::sparse::CsrMatrix, SolvabilityReport)> = None;
    let mut system = None;
    for i in 1..=timegrid.steps() {
        let t = timegrid.knot(i);
        let op = DiscreteOperator::at(jump, &problem.coeffs, t)?;
        let report = match &last {
            Some((m, r)) if m == op.matrix() => r.clone(),
            _ => {
                let r = check_solvability(&op, tau, &opts.probes);
                if !r.passes {
                    return Err(Error::StepSize {
                        tau,
                        coercivity: r.n_hat,
                        threshold: r.threshold(opts.probes.safety),
                    });
                }
                system = Some(op.matrix().identity_minus_scaled(tau));
                last = Some((op.matrix().clone(), r.clone()));
                r
            }
        };
        if worst.as_ref().is_none_or(|w| report.n_hat > w.n_hat) {
            worst = Some(report.clone());
        }
        let mut rhs = v.clone();
        if !problem.source.is_zero() {
            let f = problem.source.sample(t, &grid)?;
            for (r, fi) in rhs.values_mut().iter_mut().zip(f.values()) {
                *r += tau * fi;
            }
        }
        let m = system.as_ref().expect("system assembled with the first operator");
        let (next, info) = solver.solve(m, &rhs)?;
        v = next;
        steps.push(StepDiagnostics {
            step: i,
            t,
            method: info.method,
            iterations: info.iterations,
            residual: info.residual,
            rhs_norm: info.rhs_norm,
            coercivity: report.n_hat,
            l2_norm: v.norm_l2(),
        });
        states.push(v.clone());
    }
    Ok(Trajectory {
        scheme: Scheme::ImplicitEuler,
        grid,
        times: timegrid.knots(),
        states,
        steps,
        solvability: worst,
        rk: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientSet;
    use crate::grid::Spacing;
    use crate::problem::FnSource;
    use std::sync::Arc;

    fn grid() -> GridSpec {
        GridSpec::new(Spacing::new(8).unwrap(), 2.0).unwrap()
    }

    fn psi(x: f64) -> f64 {
        (1.0 - x * x).max(0.0).powi(3)
    }

    fn decay() -> ProblemSpec {
        ProblemSpec::homogeneous(CoefficientSet::new(|_, _| 0.0, |_, _| 0.0, |_, _| -1.0, 1.0), psi, 1.0)
    }

    #[test]
    fn time_grid_knots() {
        let g = TimeGrid::new(1.0, 3).unwrap();
        assert_eq!(g.knots().last().copied(), Some(1.0));
        assert!((g.tau() - 1.0 / 3.0).abs() < 1e-16);
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn zero_problem_is_stationary() {
        let p = ProblemSpec::homogeneous(CoefficientSet::zero(), psi, 1.0);
        let m = LevyMeasure::zero();
        let rk = semidiscrete_solve(&p, grid(), &m, 8, &RkOptions::default(), &[0.5, 1.0]).unwrap();
        for s in rk.states() {
            assert_eq!(s, &rk.states()[0]);
        }
        let ie = implicit_euler_solve(
            &p,
            grid(),
            &m,
            8,
            TimeGrid::new(1.0, 4).unwrap(),
            &ImplicitOptions::default(),
        )
        .unwrap();
        for s in ie.states() {
            assert!(s.approx_eq(&ie.states()[0], 1e-12));
        }
    }

    #[test]
    fn scalar_decay_matches_exponential() {
        let p = decay();
        let rk = semidiscrete_solve(
            &p,
            grid(),
            &LevyMeasure::zero(),
            8,
            &RkOptions {
                dt_fine: Some(1e-3),
                ..Default::default()
            },
            &[1.0],
        )
        .unwrap();
        let v0 = &rk.states()[0];
        let v1 = rk.final_state();
        let e = (-1.0f64).exp();
        for (a, b) in v0.values().iter().zip(v1.values()) {
            assert!((b - e * a).abs() <= 1e-8 * (e * a).abs().max(1e-300));
        }
    }

    #[test]
    fn implicit_decay_matches_recurrence() {
        let p = decay();
        let tg = TimeGrid::new(1.0, 10).unwrap();
        let ie = implicit_euler_solve(&p, grid(), &LevyMeasure::zero(), 8, tg, &ImplicitOptions::default()).unwrap();
        let v0 = ie.states()[0].clone();
        for (i, s) in ie.states().iter().enumerate() {
            let f = (1.0 + tg.tau()).powi(-(i as i32));
            for (a, b) in v0.values().iter().zip(s.values()) {
                assert!((b - f * a).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn constant_source_integrates_exactly() {
        let g = |x: f64| 0.3 * (1.0 - x.abs()).max(0.0);
        let p = ProblemSpec::new(CoefficientSet::zero(), Arc::new(FnSource(move |_, x| g(x))), psi, 1.0);
        let rk = semidiscrete_solve(
            &p,
            grid(),
            &LevyMeasure::zero(),
            8,
            &RkOptions {
                dt_fine: Some(0.01),
                ..Default::default()
            },
            &[0.25, 1.0],
        )
        .unwrap();
        for (t, s) in rk.times().iter().zip(rk.states()) {
            for (x, v) in grid().xs().zip(s.values()) {
                assert!((v - psi(x) - t * g(x)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let p = ProblemSpec::homogeneous(
            CoefficientSet::new(|_, _| 0.0, |_, _| 0.0, |_, _| 100.0, 100.0),
            psi,
            1.0,
        );
        let err = semidiscrete_solve(&p, grid(), &LevyMeasure::zero(), 8, &RkOptions::default(), &[1.0]).unwrap_err();
        assert!(matches!(err, Error::Instability { .. }));
    }

    #[test]
    fn coercivity_examples() {
        let g = grid();
        let zero = DiscreteOperator::from_matrix(g, 0.0, crate::sparse::CsrMatrix::zeros(g.len())).unwrap();
        let r = check_solvability(&zero, 10.0, &ProbeOptions::default());
        assert!(r.n_hat.abs() < 1e-15 && r.passes);
        let kappa = 2.0;
        let c = CoefficientSet::new(|_, _| 0.0, |_, _| 0.0, move |_, _| kappa, 10.0);
        let jump = JumpOperator::new(&LevyMeasure::zero(), g, 8).unwrap();
        let op = DiscreteOperator::at(&jump, &c, 0.0).unwrap();
        let r = check_solvability(&op, 0.25, &ProbeOptions::default());
        assert!((r.n_hat - kappa).abs() < 1e-12 && r.passes);
        assert!(!check_solvability(&op, 0.26, &ProbeOptions::default()).passes);
        let pl = LevyMeasure::power_law(1.0, 0.5).unwrap();
        let k = pl
            .tail_truncation_index(g.spacing(), 1e-8, crate::levy::DEFAULT_TAIL_CAP)
            .unwrap();
        let jump = JumpOperator::new(&pl, g, k).unwrap();
        let op = DiscreteOperator::at(&jump, &CoefficientSet::zero(), 0.0).unwrap();
        let r = check_solvability(&op, 1e6, &ProbeOptions::default());
        assert!(r.n_hat <= 1e-10, "{}", r.n_hat);
        assert!(r.passes);
    }

    #[test]
    fn step_size_error_names_threshold() {
        let p = ProblemSpec::homogeneous(CoefficientSet::new(|_, _| 0.0, |_, _| 0.0, |_, _| 4.0, 10.0), psi, 1.0);
        let err = implicit_euler_solve(
            &p,
            grid(),
            &LevyMeasure::zero(),
            8,
            TimeGrid::new(1.0, 2).unwrap(),
            &ImplicitOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::StepSize { threshold, .. } => assert!((threshold - 0.125).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pure_jump_implicit_is_non_expansive() {
        let g = GridSpec::new(Spacing::new(8).unwrap(), 3.0).unwrap();
        let m = LevyMeasure::tempered(1.0, 0.5, 1.0).unwrap();
        let k = m
            .tail_truncation_index(g.spacing(), 1e-10, crate::levy::DEFAULT_TAIL_CAP)
            .unwrap();
        let p = ProblemSpec::homogeneous(CoefficientSet::zero(), psi, 1.0);
        let ie = implicit_euler_solve(
            &p,
            g,
            &m,
            k,
            TimeGrid::new(1.0, 8).unwrap(),
            &ImplicitOptions::default(),
        )
        .unwrap();
        for w in ie.states().windows(2) {
            assert!(w[1].norm_l2() <= w[0].norm_l2() + 1e-10);
        }
        let mut csv = Vec::new();
        ie.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 9 * g.len());
        assert_eq!(ie.diagnostics_json()["steps"].as_array().unwrap().len(), 8);
    }
}
