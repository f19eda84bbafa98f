//! Implicit Euler with the per-step solvability check and linear-solve
//! diagnostics, on a drift-diffusion-jump problem with reaction.
//!
//! cargo run --release --example implicit_euler

use levyfd::coefficients::CoefficientSet;
use levyfd::grid::{GridSpec, Spacing};
use levyfd::integrator::{implicit_euler_solve, ImplicitOptions, TimeGrid};
use levyfd::levy::{JumpDensity, LevyMeasure, DEFAULT_TAIL_CAP};
use levyfd::problem::ProblemSpec;

fn main() -> levyfd::Result<()> {
    let measure = LevyMeasure::compound_poisson(2.0, JumpDensity::Normal { mean: 0.2, std: 0.6 })?;
    let coeffs = CoefficientSet::new(
        |t, x| (1.0 + t) * (x * x).min(1.0),
        |_, x| 0.5 * x.sin(),
        |_, _| 0.25,
        2.0,
    );
    let problem = ProblemSpec::homogeneous(coeffs, |x| (1.0 - x * x).max(0.0).powi(3), 1.0);
    let grid = GridSpec::new(Spacing::new(16)?, 3.0)?;
    let k_max = measure.tail_truncation_index(grid.spacing(), 1e-10, DEFAULT_TAIL_CAP)?;

    for steps in [2, 8, 32] {
        let tg = TimeGrid::new(1.0, steps)?;
        match implicit_euler_solve(&problem, grid, &measure, k_max, tg, &ImplicitOptions::default()) {
            Ok(traj) => {
                let s = traj.solvability().expect("implicit run");
                println!(
                    "tau=1/{steps:<3} N_hat={:.4} tau*N_hat={:.4}  |v_T|_l2={:.6}",
                    s.n_hat,
                    s.tau * s.n_hat,
                    traj.final_state().norm_l2()
                );
                for d in traj.step_diagnostics().iter().take(2) {
                    println!(
                        "    step {} t={:.3} {:?} residual {:.1e} (|rhs| {:.3})",
                        d.step, d.t, d.method, d.residual, d.rhs_norm
                    );
                }
            }
            Err(e) => println!("tau=1/{steps:<3} rejected: {e}"),
        }
    }

    // A strongly reactive problem: large steps are refused rather than solved.
    let hot = ProblemSpec::homogeneous(
        CoefficientSet::new(|_, _| 0.0, |_, _| 0.0, |_, _| 4.0, 4.0),
        |x| (1.0 - x * x).max(0.0),
        1.0,
    );
    let err = implicit_euler_solve(
        &hot,
        grid,
        &measure,
        k_max,
        TimeGrid::new(1.0, 2)?,
        &ImplicitOptions::default(),
    );
    println!(
        "c = 4, tau = 1/2: {}",
        err.map(|_| "solved".to_string()).unwrap_or_else(|e| e.to_string())
    );
    Ok(())
}
