//! RK4 for the semidiscrete system on a manufactured problem, compared with
//! the exact solution; writes the trajectory to `semidiscrete.csv`.
//!
//! cargo run --release --example semidiscrete

use std::sync::Arc;

use levyfd::coefficients::CoefficientSet;
use levyfd::grid::{GridSpec, Spacing};
use levyfd::integrator::{rk_error_estimate, semidiscrete_with, RkOptions};
use levyfd::levy::{LevyMeasure, DEFAULT_TAIL_CAP};
use levyfd::operators::JumpOperator;
use levyfd::reference::{ManufacturedProblem, Shape, SmoothProfile, TimeFactor};

fn main() -> levyfd::Result<()> {
    let measure = LevyMeasure::power_law(1.0, 0.5)?;
    let profile = SmoothProfile::new(Shape::CinfBump { radius: 1.0 }, TimeFactor::ExpDecay { rate: 1.0 });
    let coeffs = CoefficientSet::new(|_, x| (x * x).min(1.0), |_, _| 0.0, |_, _| 0.0, 1.0);
    let mp = Arc::new(ManufacturedProblem::new(profile, coeffs, measure.clone(), 1e-10));
    let problem = mp.clone().into_problem(0.5, 1.0);

    for n in [8, 16, 32] {
        let grid = GridSpec::new(Spacing::new(n)?, 3.0)?;
        let k_max = measure.tail_truncation_index(grid.spacing(), 1e-10, DEFAULT_TAIL_CAP)?;
        let jump = JumpOperator::new(&measure, grid, k_max)?;
        let traj = semidiscrete_with(&problem, &jump, &RkOptions::default(), &[0.25, 0.5])?;
        let rk = traj.rk_diagnostics().expect("rk run");
        let err = traj
            .times()
            .iter()
            .zip(traj.states())
            .map(|(&t, v)| Ok(v.sub(&mp.exact_on(t, &grid)?)?.norm_sup()))
            .collect::<levyfd::Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        println!(
            "h=1/{n:<3} dt={:.2e} ({} steps)  max error {err:.3e}  rk estimate {:.1e}",
            rk.dt_max,
            rk.steps,
            rk_error_estimate(&problem, &jump, &traj)?
        );
        if n == 32 {
            traj.write_csv(std::io::BufWriter::new(std::fs::File::create("semidiscrete.csv")?))?;
            println!("wrote semidiscrete.csv");
        }
    }
    Ok(())
}
