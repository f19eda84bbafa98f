//! Assembles `L^h_t + J^h` on a small window, compares the collapsed stencil
//! with the literal double sum and prints a few matrix rows.
//!
//! cargo run --example operator_assembly

use levyfd::coefficients::CoefficientSet;
use levyfd::grid::{restrict, GridSpec, Spacing};
use levyfd::levy::{LevyMeasure, DEFAULT_TAIL_CAP};
use levyfd::operators::{apply_j1, apply_j1_direct, apply_j2, DiscreteOperator, JumpOperator};

fn main() -> levyfd::Result<()> {
    let measure = LevyMeasure::tempered(1.0, 0.5, 1.0)?;
    let grid = GridSpec::new(Spacing::new(8)?, 2.0)?;
    let k_max = measure.tail_truncation_index(grid.spacing(), 1e-10, DEFAULT_TAIL_CAP)?;
    let jump = JumpOperator::new(&measure, grid, k_max)?;
    let w = jump.weights();
    println!(
        "{} points, K_max = {k_max}, {} inner cells, {} tail cells, truncated mass {:.3e}",
        grid.len(),
        w.inner().len(),
        w.tail().len(),
        w.truncated_mass()
    );

    let phi = restrict(|x| (1.0 - x * x).max(0.0).powi(3), grid)?;
    let collapsed = apply_j1(&phi, w)?;
    let direct = apply_j1_direct(&phi, &measure)?;
    println!("collapsed vs double sum: {:.3e}", collapsed.sub(&direct)?.norm_sup());
    println!(
        "|J1 phi|_sup = {:.4}, |J2 phi|_sup = {:.4}",
        collapsed.norm_sup(),
        apply_j2(&phi, w)?.norm_sup()
    );

    let coeffs = CoefficientSet::new(|_, x| x * x, |_, x| 0.5 * x, |_, _| -1.0, 4.0);
    let op = DiscreteOperator::at(&jump, &coeffs, 0.5)?;
    println!("(A phi, phi) = {:.4e}", op.quadratic_form(&phi)?);
    let m = op.matrix();
    println!(
        "nnz {}, bandwidth {}, |A|_inf {:.3}",
        m.nnz(),
        m.bandwidth(),
        m.norm_inf()
    );
    let mid = grid.len() / 2;
    for i in [0, mid] {
        let row: Vec<String> = m
            .row(i)
            .filter(|&(j, _)| j.abs_diff(i) <= 3)
            .map(|(j, v)| format!("{:+}:{v:.3}", j as i64 - i as i64))
            .collect();
        println!("row x={:+.3}: {}", grid.x(i), row.join(" "));
    }
    let mut mtx = Vec::new();
    m.write_triplets(&mut mtx)?;
    println!(
        "{}",
        String::from_utf8_lossy(&mtx)
            .lines()
            .take(4)
            .collect::<Vec<_>>()
            .join("\n")
    );
    Ok(())
}
