//! `|J^h phi - J phi|_sup` against the quadrature oracle for bumps of growing
//! radius: the first-order rate only shows once the bump's edge layer is
//! resolved by the ladder.
//!
//! cargo run --release --example consistency

use levyfd::grid::{GridSpec, Spacing};
use levyfd::harness::checks::consistency_error;
use levyfd::harness::fit_rate;
use levyfd::levy::{LevyMeasure, DEFAULT_TAIL_CAP};
use levyfd::reference::Shape;

fn main() -> levyfd::Result<()> {
    let measure = LevyMeasure::power_law(1.0, 0.5)?;
    for radius in [1.0, 4.0, 16.0] {
        let shape = Shape::CinfBump { radius };
        let mut levels = Vec::new();
        for n in [8, 16, 32, 64] {
            let grid = GridSpec::new(Spacing::new(n)?, radius + 2.0)?;
            let k_max = measure.tail_truncation_index(grid.spacing(), 1e-10, DEFAULT_TAIL_CAP)?;
            levels.push((grid.h(), consistency_error(&shape, &measure, grid, k_max, 1e-10)?));
        }
        let errs: Vec<String> = levels.iter().map(|l| format!("{:.2e}", l.1)).collect();
        println!("radius {radius:>4}: [{}]  {:?}", errs.join(", "), fit_rate(&levels));
    }
    Ok(())
}
