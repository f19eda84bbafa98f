//! Cell quantities of the built-in Lévy measures: masses, second moments,
//! tail masses and the truncation index `K_max` each spacing needs.
//!
//! cargo run --example measures

use levyfd::grid::Spacing;
use levyfd::levy::{JumpDensity, LevyMeasure, DEFAULT_TAIL_CAP};

fn main() -> levyfd::Result<()> {
    let measures = [
        ("power-law c=1 alpha=0.5", LevyMeasure::power_law(1.0, 0.5)?),
        ("tempered c=1 alpha=0.5 lambda=1", LevyMeasure::tempered(1.0, 0.5, 1.0)?),
        (
            "compound Poisson rate=2 N(0.2, 0.6)",
            LevyMeasure::compound_poisson(2.0, JumpDensity::Normal { mean: 0.2, std: 0.6 })?,
        ),
        (
            "atoms at -0.25 and 1.5",
            LevyMeasure::atomic([(-0.25, 1.0), (1.5, 0.5)])?,
        ),
    ];
    let h = Spacing::new(4)?;
    for (name, m) in &measures {
        let g = m.global_moments()?;
        println!("{name}");
        println!(
            "  mass outside (-1,1): {:.6e}   second moment inside: {:.6e}",
            g.mu0, g.mu2
        );
        println!("  tail mass beyond 2: {:.6e}", m.tail_mass(2.0)?);
        println!("  cells at h = 1/4:");
        for k in [-4i64, -1, 1, 2, 4, 5, 8] {
            println!(
                "    k={k:>3}  nu(B_k) = {:.6e}  zeta_k = {:.6e}",
                m.cell_mass(k, h)?,
                m.cell_second_moment(k, h)?
            );
        }
        for n in [8, 32, 128] {
            let k = m.tail_truncation_index(Spacing::new(n)?, 1e-10, DEFAULT_TAIL_CAP)?;
            println!("  K_max(h = 1/{n}) = {k}  (reach {:.3})", k as f64 / n as f64);
        }
    }
    Ok(())
}
