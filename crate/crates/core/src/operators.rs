//! The discrete operators `J^h = J^h_1 + J^h_2` and `L^h_t`, matrix-free
//! and assembled.
//!
//! Inside the unit ball each cell `k` contributes the collapsed stencil
//!
//! ```text
//! k >= 1:  ζ_k / (2 k² h²) · ( φ(x+kh) + φ(x+(k-1)h) + (2k-1) φ(x-h) - (2k+1) φ(x) )
//! k <= -1: ζ_k / (2 k² h²) · ( φ(x+kh) + φ(x+(k+1)h) + (2|k|-1) φ(x+h) - (2|k|+1) φ(x) )
//! ```
//!
//! which equals `ζ_k Σ_l θ_k^l δ_{-h}δ_h φ(x + s_k l h)` with
//! `θ_k^l = (2|k| - 2l - 1) / (2k²)`. Outside the unit ball the cell masses
//! `ν(B_k)` weight plain shifts.

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec, Spacing};
use crate::levy::LevyMeasure;
use crate::sparse::CsrMatrix;

/// `θ_k^l = ∫_{l/|k|}^{(l+1)/|k|} (1 - θ) dθ`.
pub fn theta(k: i64, l: i64) -> f64 {
    let m = k.abs();
    debug_assert!(m >= 1 && (0..m).contains(&l));
    (2 * m - 2 * l - 1) as f64 / (2 * m * m) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerCell {
    pub k: i64,
    pub zeta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCell {
    pub k: i64,
    pub mass: f64,
}

/// Cell data for `J^h` on one window.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilWeights {
    grid: GridSpec,
    inner: Vec<InnerCell>,
    tail: Vec<TailCell>,
    tail_diagonal: f64,
    k_max: u64,
    truncated_mass: f64,
}

impl StencilWeights {
    /// Tail cells with `1/h < |k| <= k_max` carry weight; only offsets that
    /// can land inside the window are stored as columns, the mass of the
    /// remaining ones enters the diagonal through the tail function.
    pub fn new(measure: &LevyMeasure, grid: GridSpec, k_max: u64) -> Result<Self> {
        let spacing = grid.spacing();
        let n = spacing.n() as i64;
        if (k_max as i64) < n {
            return Err(Error::Config(format!("K_max = {k_max} must be at least 1/h = {n}")));
        }
        let mut inner = Vec::with_capacity(2 * n as usize);
        for k in (-n..=n).filter(|&k| k != 0) {
            let zeta = measure.cell_second_moment(k, spacing)?;
            if zeta > 0.0 {
                inner.push(InnerCell { k, zeta });
            }
        }
        let reach = (grid.len() as i64 - 1).min(k_max as i64);
        let mut tail = Vec::new();
        let mut diagonal = 0.0;
        for m in (n + 1)..=reach {
            for k in [-m, m] {
                let mass = measure.cell_mass(k, spacing)?;
                if mass > 0.0 {
                    diagonal += mass;
                    tail.push(TailCell { k, mass });
                }
            }
        }
        tail.sort_by_key(|c| c.k);
        let h = spacing.h();
        if (k_max as i64) > reach {
            diagonal += measure.annulus_mass(reach.max(n) as f64 * h, k_max as f64 * h)?;
        }
        let truncated_mass = measure.tail_mass(k_max as f64 * h)?;
        Ok(Self {
            grid,
            inner,
            tail,
            tail_diagonal: diagonal,
            k_max,
            truncated_mass,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn spacing(&self) -> Spacing {
        self.grid.spacing()
    }

    pub fn inner(&self) -> &[InnerCell] {
        &self.inner
    }

    pub fn tail(&self) -> &[TailCell] {
        &self.tail
    }

    /// `Σ_{1/h < |k| <= K_max} ν(B_k)`, subtracted on the diagonal of `J^h_2`.
    pub fn tail_diagonal(&self) -> f64 {
        self.tail_diagonal
    }

    pub fn k_max(&self) -> u64 {
        self.k_max
    }

    /// `ν(|z| > K_max h)`, the mass dropped by truncation.
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    fn check(&self, phi: &GridFunction) -> Result<()> {
        if phi.spec().spacing() != self.spacing() {
            return Err(Error::GridMismatch(format!(
                "stencil weights built for h = 1/{}, grid function has h = 1/{}",
                self.spacing().n(),
                phi.spec().spacing().n()
            )));
        }
        phi.check_same_grid(&self.grid)
    }

    fn collapsed(&self, cell: &InnerCell) -> [(i64, f64); 4] {
        collapsed_stencil(cell.k, cell.zeta, self.spacing().h())
    }
}

/// Column offsets and weights of the collapsed stencil of cell `k`.
pub fn collapsed_stencil(k: i64, zeta: f64, h: f64) -> [(i64, f64); 4] {
    let m = k.abs();
    let w = zeta / (2.0 * (m * m) as f64 * h * h);
    let s = k.signum();
    [
        (k, w),
        (k - s, w),
        (-s, (2 * m - 1) as f64 * w),
        (0, -((2 * m + 1) as f64) * w),
    ]
}

/// `ζ Σ_l θ_k^l δ_{-h}δ_h φ(x_i + s_k l h)` for one cell, summed literally.
pub fn cell_double_sum(phi: &GridFunction, i: usize, k: i64, zeta: f64) -> f64 {
    let h2 = phi.spec().h() * phi.spec().h();
    let s = k.signum();
    let mut inner = 0.0;
    for l in 0..k.abs() {
        let c = s * l;
        let d2 = (phi.shifted(i, c + 1) - 2.0 * phi.shifted(i, c) + phi.shifted(i, c - 1)) / h2;
        inner += theta(k, l) * d2;
    }
    zeta * inner
}

/// `J^h_1 φ` through the collapsed four-point stencils.
pub fn apply_j1(phi: &GridFunction, weights: &StencilWeights) -> Result<GridFunction> {
    weights.check(phi)?;
    let stencils: Vec<_> = weights.inner.iter().map(|c| weights.collapsed(c)).collect();
    let mut out = GridFunction::zeros(*phi.spec());
    for (i, o) in out.values_mut().iter_mut().enumerate() {
        let mut s = 0.0;
        for st in &stencils {
            for &(off, w) in st {
                s += w * phi.shifted(i, off);
            }
        }
        *o = s;
    }
    Ok(out)
}

/// `J^h_1 φ` by the literal double sum over cells and `θ`-weighted second
/// differences. Quadratic in `1/h`; kept as a reference.
pub fn apply_j1_direct(phi: &GridFunction, measure: &LevyMeasure) -> Result<GridFunction> {
    let spacing = phi.spec().spacing();
    let n = spacing.n() as i64;
    let mut cells = Vec::new();
    for k in (-n..=n).filter(|&k| k != 0) {
        let zeta = measure.cell_second_moment(k, spacing)?;
        if zeta > 0.0 {
            cells.push((k, zeta));
        }
    }
    let mut out = GridFunction::zeros(*phi.spec());
    for (i, o) in out.values_mut().iter_mut().enumerate() {
        *o = cells.iter().map(|&(k, zeta)| cell_double_sum(phi, i, k, zeta)).sum();
    }
    Ok(out)
}

/// `J^h_2 φ = Σ_{1/h < |k| <= K_max} (φ(x + kh) - φ(x)) ν(B_k)`.
pub fn apply_j2(phi: &GridFunction, weights: &StencilWeights) -> Result<GridFunction> {
    weights.check(phi)?;
    let mut out = GridFunction::zeros(*phi.spec());
    let d = weights.tail_diagonal;
    for (i, o) in out.values_mut().iter_mut().enumerate() {
        let mut s = 0.0;
        for c in &weights.tail {
            s += c.mass * phi.shifted(i, c.k);
        }
        *o = s - d * phi.values()[i];
    }
    Ok(out)
}

/// `J^h φ`.
pub fn apply_jump(phi: &GridFunction, weights: &StencilWeights) -> Result<GridFunction> {
    let mut j = apply_j1(phi, weights)?;
    let j2 = apply_j2(phi, weights)?;
    for (a, b) in j.values_mut().iter_mut().zip(j2.values()) {
        *a += b;
    }
    Ok(j)
}

/// `L^h_t φ = a δ^hδ^h φ + b δ^h φ + c φ`.
pub fn apply_l(coeffs: &CoefficientSet, t: f64, phi: &GridFunction) -> Result<GridFunction> {
    let spec = *phi.spec();
    let h = spec.h();
    let mut out = GridFunction::zeros(spec);
    if coeffs.is_zero() {
        return Ok(out);
    }
    for (i, o) in out.values_mut().iter_mut().enumerate() {
        let lc = coeffs.eval(t, spec.x(i))?;
        let v = phi.values()[i];
        let wide = (phi.shifted(i, 2) - 2.0 * v + phi.shifted(i, -2)) / (4.0 * h * h);
        let sym = (phi.shifted(i, 1) - phi.shifted(i, -1)) / (2.0 * h);
        *o = lc.a * wide + lc.b * sym + lc.c * v;
    }
    Ok(out)
}

fn push_row(scratch: &mut [f64], touched: &mut Vec<usize>, push: &mut dyn FnMut(usize, f64)) {
    touched.sort_unstable();
    touched.dedup();
    for &c in touched.iter() {
        let v = scratch[c];
        if v != 0.0 {
            push(c, v);
        }
        scratch[c] = 0.0;
    }
    touched.clear();
}

/// Sparse row form of `J^h` on the window; out-of-window columns are dropped.
pub fn jump_matrix(weights: &StencilWeights) -> CsrMatrix {
    let grid = weights.grid;
    let len = grid.len();
    let stencils: Vec<_> = weights.inner.iter().map(|c| weights.collapsed(c)).collect();
    let mut scratch = vec![0.0; len];
    let mut touched = Vec::new();
    CsrMatrix::from_rows(len, |i, push| {
        let mut add = |off: i64, w: f64| {
            let j = i as i64 + off;
            if j >= 0 && (j as usize) < len {
                scratch[j as usize] += w;
                touched.push(j as usize);
            }
        };
        for st in &stencils {
            for &(off, w) in st {
                add(off, w);
            }
        }
        for c in &weights.tail {
            add(c.k, c.mass);
        }
        if weights.tail_diagonal != 0.0 {
            add(0, -weights.tail_diagonal);
        }
        push_row(&mut scratch, &mut touched, push);
    })
}

/// Sparse row form of `L^h_t`.
pub fn local_matrix(coeffs: &CoefficientSet, grid: GridSpec, t: f64) -> Result<CsrMatrix> {
    let len = grid.len();
    if coeffs.is_zero() {
        return Ok(CsrMatrix::zeros(len));
    }
    let h = grid.h();
    let lcs = (0..len)
        .map(|i| coeffs.eval(t, grid.x(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CsrMatrix::from_rows(len, |i, push| {
        let lc = lcs[i];
        let wide = lc.a / (4.0 * h * h);
        let sym = lc.b / (2.0 * h);
        let entries = [(-2, wide), (-1, -sym), (0, -2.0 * wide + lc.c), (1, sym), (2, wide)];
        for (off, w) in entries {
            let j = i as i64 + off;
            if j >= 0 && (j as usize) < len && w != 0.0 {
                push(j as usize, w);
            }
        }
    }))
}

/// `J^h` precomputed on one window: weights plus assembled matrix.
#[derive(Debug, Clone)]
pub struct JumpOperator {
    weights: StencilWeights,
    matrix: CsrMatrix,
}

impl JumpOperator {
    pub fn new(measure: &LevyMeasure, grid: GridSpec, k_max: u64) -> Result<Self> {
        let weights = StencilWeights::new(measure, grid, k_max)?;
        let matrix = jump_matrix(&weights);
        Ok(Self { weights, matrix })
    }

    pub fn weights(&self) -> &StencilWeights {
        &self.weights
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn grid(&self) -> &GridSpec {
        &self.weights.grid
    }
}

/// `L^h_t + J^h` at a fixed time, in sparse row form.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    t: f64,
    grid: GridSpec,
    matrix: CsrMatrix,
}

impl DiscreteOperator {
    pub fn at(jump: &JumpOperator, coeffs: &CoefficientSet, t: f64) -> Result<Self> {
        let grid = *jump.grid();
        let local = local_matrix(coeffs, grid, t)?;
        let matrix = if coeffs.is_zero() {
            jump.matrix.clone()
        } else {
            jump.matrix.linear_combination(1.0, &local, 1.0)?
        };
        Ok(Self { t, grid, matrix })
    }

    pub fn from_matrix(grid: GridSpec, t: f64, matrix: CsrMatrix) -> Result<Self> {
        if matrix.dim() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "matrix of dimension {} on a grid of {} points",
                matrix.dim(),
                grid.len()
            )));
        }
        Ok(Self { t, grid, matrix })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn apply(&self, phi: &GridFunction) -> Result<GridFunction> {
        phi.check_same_grid(&self.grid)?;
        GridFunction::from_values(self.grid, self.matrix.matvec(phi.values()))
    }

    /// `(A φ, φ)_{l2}`.
    pub fn quadratic_form(&self, phi: &GridFunction) -> Result<f64> {
        self.apply(phi)?.inner(phi)
    }
}

/// Assembles `L^h_t + J^h` on `grid`.
pub fn assemble(
    coeffs: &CoefficientSet,
    measure: &LevyMeasure,
    grid: GridSpec,
    t: f64,
    k_max: u64,
) -> Result<DiscreteOperator> {
    DiscreteOperator::at(&JumpOperator::new(measure, grid, k_max)?, coeffs, t)
}
