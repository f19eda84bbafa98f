use std::fmt;
use std::sync::Arc;

use crate::coefficients::CoefficientSet;
use crate::error::Result;
use crate::grid::{restrict, GridFunction, GridSpec};

/// Source term `f_t` sampled on a grid.
pub trait Source: Send + Sync {
    fn sample(&self, t: f64, grid: &GridSpec) -> Result<GridFunction>;

    /// True if `f ≡ 0`; lets solvers skip sampling.
    fn is_zero(&self) -> bool {
        false
    }
}

pub struct ZeroSource;

impl Source for ZeroSource {
    fn sample(&self, _t: f64, grid: &GridSpec) -> Result<GridFunction> {
        Ok(GridFunction::zeros(*grid))
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// Pointwise source `f(t, x)`.
pub struct FnSource<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Send + Sync> Source for FnSource<F> {
    fn sample(&self, t: f64, grid: &GridSpec) -> Result<GridFunction> {
        restrict(|x| (self.0)(t, x), *grid)
    }
}

/// `du = ((L_t + J) u + f) dt` on `[0, T]`, `u_0 = ψ`.
#[derive(Clone)]
pub struct ProblemSpec {
    pub coeffs: CoefficientSet,
    pub source: Arc<dyn Source>,
    pub initial: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub horizon: f64,
    /// Time-Hölder exponent of the data.
    pub gamma: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("coeffs", &self.coeffs)
            .field("source_is_zero", &self.source.is_zero())
            .field("horizon", &self.horizon)
            .field("gamma", &self.gamma)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn new(
        coeffs: CoefficientSet,
        source: Arc<dyn Source>,
        initial: impl Fn(f64) -> f64 + Send + Sync + 'static,
        horizon: f64,
    ) -> Self {
        Self {
            coeffs,
            source,
            initial: Arc::new(initial),
            horizon,
            gamma: 1.0,
        }
    }

    /// Homogeneous problem (`f = 0`).
    pub fn homogeneous(
        coeffs: CoefficientSet,
        initial: impl Fn(f64) -> f64 + Send + Sync + 'static,
        horizon: f64,
    ) -> Self {
        Self::new(coeffs, Arc::new(ZeroSource), initial, horizon)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn initial_on(&self, grid: &GridSpec) -> Result<GridFunction> {
        let psi = self.initial.clone();
        restrict(move |x| psi(x), *grid)
    }
}
