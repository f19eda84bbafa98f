//! High-accuracy oracles: the continuous operator `J` by adaptive
//! quadrature, compactly supported smooth profiles with analytic
//! derivatives, and manufactured problems built from them.
//!
//! `J φ(x)` is evaluated in split form,
//!
//! ```text
//! J φ(x) = ∫_{|z|<=1} ∫_0^1 (1-θ) z² φ''(x+θz) dθ ν(dz) + ∫_{|z|>1} (φ(x+z) - φ(x)) ν(dz)
//! ```
//!
//! so the small-jump integrand is bounded and the compensator never has to
//! be cancelled numerically.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::grid::{restrict, GridFunction, GridSpec};
use crate::levy::LevyMeasure;
use crate::problem::{ProblemSpec, Source};
use crate::quadrature::{self, Tolerance};

/// Spatial shape of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Shape {
    /// `exp(1 - 1/(1 - (x/r)^2))` on `|x| < r`.
    CinfBump { radius: f64 },
    /// `(1 - (x/r)^2)^p` on `|x| < r`; of class `C^(p-1)`.
    PolyBump { radius: f64, power: u32 },
    /// Constant in space (not compactly supported).
    Constant { value: f64 },
}

impl Shape {
    pub fn value(&self, x: f64) -> f64 {
        self.derivatives(x)[0]
    }

    pub fn d1(&self, x: f64) -> f64 {
        self.derivatives(x)[1]
    }

    pub fn d2(&self, x: f64) -> f64 {
        self.derivatives(x)[2]
    }

    /// `[φ, φ', φ'']` at `x`.
    pub fn derivatives(&self, x: f64) -> [f64; 3] {
        match *self {
            Shape::CinfBump { radius: r } => {
                let s = x / r;
                let q = 1.0 - s * s;
                if q <= 0.0 {
                    return [0.0; 3];
                }
                let p = (1.0 - 1.0 / q).exp();
                let a = -2.0 * s / (r * q * q);
                let da = -2.0 / (r * r) * (1.0 / (q * q) + 4.0 * s * s / (q * q * q));
                [p, p * a, p * (a * a + da)]
            }
            Shape::PolyBump { radius: r, power } => {
                let s = x / r;
                let q = 1.0 - s * s;
                if q <= 0.0 {
                    return [0.0; 3];
                }
                let pw = power as i32;
                let pf = power as f64;
                let v = q.powi(pw);
                let d1 = pf * q.powi(pw - 1) * (-2.0 * s / r);
                let d2 = -2.0 * pf / (r * r) * (q.powi(pw - 1) - 2.0 * (pf - 1.0) * s * s * q.powi(pw - 2));
                [v, d1, d2]
            }
            Shape::Constant { value } => [value, 0.0, 0.0],
        }
    }

    /// `r` with `φ = 0` for `|x| >= r`, if compactly supported.
    pub fn support_radius(&self) -> Option<f64> {
        match *self {
            Shape::CinfBump { radius } | Shape::PolyBump { radius, .. } => Some(radius),
            Shape::Constant { .. } => None,
        }
    }

    /// Number of continuous derivatives (`u32::MAX` for `C^∞`).
    pub fn smoothness(&self) -> u32 {
        match *self {
            Shape::CinfBump { .. } | Shape::Constant { .. } => u32::MAX,
            Shape::PolyBump { power, .. } => power.saturating_sub(1),
        }
    }
}

/// Time factor `g(t)` of a separable profile `u(t, x) = g(t) φ(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TimeFactor {
    #[default]
    One,
    ExpDecay {
        rate: f64,
    },
    Cos {
        freq: f64,
    },
}

impl TimeFactor {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeFactor::One => 1.0,
            TimeFactor::ExpDecay { rate } => (-rate * t).exp(),
            TimeFactor::Cos { freq } => (freq * t).cos(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            TimeFactor::One => 0.0,
            TimeFactor::ExpDecay { rate } => -rate * (-rate * t).exp(),
            TimeFactor::Cos { freq } => -freq * (freq * t).sin(),
        }
    }
}

/// `u(t, x) = g(t) φ(x)` with closed-form derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothProfile {
    pub shape: Shape,
    #[serde(default)]
    pub time: TimeFactor,
}

impl SmoothProfile {
    pub fn new(shape: Shape, time: TimeFactor) -> Self {
        Self { shape, time }
    }

    pub fn u(&self, t: f64, x: f64) -> f64 {
        self.time.value(t) * self.shape.value(x)
    }

    pub fn du_dt(&self, t: f64, x: f64) -> f64 {
        self.time.derivative(t) * self.shape.value(x)
    }

    pub fn du_dx(&self, t: f64, x: f64) -> f64 {
        self.time.value(t) * self.shape.d1(x)
    }

    pub fn d2u_dx2(&self, t: f64, x: f64) -> f64 {
        self.time.value(t) * self.shape.d2(x)
    }

    pub fn support_radius(&self) -> Option<f64> {
        self.shape.support_radius()
    }

    pub fn smoothness(&self) -> u32 {
        self.shape.smoothness()
    }
}

/// Named catalogue of the built-in profiles.
pub fn builtin_profiles() -> Vec<(String, SmoothProfile)> {
    let shapes = [
        ("cinf-bump", Shape::CinfBump { radius: 1.0 }),
        ("poly-bump", Shape::PolyBump { radius: 1.0, power: 6 }),
    ];
    let times = [
        ("steady", TimeFactor::One),
        ("decaying", TimeFactor::ExpDecay { rate: 1.0 }),
        ("oscillating", TimeFactor::Cos { freq: 1.0 }),
    ];
    let mut out = Vec::new();
    for (sn, shape) in shapes {
        for (tn, time) in times {
            out.push((format!("{sn}/{tn}"), SmoothProfile::new(shape, time)));
        }
    }
    out
}

fn inner_tolerance(quad_tol: f64) -> Tolerance {
    Tolerance::new(quad_tol * 1e-2, 1e-12)
}

/// `∫_0^1 (1-θ) φ''(x + θ z) dθ`.
fn theta_integral(shape: &Shape, x: f64, z: f64, tol: Tolerance) -> Result<f64> {
    if z == 0.0 {
        return Ok(0.5 * shape.d2(x));
    }
    let mut pts = vec![0.0, 1.0];
    if let Some(r) = shape.support_radius() {
        for edge in [-r, r] {
            let th = (edge - x) / z;
            if th > 0.0 && th < 1.0 {
                pts.push(th);
            }
        }
        // entirely outside the support
        let (a, b) = (x.min(x + z), x.max(x + z));
        if b <= -r || a >= r {
            return Ok(0.0);
        }
    }
    pts.sort_by(f64::total_cmp);
    Ok(quadrature::integrate_with_breaks(|th| (1.0 - th) * shape.d2(x + th * z), &pts, tol)?.value)
}

/// `J φ(x)` for a fixed spatial shape, to absolute accuracy about `quad_tol`.
pub fn continuous_j(shape: &Shape, x: f64, measure: &LevyMeasure, quad_tol: f64) -> Result<f64> {
    let Some(r) = shape.support_radius() else {
        // J annihilates constants
        return Ok(0.0);
    };
    let outer = Tolerance::new(0.25 * quad_tol, 1e-12);
    let inner = inner_tolerance(quad_tol);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let g = |z: f64| match theta_integral(shape, x, z, inner) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };

    // Small jumps: only z with x + θz reaching the support matter.
    let mut small = 0.0;
    if x - 1.0 < r && x + 1.0 > -r {
        small += measure.integrate_second_moment_on(0.0, 1.0, g, outer)?;
        small += measure.integrate_second_moment_on(-1.0, 0.0, g, outer)?;
    }
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }

    // Big jumps: ∫_{|z|>1} φ(x+z) ν(dz) - φ(x) μ0, the first integral
    // restricted to x + z inside the support.
    let (zlo, zhi) = (-r - x, r - x);
    let phi = |z: f64| shape.value(x + z);
    let mut big = 0.0;
    if zhi > 1.0 {
        big += measure.integrate_on(zlo.max(1.0), zhi, phi, outer)?;
    }
    if zlo < -1.0 {
        big += measure.integrate_on(zlo, zhi.min(-1.0), phi, outer)?;
    }
    let value = shape.value(x);
    if value != 0.0 {
        big -= value * measure.tail_mass(1.0)?;
    }
    Ok(small + big)
}

/// A problem whose exact solution is a given [`SmoothProfile`]; the forcing
/// `f = ∂_t u - L_t u - J u` is induced from it.
pub struct ManufacturedProblem {
    profile: SmoothProfile,
    coeffs: CoefficientSet,
    measure: LevyMeasure,
    quad_tol: f64,
    tables: Mutex<HashMap<GridSpec, Arc<Vec<f64>>>>,
}

impl std::fmt::Debug for ManufacturedProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ManufacturedProblem")
            .field("profile", &self.profile)
            .field("measure", &self.measure)
            .field("quad_tol", &self.quad_tol)
            .finish_non_exhaustive()
    }
}

impl ManufacturedProblem {
    pub fn new(profile: SmoothProfile, coeffs: CoefficientSet, measure: LevyMeasure, quad_tol: f64) -> Self {
        Self {
            profile,
            coeffs,
            measure,
            quad_tol,
            tables: Mutex::new(HashMap::new()),
        }
    }

    pub fn profile(&self) -> &SmoothProfile {
        &self.profile
    }

    pub fn measure(&self) -> &LevyMeasure {
        &self.measure
    }

    pub fn coeffs(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    pub fn exact_on(&self, t: f64, grid: &GridSpec) -> Result<GridFunction> {
        restrict(|x| self.profile.u(t, x), *grid)
    }

    /// `f(t, x)` computed pointwise (one quadrature per call).
    pub fn forcing(&self, t: f64, x: f64) -> Result<f64> {
        let jp = continuous_j(&self.profile.shape, x, &self.measure, self.quad_tol)?;
        self.forcing_with(t, x, jp)
    }

    fn forcing_with(&self, t: f64, x: f64, jp: f64) -> Result<f64> {
        let lc = self.coeffs.eval(t, x)?;
        let [p, p1, p2] = self.profile.shape.derivatives(x);
        let g = self.profile.time.value(t);
        let dg = self.profile.time.derivative(t);
        Ok(dg * p - g * (lc.a * p2 + lc.b * p1 + lc.c * p) - g * jp)
    }

    /// `J φ` of the spatial shape at every point of `grid`, cached per grid.
    pub fn jump_table(&self, grid: &GridSpec) -> Result<Arc<Vec<f64>>> {
        if let Some(t) = self.tables.lock().expect("table lock").get(grid) {
            return Ok(t.clone());
        }
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| continuous_j(&self.profile.shape, grid.x(i), &self.measure, self.quad_tol))
            .collect::<Result<Vec<_>>>()?;
        let table = Arc::new(values);
        self.tables.lock().expect("table lock").insert(*grid, table.clone());
        Ok(table)
    }

    /// Packages the manufactured data as a [`ProblemSpec`] on `[0, horizon]`.
    pub fn into_problem(self: Arc<Self>, horizon: f64, gamma: f64) -> ProblemSpec {
        let profile = self.profile;
        let coeffs = self.coeffs.clone();
        ProblemSpec::new(coeffs, self, move |x| profile.u(0.0, x), horizon).with_gamma(gamma)
    }
}

impl Source for ManufacturedProblem {
    fn sample(&self, t: f64, grid: &GridSpec) -> Result<GridFunction> {
        let table = self.jump_table(grid)?;
        let values = (0..grid.len())
            .map(|i| self.forcing_with(t, grid.x(i), table[i]))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::from_values(*grid, values)
    }
}
