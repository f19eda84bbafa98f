//! Lévy measures on the real line and the cell quantities that weight the
//! discrete nonlocal operator.
//!
//! For a spacing `h = 1/n` the cells are
//!
//! ```text
//! B_k = ((k-1)h, kh]   for k >= 1
//! B_k = [kh, (k+1)h)   for k <= -1
//! ```
//!
//! Positive intervals are treated as left-open/right-closed and negative
//! intervals as left-closed/right-open throughout, so atoms sitting on a
//! cell boundary are assigned exactly as the cells above prescribe.

use libm::erfc;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Spacing;
use crate::quadrature::{self, Tolerance};

/// Jump-size density of a compound-Poisson measure, normalised to total mass one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum JumpDensity {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, std: f64 },
}

/// Declarative form of a measure, as it appears in study configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum MeasureSpec {
    /// Symmetric density `c |z|^(-2-alpha)`, `alpha` in (0, 1).
    PowerLaw { c: f64, alpha: f64 },
    /// Symmetric density `c |z|^(-2-alpha) exp(-lambda |z|)`.
    Tempered { c: f64, alpha: f64, lambda: f64 },
    /// `rate` times a probability density.
    CompoundPoisson { rate: f64, density: JumpDensity },
    /// Finitely many atoms `(location, mass)`; the empty list is the zero measure.
    Atomic { atoms: Vec<(f64, f64)> },
}

/// A validated Lévy measure. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureSpec", into = "MeasureSpec")]
pub struct LevyMeasure {
    spec: MeasureSpec,
}

impl TryFrom<MeasureSpec> for LevyMeasure {
    type Error = Error;

    fn try_from(spec: MeasureSpec) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidMeasure(msg));
        match &spec {
            MeasureSpec::PowerLaw { c, alpha } => {
                if !(*c >= 0.0 && c.is_finite()) {
                    return bad(format!("power-law constant must be finite and >= 0, got {c}"));
                }
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return bad(format!("power-law alpha must lie in (0,1), got {alpha}"));
                }
            }
            MeasureSpec::Tempered { c, alpha, lambda } => {
                if !(*c >= 0.0 && c.is_finite()) {
                    return bad(format!("tempered constant must be finite and >= 0, got {c}"));
                }
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return bad(format!("tempered alpha must lie in (0,1), got {alpha}"));
                }
                if !(*lambda >= 0.0 && lambda.is_finite()) {
                    return bad(format!("tempering rate must be finite and >= 0, got {lambda}"));
                }
            }
            MeasureSpec::CompoundPoisson { rate, density } => {
                if !(*rate >= 0.0 && rate.is_finite()) {
                    return bad(format!("jump rate must be finite and >= 0, got {rate}"));
                }
                match density {
                    JumpDensity::Uniform { lo, hi } => {
                        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                            return bad(format!("uniform jump density needs lo < hi, got [{lo}, {hi}]"));
                        }
                    }
                    JumpDensity::Normal { mean, std } => {
                        if !(mean.is_finite() && *std > 0.0 && std.is_finite()) {
                            return bad(format!("normal jump density needs std > 0, got {std}"));
                        }
                    }
                }
            }
            MeasureSpec::Atomic { atoms } => {
                for &(z, m) in atoms {
                    if z == 0.0 {
                        return bad("atoms at the origin are not allowed".into());
                    }
                    if !z.is_finite() {
                        return bad(format!("atom location must be finite, got {z}"));
                    }
                    if !(m > 0.0 && m.is_finite()) {
                        return bad(format!("atom mass must be finite and > 0, got {m}"));
                    }
                }
            }
        }
        Ok(Self { spec })
    }
}

impl From<LevyMeasure> for MeasureSpec {
    fn from(m: LevyMeasure) -> Self {
        m.spec
    }
}

/// A cell `B_k` for a given spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub k: i64,
    pub lo: f64,
    pub hi: f64,
}

impl Cell {
    pub fn new(k: i64, spacing: Spacing) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidCell);
        }
        let n = spacing.n() as f64;
        let (lo, hi) = if k >= 1 {
            ((k - 1) as f64 / n, k as f64 / n)
        } else {
            (k as f64 / n, (k + 1) as f64 / n)
        };
        Ok(Self { k, lo, hi })
    }

    /// Half-open membership: right-closed for `k >= 1`, left-closed for `k <= -1`.
    pub fn contains(&self, z: f64) -> bool {
        if self.k >= 1 {
            self.lo < z && z <= self.hi
        } else {
            self.lo <= z && z < self.hi
        }
    }
}

/// `mu0 = nu(R \ [-1,1])`, `mu2 = ∫_{|z|<=1} z^2 nu(dz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalMoments {
    pub mu0: f64,
    pub mu2: f64,
}

/// Default hard cap on the tail truncation index.
pub const DEFAULT_TAIL_CAP: u64 = 1 << 40;

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Membership of `z` in a signed interval (right-closed if positive, left-closed if negative).
fn in_signed(lo: f64, hi: f64, z: f64) -> bool {
    if hi > 0.0 {
        lo < z && z <= hi
    } else {
        lo <= z && z < hi
    }
}

impl LevyMeasure {
    pub fn new(spec: MeasureSpec) -> Result<Self> {
        Self::try_from(spec)
    }

    pub fn power_law(c: f64, alpha: f64) -> Result<Self> {
        Self::new(MeasureSpec::PowerLaw { c, alpha })
    }

    pub fn tempered(c: f64, alpha: f64, lambda: f64) -> Result<Self> {
        Self::new(MeasureSpec::Tempered { c, alpha, lambda })
    }

    pub fn compound_poisson(rate: f64, density: JumpDensity) -> Result<Self> {
        Self::new(MeasureSpec::CompoundPoisson { rate, density })
    }

    pub fn atomic(atoms: impl Into<Vec<(f64, f64)>>) -> Result<Self> {
        Self::new(MeasureSpec::Atomic { atoms: atoms.into() })
    }

    pub fn zero() -> Self {
        Self {
            spec: MeasureSpec::Atomic { atoms: Vec::new() },
        }
    }

    pub fn spec(&self) -> &MeasureSpec {
        &self.spec
    }

    /// True when `nu(R) = ∞`.
    pub fn infinite_activity(&self) -> bool {
        matches!(
            self.spec,
            MeasureSpec::PowerLaw { c, .. } | MeasureSpec::Tempered { c, .. } if c > 0.0
        )
    }

    /// Smallest `r` with `nu(|z| > r) = 0`, if the support is bounded.
    pub fn support_radius(&self) -> Option<f64> {
        match &self.spec {
            MeasureSpec::PowerLaw { c, .. } | MeasureSpec::Tempered { c, .. } => (*c == 0.0).then_some(0.0),
            MeasureSpec::CompoundPoisson { rate, density } => match density {
                _ if *rate == 0.0 => Some(0.0),
                JumpDensity::Uniform { lo, hi } => Some(lo.abs().max(hi.abs())),
                JumpDensity::Normal { .. } => None,
            },
            MeasureSpec::Atomic { atoms } => Some(atoms.iter().map(|(z, _)| z.abs()).fold(0.0, f64::max)),
        }
    }

    /// Locations where the measure is not smooth (atoms, density edges, the origin).
    pub fn singular_points(&self) -> Vec<f64> {
        match &self.spec {
            MeasureSpec::CompoundPoisson {
                density: JumpDensity::Uniform { lo, hi },
                ..
            } => vec![*lo, *hi],
            MeasureSpec::Atomic { atoms } => atoms.iter().map(|a| a.0).collect(),
            _ => Vec::new(),
        }
    }

    /// `nu(B_k)`. Returns `+∞` for `|k| = 1` under infinite-activity families.
    pub fn cell_mass(&self, k: i64, spacing: Spacing) -> Result<f64> {
        let cell = Cell::new(k, spacing)?;
        self.mass_on(cell.lo, cell.hi, Tolerance::cell_default())
    }

    /// `ζ_k = ∫_{B_k} z^2 nu(dz)`.
    pub fn cell_second_moment(&self, k: i64, spacing: Spacing) -> Result<f64> {
        let cell = Cell::new(k, spacing)?;
        self.second_moment_on(cell.lo, cell.hi, Tolerance::cell_default())
    }

    pub fn global_moments(&self) -> Result<GlobalMoments> {
        let tol = Tolerance::cell_default();
        let mu2 = self.second_moment_on(0.0, 1.0, tol)? + self.second_moment_on(-1.0, 0.0, tol)?;
        let mu0 = self.tail_mass(1.0)?;
        Ok(GlobalMoments { mu0, mu2 })
    }

    /// `nu(|z| > r)` for `r > 0`.
    pub fn tail_mass(&self, r: f64) -> Result<f64> {
        debug_assert!(r > 0.0);
        match &self.spec {
            MeasureSpec::PowerLaw { c, alpha } => Ok(2.0 * c * r.powf(-1.0 - alpha) / (1.0 + alpha)),
            MeasureSpec::Tempered { c, alpha, lambda } => {
                if *c == 0.0 {
                    return Ok(0.0);
                }
                // z = r/u maps (r, ∞) onto (0, 1).
                let (alpha, lambda) = (*alpha, *lambda);
                let est = quadrature::integrate(
                    |u| {
                        if u <= 0.0 {
                            0.0
                        } else {
                            u.powf(alpha) * (-lambda * r / u).exp()
                        }
                    },
                    0.0,
                    1.0,
                    Tolerance::cell_default(),
                )?;
                Ok(2.0 * c * r.powf(-1.0 - alpha) * est.value)
            }
            MeasureSpec::CompoundPoisson { rate, density } => Ok(match density {
                JumpDensity::Uniform { lo, hi } => {
                    let width = hi - lo;
                    let right = (hi - r.max(*lo)).max(0.0);
                    let left = ((-r).min(*hi) - lo).max(0.0);
                    rate * (right + left) / width
                }
                JumpDensity::Normal { mean, std } => {
                    let upper = 0.5 * erfc((r - mean) / (std * std::f64::consts::SQRT_2));
                    let lower = normal_cdf((-r - mean) / std);
                    rate * (upper + lower)
                }
            }),
            MeasureSpec::Atomic { atoms } => Ok(atoms.iter().filter(|(z, _)| z.abs() > r).map(|(_, m)| m).sum()),
        }
    }

    /// `nu(lo < |z| <= hi)` for `0 < lo <= hi`, via the tail function.
    pub fn annulus_mass(&self, lo: f64, hi: f64) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        Ok((self.tail_mass(lo)? - self.tail_mass(hi)?).max(0.0))
    }

    /// Smallest `K >= 1/h` with `nu(|z| > K h) <= eps_tail`, or an error if
    /// `cap` is reached first.
    pub fn tail_truncation_index(&self, spacing: Spacing, eps_tail: f64, cap: u64) -> Result<u64> {
        if !(eps_tail > 0.0) {
            return Err(Error::Config(format!(
                "tail tolerance must be positive, got {eps_tail}"
            )));
        }
        let n = spacing.n() as u64;
        let tail = |k: u64| self.tail_mass(k as f64 / n as f64);
        let start = n.min(cap);
        if tail(start)? <= eps_tail {
            return Ok(start);
        }
        // Exponential bracket, then bisection on the monotone tail.
        let mut lo = start;
        let mut hi = start;
        loop {
            if hi >= cap {
                let residual = tail(cap)?;
                if residual > eps_tail {
                    return Err(Error::TailTruncation {
                        cap,
                        residual,
                        tolerance: eps_tail,
                    });
                }
                hi = cap;
                break;
            }
            hi = hi.saturating_mul(2).min(cap);
            if tail(hi)? <= eps_tail {
                break;
            }
            lo = hi;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if tail(mid)? <= eps_tail {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// `nu` of a signed interval (`(lo, hi]` if positive, `[lo, hi)` if negative).
    pub(crate) fn mass_on(&self, lo: f64, hi: f64, tol: Tolerance) -> Result<f64> {
        debug_assert!(lo < hi && (lo >= 0.0 || hi <= 0.0));
        let (a, b) = (lo.abs().min(hi.abs()), lo.abs().max(hi.abs()));
        match &self.spec {
            MeasureSpec::PowerLaw { c, alpha } => {
                if *c == 0.0 {
                    Ok(0.0)
                } else if a == 0.0 {
                    Ok(f64::INFINITY)
                } else {
                    Ok(c * (a.powf(-1.0 - alpha) - b.powf(-1.0 - alpha)) / (1.0 + alpha))
                }
            }
            MeasureSpec::Tempered { c, alpha, lambda } => {
                if *c == 0.0 {
                    return Ok(0.0);
                }
                if a == 0.0 {
                    return Ok(f64::INFINITY);
                }
                let (alpha, lambda) = (*alpha, *lambda);
                let est = quadrature::integrate(|z| z.powf(-2.0 - alpha) * (-lambda * z).exp(), a, b, tol)?;
                Ok(c * est.value)
            }
            MeasureSpec::CompoundPoisson { rate, density } => Ok(match density {
                JumpDensity::Uniform { lo: s, hi: e } => {
                    let overlap = (hi.min(*e) - lo.max(*s)).max(0.0);
                    rate * overlap / (e - s)
                }
                JumpDensity::Normal { mean, std } => {
                    let u = (hi - mean) / std;
                    let l = (lo - mean) / std;
                    // Use the upper tail when both points are to the right to avoid cancellation.
                    let p = if l > 0.0 {
                        normal_cdf(-l) - normal_cdf(-u)
                    } else {
                        normal_cdf(u) - normal_cdf(l)
                    };
                    rate * p.max(0.0)
                }
            }),
            MeasureSpec::Atomic { atoms } => Ok(atoms
                .iter()
                .filter(|(z, _)| in_signed(lo, hi, *z))
                .map(|(_, m)| m)
                .sum()),
        }
    }

    /// `∫ z^2 nu(dz)` over a signed interval.
    pub(crate) fn second_moment_on(&self, lo: f64, hi: f64, tol: Tolerance) -> Result<f64> {
        debug_assert!(lo < hi && (lo >= 0.0 || hi <= 0.0));
        let (a, b) = (lo.abs().min(hi.abs()), lo.abs().max(hi.abs()));
        match &self.spec {
            MeasureSpec::PowerLaw { c, alpha } => Ok(c * (b.powf(1.0 - alpha) - a.powf(1.0 - alpha)) / (1.0 - alpha)),
            MeasureSpec::CompoundPoisson {
                rate,
                density: JumpDensity::Uniform { lo: s, hi: e },
            } => {
                let (l, u) = (lo.max(*s), hi.min(*e));
                if u <= l {
                    return Ok(0.0);
                }
                Ok(rate / (e - s) * (u * u * u - l * l * l) / 3.0)
            }
            MeasureSpec::CompoundPoisson {
                rate,
                density: JumpDensity::Normal { mean, std },
            } => {
                let (al, be) = ((lo - mean) / std, (hi - mean) / std);
                let mass = if al > 0.0 {
                    normal_cdf(-al) - normal_cdf(-be)
                } else {
                    normal_cdf(be) - normal_cdf(al)
                };
                let v = (mean * mean + std * std) * mass
                    - 2.0 * mean * std * (normal_pdf(be) - normal_pdf(al))
                    - std * std * (be * normal_pdf(be) - al * normal_pdf(al));
                Ok(rate * v.max(0.0))
            }
            _ => self.integrate_second_moment_on(lo, hi, |_| 1.0, tol),
        }
    }

    /// `∫ g(z) z^2 nu(dz)` over a signed interval. `g` must be bounded; the
    /// interval may touch the origin even for infinite-activity families.
    pub fn integrate_second_moment_on<G: FnMut(f64) -> f64>(
        &self,
        lo: f64,
        hi: f64,
        mut g: G,
        tol: Tolerance,
    ) -> Result<f64> {
        debug_assert!(lo < hi && (lo >= 0.0 || hi <= 0.0));
        let sign = if hi > 0.0 { 1.0 } else { -1.0 };
        let (a, b) = (lo.abs().min(hi.abs()), lo.abs().max(hi.abs()));
        match &self.spec {
            MeasureSpec::PowerLaw { c, alpha } => self.stable_like(*c, *alpha, 0.0, a, b, sign, g, tol),
            MeasureSpec::Tempered { c, alpha, lambda } => self.stable_like(*c, *alpha, *lambda, a, b, sign, g, tol),
            MeasureSpec::CompoundPoisson { .. } => self.integrate_on(lo, hi, |z| z * z * g(z), tol),
            MeasureSpec::Atomic { atoms } => Ok(atoms
                .iter()
                .filter(|(z, _)| in_signed(lo, hi, *z))
                .map(|&(z, m)| m * z * z * g(z))
                .sum()),
        }
    }

    // ∫_a^b g(sign·z) z^-alpha c e^{-lambda z} dz with w = z^(1-alpha), which
    // removes the singularity at the origin: dz = p w^(p-1) dw, p = 1/(1-alpha).
    #[allow(clippy::too_many_arguments)]
    fn stable_like<G: FnMut(f64) -> f64>(
        &self,
        c: f64,
        alpha: f64,
        lambda: f64,
        a: f64,
        b: f64,
        sign: f64,
        mut g: G,
        tol: Tolerance,
    ) -> Result<f64> {
        if c == 0.0 {
            return Ok(0.0);
        }
        let q = 1.0 - alpha;
        let p = 1.0 / q;
        let est = quadrature::integrate(
            |w| {
                let z = w.powf(p);
                p * g(sign * z) * (-lambda * z).exp()
            },
            a.powf(q),
            b.powf(q),
            tol,
        )?;
        Ok(c * est.value)
    }

    /// `∫ f(z) nu(dz)` over a finite signed interval. For infinite-activity
    /// families the interval must stay away from the origin.
    pub fn integrate_on<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F, tol: Tolerance) -> Result<f64> {
        debug_assert!(lo < hi && (lo >= 0.0 || hi <= 0.0));
        match &self.spec {
            MeasureSpec::PowerLaw { c, alpha } | MeasureSpec::Tempered { c, alpha, .. } => {
                if *c == 0.0 {
                    return Ok(0.0);
                }
                if lo == 0.0 || hi == 0.0 {
                    return Err(Error::InvalidMeasure(
                        "integral of a general function against an infinite-activity measure must avoid the origin"
                            .into(),
                    ));
                }
                let lambda = match self.spec {
                    MeasureSpec::Tempered { lambda, .. } => lambda,
                    _ => 0.0,
                };
                let alpha = *alpha;
                let est = quadrature::integrate(
                    |z| f(z) * z.abs().powf(-2.0 - alpha) * (-lambda * z.abs()).exp(),
                    lo,
                    hi,
                    tol,
                )?;
                Ok(c * est.value)
            }
            MeasureSpec::CompoundPoisson { rate, density } => {
                let est = match density {
                    JumpDensity::Uniform { lo: s, hi: e } => {
                        let (l, u) = (lo.max(*s), hi.min(*e));
                        if u <= l {
                            return Ok(0.0);
                        }
                        let inv = 1.0 / (e - s);
                        quadrature::integrate(|z| f(z) * inv, l, u, tol)?
                    }
                    JumpDensity::Normal { mean, std } => {
                        let (mean, std) = (*mean, *std);
                        quadrature::integrate(|z| f(z) * normal_pdf((z - mean) / std) / std, lo, hi, tol)?
                    }
                };
                Ok(rate * est.value)
            }
            MeasureSpec::Atomic { atoms } => Ok(atoms
                .iter()
                .filter(|(z, _)| in_signed(lo, hi, *z))
                .map(|&(z, m)| m * f(z))
                .sum()),
        }
    }
}
