//! Coefficients `a, b, c` of the local operator `L_t` and declarative
//! scalar fields used to describe them in configuration files.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time modulation of a separable field `g(t) * s(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TimeProfile {
    #[default]
    Constant,
    /// `offset + slope * t`
    Affine { offset: f64, slope: f64 },
    /// `offset + scale * sqrt(t)`, Hölder-1/2 in time.
    Sqrt { offset: f64, scale: f64 },
    /// `cos(freq * t)`
    Cos { freq: f64 },
    /// `exp(-rate * t)`
    Exp { rate: f64 },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Constant => 1.0,
            Self::Affine { offset, slope } => offset + slope * t,
            Self::Sqrt { offset, scale } => offset + scale * t.max(0.0).sqrt(),
            Self::Cos { freq } => (freq * t).cos(),
            Self::Exp { rate } => (-rate * t).exp(),
        }
    }
}

/// Spatial shape of a separable field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpaceProfile {
    Constant {
        value: f64,
    },
    /// `scale * min(x^2, cap)`
    CappedQuadratic {
        scale: f64,
        cap: f64,
    },
    /// `amp * exp(-((x - center)/width)^2)`
    Gaussian {
        amp: f64,
        center: f64,
        width: f64,
    },
    /// `offset + amp * sin(freq * x)`
    Sine {
        offset: f64,
        amp: f64,
        freq: f64,
    },
}

impl SpaceProfile {
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::CappedQuadratic { scale, cap } => scale * (x * x).min(cap),
            Self::Gaussian { amp, center, width } => {
                let s = (x - center) / width;
                amp * (-s * s).exp()
            }
            Self::Sine { offset, amp, freq } => offset + amp * (freq * x).sin(),
        }
    }
}

/// Separable scalar field `time(t) * space(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub space: SpaceProfile,
    #[serde(default)]
    pub time: TimeProfile,
}

impl FieldSpec {
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(value: f64) -> Self {
        Self {
            space: SpaceProfile::Constant { value },
            time: TimeProfile::Constant,
        }
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        self.time.value(t) * self.space.value(x)
    }
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self::zero()
    }
}

/// Declarative coefficient triple as found in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CoefficientSpec {
    #[serde(default)]
    pub a: FieldSpec,
    #[serde(default)]
    pub b: FieldSpec,
    #[serde(default)]
    pub c: FieldSpec,
    /// Magnitude bound `K`; defaults to [`DEFAULT_BOUND`].
    #[serde(default)]
    pub bound: Option<f64>,
}

pub const DEFAULT_BOUND: f64 = 1e8;

pub type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Time-Hölder data `(C, gamma)`: `|a_t - a_s| + ... <= C |t-s|^gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeHolder {
    pub constant: f64,
    pub gamma: f64,
}

/// `a, b, c` as functions of `(t, x)` with a magnitude bound `K`.
#[derive(Clone)]
pub struct CoefficientSet {
    a: ScalarFn,
    b: ScalarFn,
    c: ScalarFn,
    bound: f64,
    holder: Option<TimeHolder>,
    zero_local: bool,
}

impl fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("bound", &self.bound)
            .field("holder", &self.holder)
            .field("zero_local", &self.zero_local)
            .finish_non_exhaustive()
    }
}

/// Coefficient values at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl CoefficientSet {
    pub fn new(
        a: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        b: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        c: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        bound: f64,
    ) -> Self {
        Self {
            a: Arc::new(a),
            b: Arc::new(b),
            c: Arc::new(c),
            bound,
            holder: None,
            zero_local: false,
        }
    }

    /// `a = b = c = 0`.
    pub fn zero() -> Self {
        let mut s = Self::new(|_, _| 0.0, |_, _| 0.0, |_, _| 0.0, 0.0);
        s.zero_local = true;
        s
    }

    pub fn from_spec(spec: &CoefficientSpec) -> Self {
        let (a, b, c) = (spec.a.clone(), spec.b.clone(), spec.c.clone());
        let zero = [&a, &b, &c].iter().all(|f| **f == FieldSpec::zero());
        let mut s = Self::new(
            move |t, x| a.value(t, x),
            move |t, x| b.value(t, x),
            move |t, x| c.value(t, x),
            spec.bound.unwrap_or(DEFAULT_BOUND),
        );
        s.zero_local = zero;
        s
    }

    pub fn with_holder(mut self, holder: TimeHolder) -> Self {
        self.holder = Some(holder);
        self
    }

    pub fn holder(&self) -> Option<TimeHolder> {
        self.holder
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// True if the coefficients are known to vanish identically.
    pub fn is_zero(&self) -> bool {
        self.zero_local
    }

    /// Evaluates and validates `a >= 0`, finiteness and `|.| <= K`.
    pub fn eval(&self, t: f64, x: f64) -> Result<LocalCoefficients> {
        let a = (self.a)(t, x);
        let b = (self.b)(t, x);
        let c = (self.c)(t, x);
        for (name, v) in [("a", a), ("b", b), ("c", c)] {
            if !v.is_finite() {
                return Err(Error::Coefficient {
                    name,
                    t,
                    x,
                    reason: format!("non-finite value {v}"),
                });
            }
            if v.abs() > self.bound {
                return Err(Error::Coefficient {
                    name,
                    t,
                    x,
                    reason: format!("|{v}| exceeds bound K = {}", self.bound),
                });
            }
        }
        if a < 0.0 {
            return Err(Error::Coefficient {
                name: "a",
                t,
                x,
                reason: format!("negative diffusion {a}"),
            });
        }
        Ok(LocalCoefficients { a, b, c })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_diffusion_is_rejected() {
        let c = CoefficientSet::new(|_, x| x, |_, _| 0.0, |_, _| 0.0, 10.0);
        assert!(c.eval(0.0, 0.5).is_ok());
        assert!(matches!(c.eval(0.0, -0.5), Err(Error::Coefficient { name: "a", .. })));
    }

    #[test]
    fn bound_and_finiteness_are_checked() {
        let c = CoefficientSet::new(|_, _| 1.0, |_, x| 1.0 / x, |_, _| 0.0, 5.0);
        assert!(matches!(c.eval(0.0, 0.0), Err(Error::Coefficient { name: "b", .. })));
        assert!(matches!(c.eval(0.0, 0.1), Err(Error::Coefficient { name: "b", .. })));
        assert!(c.eval(0.0, 1.0).is_ok());
    }

    #[test]
    fn separable_fields() {
        let f = FieldSpec {
            space: SpaceProfile::CappedQuadratic { scale: 1.0, cap: 1.0 },
            time: TimeProfile::Sqrt {
                offset: 1.0,
                scale: 2.0,
            },
        };
        assert_eq!(f.value(0.25, 0.5), 2.0 * 0.25);
        assert_eq!(f.value(0.0, 3.0), 1.0);
        let spec: CoefficientSpec = toml::from_str(
            "[a]\nspace = { kind = \"capped-quadratic\", scale = 1.0, cap = 1.0 }\n[c]\nspace = { kind = \"constant\", value = -1.0 }\n",
        )
        .unwrap();
        let set = CoefficientSet::from_spec(&spec);
        assert!(!set.is_zero());
        let v = set.eval(0.3, 2.0).unwrap();
        assert_eq!((v.a, v.b, v.c), (1.0, 0.0, -1.0));
        assert!(CoefficientSet::from_spec(&CoefficientSpec::default()).is_zero());
    }
}
