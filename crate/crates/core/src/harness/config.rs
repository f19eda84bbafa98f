//! Study configuration, read from TOML. Every field has a default, so an
//! empty file describes the degenerate power-law study.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientSet, CoefficientSpec, FieldSpec, SpaceProfile};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Spacing};
use crate::levy::{LevyMeasure, DEFAULT_TAIL_CAP};
use crate::reference::{Shape, SmoothProfile, TimeFactor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub profile: Shape,
    pub time_factor: TimeFactor,
    pub measure: LevyMeasure,
    pub coefficients: CoefficientSpec,
    pub horizon: f64,
    /// Time-Hölder exponent of the data.
    pub gamma: f64,
    /// Window radius; `r_u + 2` when absent.
    pub radius: Option<f64>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            profile: Shape::CinfBump { radius: 1.0 },
            time_factor: TimeFactor::Cos { freq: 2.0 },
            measure: LevyMeasure::power_law(1.0, 0.5).expect("valid measure"),
            coefficients: CoefficientSpec {
                a: FieldSpec {
                    space: SpaceProfile::CappedQuadratic { scale: 1.0, cap: 1.0 },
                    time: Default::default(),
                },
                ..Default::default()
            },
            horizon: 0.5,
            gamma: 1.0,
            radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpaceLadder {
    /// `n` values, `h = 1/n`.
    pub spacings: Vec<u32>,
    /// Snapshot times as fractions of the horizon.
    pub snapshots: Vec<f64>,
    pub dt_fine: Option<f64>,
    pub stability_factor: f64,
}

impl Default for SpaceLadder {
    fn default() -> Self {
        Self {
            spacings: vec![8, 16, 32, 64],
            snapshots: vec![0.25, 0.5, 0.75, 1.0],
            dt_fine: None,
            stability_factor: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeLadder {
    /// Fixed `n` of the spatial grid.
    pub spacing: u32,
    /// Step counts of the implicit runs.
    pub steps: Vec<usize>,
    pub dt_fine: Option<f64>,
    pub stability_factor: f64,
}

impl Default for TimeLadder {
    fn default() -> Self {
        Self {
            spacing: 32,
            steps: vec![8, 16, 32, 64],
            dt_fine: None,
            stability_factor: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub eps_tail: f64,
    pub quad_tol: f64,
    pub solver_tol: f64,
    pub tail_cap: u64,
    /// Direct solves up to this many grid points.
    pub direct_limit: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps_tail: 1e-10,
            quad_tol: 1e-10,
            solver_tol: 1e-10,
            tail_cap: DEFAULT_TAIL_CAP,
            direct_limit: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub space_slope: f64,
    /// Defaults to 0.9 for `gamma >= 1` and `0.4 gamma` otherwise.
    pub time_slope: Option<f64>,
    pub min_r2: Option<f64>,
    /// Errors below `budget_factor × budget` are budget-contaminated.
    pub budget_factor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            space_slope: 0.9,
            time_slope: None,
            min_r2: None,
            budget_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub samples: usize,
    pub spacings: Vec<u32>,
    pub collapse_samples: usize,
    pub collapse_spacings: Vec<u32>,
    pub collapse_tol: f64,
    pub definiteness_tol: f64,
    pub theta_max_k: i64,
    /// Profile of the consistency check; wide enough that the ladder is
    /// asymptotic (the edge layer of a bump of radius `r` is about `0.02 r` wide).
    pub consistency_shape: Shape,
    pub consistency_spacings: Vec<u32>,
    pub consistency_slope: f64,
    pub consistency_r2: f64,
    pub blowup_shape: Shape,
    pub blowup_spacings: Vec<u32>,
    pub blowup_variation: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            spacings: vec![8, 16, 32],
            collapse_samples: 50,
            collapse_spacings: vec![4, 8, 16, 32],
            collapse_tol: 1e-12,
            definiteness_tol: 1e-10,
            theta_max_k: 64,
            consistency_shape: Shape::CinfBump { radius: 16.0 },
            consistency_spacings: vec![8, 16, 32, 64],
            consistency_slope: 0.9,
            consistency_r2: 0.98,
            blowup_shape: Shape::CinfBump { radius: 1.0 },
            blowup_spacings: vec![8, 16, 32, 64],
            blowup_variation: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub name: String,
    pub seed: u64,
    pub workers: Option<usize>,
    pub problem: ProblemConfig,
    pub space: SpaceLadder,
    pub time: TimeLadder,
    pub tolerances: Tolerances,
    pub thresholds: Thresholds,
    pub checks: CheckConfig,
}

impl StudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        if !(p.horizon > 0.0 && p.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {}", p.horizon)));
        }
        if !(p.gamma > 0.0) {
            return Err(Error::Config(format!("gamma must be positive, got {}", p.gamma)));
        }
        let r_u = p.profile.support_radius().unwrap_or(0.0);
        if let Some(r) = p.radius {
            if r < r_u + 1.0 {
                return Err(Error::Config(format!(
                    "window radius {r} must be at least profile radius + 1 = {}",
                    r_u + 1.0
                )));
            }
        }
        for &n in self.space.spacings.iter().chain([&self.time.spacing]) {
            Spacing::new(n)?;
        }
        if self.time.steps.contains(&0) {
            return Err(Error::Config("time ladder step counts must be positive".into()));
        }
        if self.space.snapshots.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::Config("snapshot fractions must lie in [0, 1]".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("eps_tail", t.eps_tail),
            ("quad_tol", t.quad_tol),
            ("solver_tol", t.solver_tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn radius(&self) -> f64 {
        self.problem
            .radius
            .unwrap_or(self.problem.profile.support_radius().unwrap_or(1.0) + 2.0)
    }

    pub fn grid(&self, n: u32) -> Result<GridSpec> {
        GridSpec::new(Spacing::new(n)?, self.radius())
    }

    pub fn profile(&self) -> SmoothProfile {
        SmoothProfile::new(self.problem.profile, self.problem.time_factor)
    }

    pub fn coefficients(&self) -> CoefficientSet {
        CoefficientSet::from_spec(&self.problem.coefficients)
    }

    pub fn time_threshold(&self) -> f64 {
        self.thresholds.time_slope.unwrap_or(if self.problem.gamma >= 1.0 {
            0.9
        } else {
            0.4 * self.problem.gamma
        })
    }

    /// `K_max` for spacing `n`.
    pub fn k_max(&self, n: u32) -> Result<u64> {
        self.problem
            .measure
            .tail_truncation_index(Spacing::new(n)?, self.tolerances.eps_tail, self.tolerances.tail_cap)
    }
}
