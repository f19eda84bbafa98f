//! Convergence reports: per-level errors, log-log rate fits and the
//! `report.json` / `errors.csv` artifacts.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::StudyConfig;
use crate::error::Result;

/// Least-squares fit of `log error` against `log parameter`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RateFit {
    Fitted {
        slope: f64,
        intercept: f64,
        r2: f64,
        levels: usize,
    },
    /// Every error is zero (or at the noise floor); nothing to fit.
    Exact,
    /// Fewer than three usable levels.
    InsufficientData { levels: usize },
}

impl RateFit {
    pub fn slope(&self) -> Option<f64> {
        match self {
            RateFit::Fitted { slope, .. } => Some(*slope),
            _ => None,
        }
    }

    pub fn r2(&self) -> Option<f64> {
        match self {
            RateFit::Fitted { r2, .. } => Some(*r2),
            _ => None,
        }
    }

    /// Fitted slope at least `threshold` (and `R²` at least `min_r2`), or exact.
    pub fn passes(&self, threshold: f64, min_r2: Option<f64>) -> bool {
        match *self {
            RateFit::Fitted { slope, r2, .. } => slope >= threshold && min_r2.is_none_or(|m| r2 >= m),
            RateFit::Exact => true,
            RateFit::InsufficientData { .. } => false,
        }
    }
}

/// Fits `log e = slope · log p + intercept` over `(p, e)` pairs.
pub fn fit_rate(levels: &[(f64, f64)]) -> RateFit {
    if !levels.is_empty() && levels.iter().all(|&(_, e)| e == 0.0) {
        return RateFit::Exact;
    }
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .filter(|&&(p, e)| p > 0.0 && e > 0.0 && e.is_finite())
        .map(|&(p, e)| (p.ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return RateFit::InsufficientData { levels: pts.len() };
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return RateFit::InsufficientData { levels: 1 };
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).min(1.0)
    };
    RateFit::Fitted {
        slope,
        intercept,
        r2,
        levels: pts.len(),
    }
}

/// Error sources that bound how small a meaningful scheme error can be.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Budget {
    pub quadrature: f64,
    pub tail: f64,
    pub rk: f64,
    pub solver: f64,
}

impl Budget {
    pub fn total(&self) -> f64 {
        self.quadrature + self.tail + self.rk + self.solver
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: usize,
    pub h: f64,
    pub tau: Option<f64>,
    pub sup_err: f64,
    pub l2_err: f64,
    pub runtime_s: f64,
    pub k_max: u64,
    pub budget: Budget,
    pub budget_total: f64,
    pub contaminated: bool,
    /// `None` on success.
    pub failure: Option<String>,
    pub diagnostics: serde_json::Value,
}

impl LevelResult {
    pub fn failed(level: usize, h: f64, tau: Option<f64>, message: String) -> Self {
        Self {
            level,
            h,
            tau,
            sup_err: f64::NAN,
            l2_err: f64::NAN,
            runtime_s: 0.0,
            k_max: 0,
            budget: Budget::default(),
            budget_total: 0.0,
            contaminated: false,
            failure: Some(message),
            diagnostics: serde_json::Value::Null,
        }
    }

    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }

    /// The discretization parameter of the study (`h` or `τ`).
    pub fn parameter(&self) -> f64 {
        self.tau.unwrap_or(self.h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    Space,
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub kind: StudyKind,
    pub parameter: String,
    pub config: StudyConfig,
    /// Settings derived from the config (window, snapshot times, ...).
    pub resolved: serde_json::Value,
    pub levels: Vec<LevelResult>,
    pub sup_fit: RateFit,
    pub l2_fit: RateFit,
    pub threshold: f64,
    pub min_r2: Option<f64>,
    pub passed: bool,
    pub status: String,
}

impl ConvergenceReport {
    /// Fits both error norms over successful, uncontaminated levels and
    /// decides pass/fail. `failures_fatal` makes any failed level fail the study.
    pub fn assemble(
        kind: StudyKind,
        config: StudyConfig,
        resolved: serde_json::Value,
        levels: Vec<LevelResult>,
        threshold: f64,
        failures_fatal: bool,
    ) -> Self {
        let min_r2 = config.thresholds.min_r2;
        let ok: Vec<&LevelResult> = levels.iter().filter(|l| l.ok()).collect();
        let failed = levels.len() - ok.len();
        let noise_floor = !ok.is_empty()
            && ok
                .iter()
                .all(|l| l.sup_err <= l.budget_total && l.l2_err <= l.budget_total);
        let (sup_fit, l2_fit) = if noise_floor {
            (RateFit::Exact, RateFit::Exact)
        } else {
            let used: Vec<&&LevelResult> = ok.iter().filter(|l| !l.contaminated).collect();
            (
                fit_rate(&used.iter().map(|l| (l.parameter(), l.sup_err)).collect::<Vec<_>>()),
                fit_rate(&used.iter().map(|l| (l.parameter(), l.l2_err)).collect::<Vec<_>>()),
            )
        };
        let fits_pass = sup_fit.passes(threshold, min_r2) && l2_fit.passes(threshold, min_r2);
        let passed = fits_pass && !(failures_fatal && failed > 0);
        let status = if noise_floor {
            "errors at or below the error budget at every level; rate fit skipped".to_string()
        } else if failed > 0 && (failures_fatal || ok.len() < 3) {
            format!("{failed} level(s) failed")
        } else {
            match (sup_fit, l2_fit) {
                (RateFit::InsufficientData { levels }, _) | (_, RateFit::InsufficientData { levels }) => {
                    format!("only {levels} usable level(s); at least 3 are needed")
                }
                _ if passed => "rates meet the threshold".to_string(),
                _ => "rates below the threshold".to_string(),
            }
        };
        Self {
            kind,
            parameter: match kind {
                StudyKind::Space => "h".into(),
                StudyKind::Time => "tau".into(),
            },
            config,
            resolved,
            levels,
            sup_fit,
            l2_fit,
            threshold,
            min_r2,
            passed,
            status,
        }
    }

    pub fn write_errors_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "level,h,tau,sup_err,l2_err")?;
        for l in &self.levels {
            let tau = l.tau.map(|t| format!("{t:e}")).unwrap_or_default();
            writeln!(out, "{},{:e},{},{:e},{:e}", l.level, l.h, tau, l.sup_err, l.l2_err)?;
        }
        Ok(())
    }

    /// Writes `report.json` and `errors.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("report.json"), self)?;
        self.write_errors_csv(std::io::BufWriter::new(std::fs::File::create(dir.join("errors.csv"))?))
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(file, value)?;
    Ok(())
}
