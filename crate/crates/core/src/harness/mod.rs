//! Convergence studies, operator checks, reports and the command line.

pub mod checks;
pub mod cli;
pub mod config;
pub mod report;
pub mod studies;

pub use checks::{run_operator_checks, CheckReport, PropertyResult};
pub use config::StudyConfig;
pub use report::{fit_rate, ConvergenceReport, LevelResult, RateFit};
pub use studies::{run_convergence_space, run_convergence_time, run_solve, SchemeChoice};
