//! `levyfd` command line: one subcommand per study.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use super::checks::{describe_fit, run_operator_checks};
use super::config::StudyConfig;
use super::report::{write_json, ConvergenceReport};
use super::studies::{run_convergence_space, run_convergence_time, run_solve, SchemeChoice};
use crate::error::Result;
use crate::operators::{DiscreteOperator, JumpOperator};

/// `println!` that ignores a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

#[derive(Debug, Parser)]
#[command(
    name = "levyfd",
    version,
    about = "Finite-difference studies for Lévy-type integro-differential equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Study configuration (TOML); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Seed for random probes; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; overrides the config.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem at one (h, tau) and write trajectories.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Grid parameter n (h = 1/n); defaults to the time-study spacing.
        #[arg(long)]
        n: Option<u32>,
        /// Implicit steps; defaults to the last time-ladder entry.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, value_enum, default_value = "both")]
        scheme: SchemeChoice,
    },
    /// Spatial convergence study.
    ConvergeSpace {
        #[command(flatten)]
        common: Common,
    },
    /// Temporal convergence study.
    ConvergeTime {
        #[command(flatten)]
        common: Common,
    },
    /// Structural checks of the discrete operators.
    CheckOperators {
        #[command(flatten)]
        common: Common,
    },
    /// Write the assembled operator L^h_t + J^h in MatrixMarket form.
    DumpMatrix {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, default_value_t = 0.0)]
        time: f64,
    },
}

fn load(common: &Common) -> Result<StudyConfig> {
    let mut cfg = match &common.config {
        Some(p) => StudyConfig::load(p)?,
        None => StudyConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(w) = common.workers {
        cfg.workers = Some(w);
    }
    Ok(cfg)
}

fn summarize(r: &ConvergenceReport) {
    for l in &r.levels {
        match &l.failure {
            None => say!(
                "  h={:<10.6} tau={:<10} sup={:.3e} l2={:.3e}{}",
                l.h,
                l.tau.map(|t| format!("{t:.6}")).unwrap_or_else(|| "-".into()),
                l.sup_err,
                l.l2_err,
                if l.contaminated { "  (budget-contaminated)" } else { "" }
            ),
            Some(e) => say!("  h={:.6} failed: {e}", l.h),
        }
    }
    say!("  sup: {}", describe_fit(&r.sup_fit));
    say!("  l2:  {}", describe_fit(&r.l2_fit));
    say!(
        "  threshold {}: {} — {}",
        r.threshold,
        if r.passed { "PASS" } else { "FAIL" },
        r.status
    );
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Runs a parsed command; `Ok(true)` iff every asserted threshold passed.
pub fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve {
            common,
            n,
            steps,
            scheme,
        } => {
            let cfg = load(&common)?;
            let n = n.unwrap_or(cfg.time.spacing);
            let steps = steps.unwrap_or_else(|| cfg.time.steps.last().copied().unwrap_or(16));
            let out = run_solve(&cfg, n, steps, scheme)?;
            for t in &out.trajectories {
                let tag = serde_json::to_value(t.scheme())?.as_str().unwrap_or("run").to_string();
                t.write_csv(create(&common.out, &format!("trajectory_{tag}.csv"))?)?;
                write_json(&common.out.join(format!("trajectory_{tag}.json")), &t.to_json())?;
            }
            write_json(&common.out.join("report.json"), &out.summary)?;
            for run in out.summary["runs"].as_array().into_iter().flatten() {
                say!(
                    "{}: max sup error vs exact {:.3e}",
                    run["scheme"].as_str().unwrap_or("?"),
                    run["max_sup_error_vs_exact"].as_f64().unwrap_or(f64::NAN)
                );
            }
            Ok(true)
        }
        Command::ConvergeSpace { common } => {
            let cfg = load(&common)?;
            let r = run_convergence_space(&cfg)?;
            r.write_to(&common.out)?;
            say!("spatial convergence");
            summarize(&r);
            Ok(r.passed)
        }
        Command::ConvergeTime { common } => {
            let cfg = load(&common)?;
            let r = run_convergence_time(&cfg)?;
            r.write_to(&common.out)?;
            say!("temporal convergence");
            summarize(&r);
            Ok(r.passed)
        }
        Command::CheckOperators { common } => {
            let cfg = load(&common)?;
            let r = run_operator_checks(&cfg)?;
            std::fs::create_dir_all(&common.out)?;
            write_json(&common.out.join("report.json"), &r)?;
            for p in &r.properties {
                say!(
                    "{:<24} {}  worst {:.3e} (threshold {:.3e})  {}",
                    p.name,
                    if p.passed { "PASS" } else { "FAIL" },
                    p.worst,
                    p.threshold,
                    p.witness
                );
            }
            Ok(r.passed)
        }
        Command::DumpMatrix { common, n, time } => {
            let cfg = load(&common)?;
            let n = n.unwrap_or(cfg.time.spacing);
            let grid = cfg.grid(n)?;
            let k_max = cfg.k_max(n)?;
            let jump = JumpOperator::new(&cfg.problem.measure, grid, k_max)?;
            let op = DiscreteOperator::at(&jump, &cfg.coefficients(), time)?;
            op.matrix().write_triplets(create(&common.out, "matrix.mtx")?)?;
            let summary = serde_json::json!({
                "config": cfg,
                "h": grid.h(),
                "radius": grid.radius(),
                "points": grid.len(),
                "k_max": k_max,
                "t": time,
                "nnz": op.matrix().nnz(),
                "bandwidth": op.matrix().bandwidth(),
                "norm_inf": op.matrix().norm_inf(),
                "tail_diagonal": jump.weights().tail_diagonal(),
                "truncated_mass": jump.weights().truncated_mass(),
            });
            write_json(&common.out.join("report.json"), &summary)?;
            say!("{} x {} matrix, {} nonzeros", grid.len(), grid.len(), op.matrix().nnz());
            Ok(true)
        }
    }
}

/// Entry point shared by the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
