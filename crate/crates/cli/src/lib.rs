//! Command-line front end: one JSON scenario in, CSV trajectories and JSON
//! reports out.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for
//! configuration and validation errors, 3 for failures while running
//! (singularities, a vanishing `rho`, i/o).

pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod report;

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::commands::Context;
use crate::config::Scenario;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "ermakov",
    version,
    about = "Simulate and check Ermakov systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate and write the trajectory CSV.
    Simulate(Common),
    /// Report the drift of the configured invariants.
    Invariants {
        #[command(flatten)]
        common: Common,
        /// Evaluate on this trajectory CSV instead of integrating.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Map the trajectory to the autonomous frame and cross-check it.
    Reduce(Common),
    /// Compare the trajectory with the closed-form solution.
    AnalyticCompare(Common),
    /// Check the Noether conditions over the homothetic algebra.
    NoetherScan(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file; repeat for a batch.
    #[arg(long, required = true)]
    pub config: Vec<PathBuf>,
    /// CSV output file (a directory in batch mode).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON report file (a directory in batch mode).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Overrides the tolerance of the command's main check.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Worker threads for a batch; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Simulate,
    Invariants,
    Reduce,
    AnalyticCompare,
    NoetherScan,
}

impl Kind {
    fn writes_csv(self) -> bool {
        matches!(self, Kind::Simulate | Kind::Reduce)
    }

    /// The report is the main output for the commands without a CSV.
    fn report_is_main(self) -> bool {
        !self.writes_csv()
    }

    fn execute(self, sc: &Scenario, ctx: &Context) -> Result<bool, CliError> {
        match self {
            Kind::Simulate => commands::simulate(sc, ctx),
            Kind::Invariants => commands::invariants(sc, ctx),
            Kind::Reduce => commands::reduce(sc, ctx),
            Kind::AnalyticCompare => commands::analytic_compare(sc, ctx),
            Kind::NoetherScan => commands::noether_scan(sc, ctx),
        }
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn check_flags(kind: Kind, common: &Common, trajectory: Option<&PathBuf>) -> Result<(), CliError> {
    if common.out.is_some() && !kind.writes_csv() {
        return Err(CliError::Config(
            "--out is only used by simulate and reduce".into(),
        ));
    }
    if let Some(t) = common.tolerance {
        if kind == Kind::Simulate {
            return Err(CliError::Config(
                "simulate has no checks; --tolerance does not apply".into(),
            ));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Config(format!(
                "--tolerance must be positive, got {t}"
            )));
        }
    }
    if common.config.len() > 1 {
        if trajectory.is_some() {
            return Err(CliError::Config(
                "--trajectory takes a single --config".into(),
            ));
        }
        if kind.writes_csv() && common.out.is_none() {
            return Err(CliError::Config("a batch needs --out <dir>".into()));
        }
        if kind.report_is_main() && common.report.is_none() {
            return Err(CliError::Config("a batch needs --report <dir>".into()));
        }
        let mut seen = HashSet::new();
        for path in &common.config {
            if !seen.insert(stem(path)) {
                return Err(CliError::Config(format!(
                    "two scenarios share the name `{}`; batch outputs would collide",
                    stem(path)
                )));
            }
        }
        for dir in [&common.out, &common.report].into_iter().flatten() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    Ok(())
}

fn run_scenario(kind: Kind, path: &Path, ctx: &Context) -> u8 {
    let result = config::load(path).and_then(|sc| kind.execute(&sc, ctx));
    match result {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("{}: checks failed", path.display());
            1
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            e.exit_code()
        }
    }
}

/// Runs the parsed command line and returns the process exit code; a batch
/// returns the largest code of its scenarios.
pub fn run(cli: Cli) -> u8 {
    let (kind, common, trajectory) = match cli.command {
        Command::Simulate(c) => (Kind::Simulate, c, None),
        Command::Invariants { common, trajectory } => (Kind::Invariants, common, trajectory),
        Command::Reduce(c) => (Kind::Reduce, c, None),
        Command::AnalyticCompare(c) => (Kind::AnalyticCompare, c, None),
        Command::NoetherScan(c) => (Kind::NoetherScan, c, None),
    };
    if let Err(e) = check_flags(kind, &common, trajectory.as_ref()) {
        eprintln!("{e}");
        return e.exit_code();
    }

    if let [path] = common.config.as_slice() {
        let ctx = Context {
            name: stem(path),
            out: common.out.clone(),
            report: common.report.clone(),
            tolerance: common.tolerance,
            trajectory,
        };
        return run_scenario(kind, path, &ctx);
    }

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("cannot start worker pool: {e}");
            return 3;
        }
    };
    pool.install(|| {
        common
            .config
            .par_iter()
            .map(|path| {
                let name = stem(path);
                let ctx = Context {
                    out: common.out.as_ref().map(|d| d.join(format!("{name}.csv"))),
                    report: common
                        .report
                        .as_ref()
                        .map(|d| d.join(format!("{name}.json"))),
                    tolerance: common.tolerance,
                    trajectory: None,
                    name,
                };
                run_scenario(kind, path, &ctx)
            })
            .max()
            .unwrap_or(0)
    })
}
