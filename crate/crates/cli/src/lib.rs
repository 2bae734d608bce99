//! Command-line driver for `canonstat`.
//!
//! Every subcommand reads one TOML config. Artifacts go to `--out DIR` (or
//! `[output] dir`); single-artifact commands print to stdout when no
//! directory is set. JSON artifacts carry `config_hash`, `master_seed` and
//! `version`; CSV artifacts carry them in a leading `#` comment line.

pub mod commands;
pub mod config;
pub mod pipeline;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

pub use config::{Config, Overrides};

#[derive(Debug, Parser)]
#[command(name = "canonstat", version, about = "Canonical U/V-statistics under φ-mixing: bounds and Monte Carlo checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Orthonormality and boundedness of the configured basis.
    Basis {
        #[command(subcommand)]
        action: BasisAction,
    },
    /// Coefficient norms and canonicality of the configured kernel.
    Kernel {
        #[command(subcommand)]
        action: KernelAction,
    },
    /// U- and V-statistics of a sample file.
    Stat {
        #[command(subcommand)]
        action: StatAction,
    },
    /// Tail bound certificates.
    Bound {
        #[command(subcommand)]
        action: BoundAction,
    },
    /// Monte Carlo tail curves.
    Mc {
        #[command(subcommand)]
        action: McAction,
    },
    /// Certificate, Monte Carlo curve and envelope check in one run.
    Verify(Common),
}

#[derive(Debug, Subcommand)]
pub enum BasisAction {
    Check(Common),
}

#[derive(Debug, Subcommand)]
pub enum KernelAction {
    Analyze(Common),
}

#[derive(Debug, Subcommand)]
pub enum StatAction {
    Eval {
        #[command(flatten)]
        common: Common,
        /// One point per line.
        #[arg(long)]
        sample: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum BoundAction {
    Compute(Common),
    /// Every applicable bound on the experiment grid, as CSV.
    Curve(Common),
}

#[derive(Debug, Subcommand)]
pub enum McAction {
    Run(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `[experiment] seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `[bound] condition` (A, B, dedecker, hoeffding1963).
    #[arg(long, value_parser = parse_condition)]
    pub condition: Option<canonstat::Condition>,
    /// Overrides `[experiment] n`.
    #[arg(long)]
    pub n: Option<usize>,
    /// Overrides `[experiment] reps`.
    #[arg(long)]
    pub reps: Option<u64>,
}

impl Common {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            condition: self.condition,
            n: self.n,
            reps: self.reps,
        }
    }
}

fn parse_condition(s: &str) -> Result<canonstat::Condition, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .or_else(|_| serde_json::from_value(serde_json::Value::String(s.to_lowercase())))
        .map_err(|_| format!("unknown condition `{s}`; expected A, B, dedecker or hoeffding1963"))
}

/// Parses `argv` (including the program name) and runs the command.
/// Returns the process exit status: 0 on success, 1 on envelope violations.
pub fn run_cli<I, T>(argv: I) -> Result<i32>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    run(cli)
}

pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Basis {
            action: BasisAction::Check(c),
        } => commands::basis_check(&c),
        Command::Kernel {
            action: KernelAction::Analyze(c),
        } => commands::kernel_analyze(&c),
        Command::Stat {
            action: StatAction::Eval { common, sample },
        } => commands::stat_eval(&common, &sample),
        Command::Bound {
            action: BoundAction::Compute(c),
        } => commands::bound_compute(&c),
        Command::Bound {
            action: BoundAction::Curve(c),
        } => commands::bound_curve(&c),
        Command::Mc {
            action: McAction::Run(c),
        } => commands::mc_run(&c),
        Command::Verify(c) => commands::verify(&c),
    }
}
