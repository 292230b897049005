//! The `aldar` command-line tool.
//!
//! Every subcommand reads an optional `key = value` configuration file; `--set` and the
//! dedicated flags override it. Reports are JSON with `schema_version` "1".

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod report;

use std::path::PathBuf;

use aldar_core::experiments::THREADS_ENV;
use clap::{Args, Parser, Subcommand};

use commands::{analyze, experiment, simulate, Invocation};
use config::Config;
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "aldar", version, about = "Asymmetric linear double autoregression: estimation, testing and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo replications.
    #[arg(long)]
    pub reps: Option<u64>,
    /// Output file (series CSV, JSON report or summary CSV).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Input series CSV.
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// Overrides one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Print the JSON report instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a series.
    Simulate(Common),
    /// Fit a model of order `p` by QMLE.
    Fit(Common),
    /// Choose the order by BIC.
    Select(Common),
    /// Test beta_plus = beta_minus with Wald, LM and QLR statistics.
    Test(Common),
    /// Residual autocorrelations and the mixed portmanteau test.
    Diagnose(Common),
    /// Rolling Value-at-Risk forecasts and coverage tests.
    Backtest(Common),
    /// Run a Monte Carlo experiment (table1, table2, table3, table4, fig1, fig2, var).
    Experiment {
        name: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

impl Common {
    /// File settings, then `--set`, then the dedicated flags.
    pub fn invocation(&self) -> CliResult<Invocation> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        for pair in &self.set {
            cfg.set_pair(pair)?;
        }
        if let Some(s) = self.seed {
            cfg.set("seed", s.to_string());
        }
        if let Some(r) = self.reps {
            cfg.set("reps", r.to_string());
        }
        if let Some(o) = &self.out {
            cfg.set("out", o.display().to_string());
        }
        if let Some(d) = &self.data {
            cfg.set("data", d.display().to_string());
        }
        Ok(Invocation { cfg, json: self.json })
    }
}

fn check_threads() -> CliResult<()> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if v.trim().parse::<usize>().map_or(true, |n| n == 0) => {
            Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))
        }
        _ => Ok(()),
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    check_threads()?;
    match cli.command {
        Command::Simulate(c) => simulate::run(c.invocation()?),
        Command::Fit(c) => analyze::fit(c.invocation()?),
        Command::Select(c) => analyze::select(c.invocation()?),
        Command::Test(c) => analyze::test(c.invocation()?),
        Command::Diagnose(c) => analyze::diagnose(c.invocation()?),
        Command::Backtest(c) => analyze::backtest(c.invocation()?),
        Command::Experiment { name, common } => experiment::run(common.invocation()?, name),
    }
}
