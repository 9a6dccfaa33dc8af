//! `disrupt`: ingest a citation corpus, compute disruption indicators, and
//! run the summary, regression and matching analyses on them.
//!
//! Exit status: 0 on success, 1 for bad input or configuration, 2 for an
//! internal failure (including an oracle mismatch).

mod analysis;
mod config;
mod error;
mod pipeline;
mod report;
mod stage;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig, Settings};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "disrupt",
    version,
    about = "Citation disruption indicators and their validation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    overrides: Overrides,

    /// More log output (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Validate and normalise the papers and citations tables
    Ingest,
    /// Compute DI_l, DI_ln, DEP and citation counts for every focal paper
    Indicators,
    /// Per-year percentiles, milestone medians and histograms of each indicator
    Summarize,
    /// Fit the milestone models (OLS and logit) with diagnostics
    Regress,
    /// Coarsened exact matching of milestone papers and treatment effects
    Cem,
    /// Write a seeded synthetic corpus with planted disruptive milestones
    Generate,
    /// Recompute the indicators by brute force and compare with indicators.csv
    OracleCheck,
    /// Collate models, treatment effects and percentiles into report.txt
    Report,
}

fn run(command: Command, cfg: &RunConfig) -> CliResult<String> {
    match command {
        Command::Ingest => pipeline::ingest(cfg),
        Command::Indicators => pipeline::indicators(cfg),
        Command::Summarize => analysis::summarize(cfg),
        Command::Regress => analysis::regress(cfg),
        Command::Cem => analysis::cem(cfg),
        Command::Generate => pipeline::generate(cfg),
        Command::OracleCheck => pipeline::oracle_check(cfg),
        Command::Report => report::report(cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = std::panic::catch_unwind(|| {
        let settings = Settings::load(&cli.overrides)?;
        let cfg = RunConfig::resolve(&settings)?;
        log::debug!("{cfg:?}");
        run(cli.command, &cfg)
    })
    .unwrap_or_else(|panic| {
        let msg = panic
            .downcast_ref::<String>()
            .map(String::as_str)
            .or_else(|| panic.downcast_ref::<&str>().copied())
            .unwrap_or("panic");
        Err(CliError::internal(msg))
    });
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
