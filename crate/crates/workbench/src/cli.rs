//! Argument parsing and dispatch.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{
    cmd_reconcile, cmd_score, cmd_sensitivity, delphi_add_round, delphi_bundle, delphi_finalize, delphi_init,
    delphi_status, Outcome, Report,
};
use crate::config::{Overrides, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "reconcile", version, about = "Bayesian reconciliation of expert judgements")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of chains for every model.
    #[arg(long, global = true)]
    pub chains: Option<usize>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Format of the summary printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reconcile every quantity in the configured panel.
    Reconcile,
    /// Reconcile, then score experts, equal weights and the reconciled distribution.
    Score,
    /// Sweep sample-size priors and decision-maker prior means for one event.
    Sensitivity,
    /// Manage a multi-round Delphi study.
    Delphi {
        #[command(subcommand)]
        action: DelphiCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum DelphiCommand {
    /// Create a study directory from a JSON description.
    Init {
        #[arg(long)]
        study: PathBuf,
        #[arg(long)]
        meta: PathBuf,
    },
    /// Append a complete round from a CSV file.
    AddRound {
        #[arg(long)]
        study: PathBuf,
        #[arg(long)]
        file: PathBuf,
    },
    /// Print the anonymised bundle of a round (default: latest).
    Bundle {
        #[arg(long)]
        study: PathBuf,
        #[arg(long)]
        round: Option<u32>,
    },
    /// Print the stopping decision.
    Status {
        #[arg(long)]
        study: PathBuf,
    },
    /// Reconcile the final round of a stopped study.
    Finalize {
        #[arg(long)]
        study: PathBuf,
    },
}

impl GlobalArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            chains: self.chains,
            out: self.out.clone(),
        }
    }

    /// Config file (if any) with command-line overrides applied.
    pub fn load(&self, required: bool) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None if required => bail!("--config is required for this command"),
            None => RunConfig::default(),
        };
        cfg.apply(&self.overrides());
        Ok(cfg)
    }
}

fn emit(report: Report, format: Format, out: &mut dyn Write) -> Result<Outcome> {
    match format {
        Format::Csv => out.write_all(report.csv.as_bytes())?,
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report.json)?)?,
    }
    Ok(report.outcome)
}

/// Execute a parsed command line, printing the summary to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Outcome> {
    let g = &cli.global;
    match &cli.command {
        Command::Reconcile => emit(cmd_reconcile(&g.load(true)?)?, g.format, out),
        Command::Score => emit(cmd_score(&g.load(true)?)?, g.format, out),
        Command::Sensitivity => emit(cmd_sensitivity(&g.load(true)?)?, g.format, out),
        Command::Delphi { action } => match action {
            DelphiCommand::Init { study, meta } => {
                delphi_init(study, meta)?;
                writeln!(out, "created {}", study.display())?;
                Ok(Outcome::Success)
            }
            DelphiCommand::AddRound { study, file } => {
                let index = delphi_add_round(study, file)?;
                writeln!(out, "recorded round {index}")?;
                Ok(Outcome::Success)
            }
            DelphiCommand::Bundle { study, round } => {
                out.write_all(delphi_bundle(study, *round)?.as_bytes())?;
                Ok(Outcome::Success)
            }
            DelphiCommand::Status { study } => {
                writeln!(out, "{}", delphi_status(study)?)?;
                Ok(Outcome::Success)
            }
            DelphiCommand::Finalize { study } => {
                let mut cfg = g.load(false)?;
                if cfg.out.is_none() {
                    cfg.out = Some(std::path::absolute(study.join("final"))?);
                }
                emit(delphi_finalize(study, &cfg)?, g.format, out)
            }
        },
    }
}
