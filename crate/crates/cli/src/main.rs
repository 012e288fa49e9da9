//! `pseudo-id`: simulate panels, scan concentrated objectives, estimate with
//! sign restrictions, run diagnostics, and reproduce the extension figures.
//!
//! Every run writes its artifacts plus `run.manifest` to the output
//! directory; the manifest is itself a valid `--config`.

mod commands;
mod config;
mod error;
mod figures;
mod output;
mod panel_io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pseudo_id::identify::{Axis, Grid, ThetaSign};
use pseudo_id::Variant;

use config::{Command, Method, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "pseudo-id", version, about)]
struct Cli {
    /// Command to run; defaults to the config file's `command`.
    #[arg(value_enum)]
    command: Option<Command>,

    /// TOML config or a previous `run.manifest`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Output file name for `simulate`.
    #[arg(long)]
    out: Option<String>,
    /// Panel CSV to analyse instead of simulating.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Scan grid `lo:hi:step`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<Grid>,
    #[arg(long, value_parser = parse_axis)]
    axis: Option<Axis>,
    #[arg(long)]
    sign_theta: Option<ThetaSign>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Figure number, 1 to 5.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    which: Option<u8>,
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    #[arg(long)]
    n_firms: Option<usize>,
    #[arg(long)]
    n_periods: Option<usize>,
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    match s {
        "beta" => Ok(Axis::Beta),
        "rho" => Ok(Axis::Rho),
        _ => Err(format!("expected beta or rho, got `{s}`")),
    }
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::ALL
        .into_iter()
        .find(|v| v.name() == s)
        .ok_or_else(|| format!("unknown variant `{s}`"))
}

impl Cli {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.command {
            c.command = v;
        }
        if let Some(v) = self.seed {
            c.dgp.seed = v;
        }
        if let Some(v) = self.out_dir {
            c.out_dir = v;
        }
        if let Some(v) = self.out {
            c.output = v;
        }
        if let Some(v) = self.input {
            c.input = Some(v);
        }
        if let Some(v) = self.axis {
            if v != c.scan.axis {
                // A grid from the file belongs to the file's axis.
                c.scan.grid = None;
            }
            c.scan.axis = v;
        }
        if let Some(v) = self.grid {
            c.scan.grid = Some(v.to_string());
        }
        if let Some(v) = self.sign_theta {
            c.estimate.sign_theta = v;
        }
        if let Some(v) = self.method {
            c.estimate.method = v;
        }
        if let Some(v) = self.which {
            c.figure.which = v;
        }
        if let Some(v) = self.variant {
            c.dgp.variant = v;
        }
        if let Some(v) = self.n_firms {
            c.dgp.n_firms = v;
        }
        if let Some(v) = self.n_periods {
            c.dgp.n_periods = v;
        }
        c.resolve()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.into_config().and_then(|config| {
        let artifacts = commands::run(&config)?;
        output::commit(&config, &artifacts)?;
        Ok((config, artifacts))
    });
    match result {
        Ok((config, artifacts)) => {
            for name in artifacts.names() {
                println!("{}", config.out_dir.join(name).display());
            }
            println!("{}", config.out_dir.join(output::MANIFEST).display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
