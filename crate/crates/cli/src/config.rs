//! Run configuration: TOML with dotted sections, every key optional,
//! unknown keys rejected.
//!
//! ```toml
//! command = "scan"
//! out_dir = "out"
//!
//! [dgp]
//! variant = "benchmark"
//! n_firms = 40000
//! seed = 0
//! [dgp.structural]
//! beta = 0.6
//!
//! [scan]
//! axis = "beta"
//! grid = "0:2:0.005"
//! ```
//!
//! A `run.manifest` is a resolved config plus a `[manifest]` table, so it can
//! be passed back as `--config`.

use std::path::{Path, PathBuf};

use pseudo_id::diagnostics::Thresholds;
use pseudo_id::estimate::RhoFamily;
use pseudo_id::identify::{Axis, Grid, ThetaSign};
use pseudo_id::DgpSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    #[default]
    Simulate,
    Scan,
    Estimate,
    Diagnose,
    Figure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    TwoStep,
    PredeterminedStart,
    ReducedFormStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumentChoice {
    #[default]
    Benchmark,
    FixedEffects,
    Predetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingChoice {
    #[default]
    Identity,
    TwoStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub axis: Axis,
    /// Family of the concentrated-rho scan; ignored on the beta axis.
    pub rho_family: RhoFamily,
    /// `lo:hi:step`; the axis default when absent.
    pub grid: Option<String>,
    /// Divide the curve by `|m|` at this axis value when writing; stored
    /// values are written unscaled when absent.
    pub rescale_at: Option<f64>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            axis: Axis::Beta,
            rho_family: RhoFamily::Benchmark,
            grid: None,
            rescale_at: None,
        }
    }
}

impl ScanConfig {
    pub fn grid(&self) -> Result<Grid, CliError> {
        match &self.grid {
            Some(g) => g.parse().map_err(|e| CliError::core("config", e)),
            None => Ok(match self.axis {
                Axis::Beta => Grid::default_beta(),
                Axis::Rho => Grid::default_rho(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateConfig {
    pub method: Method,
    pub sign_theta: ThetaSign,
    /// Instrument set for the moment report at the estimate.
    pub instruments: InstrumentChoice,
    pub weighting: WeightingChoice,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            method: Method::TwoStep,
            sign_theta: ThetaSign::Positive,
            instruments: InstrumentChoice::Benchmark,
            weighting: WeightingChoice::Identity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FigureConfig {
    pub which: u8,
}

impl Default for FigureConfig {
    fn default() -> Self {
        Self { which: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Command,
    pub out_dir: PathBuf,
    /// Output file name for `simulate`, relative to `out_dir`.
    pub output: String,
    /// Panel CSV (`firm,period,y,x[,z]`) used instead of a simulation by
    /// `scan`, `estimate` and `diagnose`.
    pub input: Option<PathBuf>,
    pub dgp: DgpSpec,
    pub scan: ScanConfig,
    pub estimate: EstimateConfig,
    pub diagnose: Thresholds,
    pub figure: FigureConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Simulate,
            out_dir: PathBuf::from("out"),
            output: "panel.csv".into(),
            input: None,
            dgp: DgpSpec::default(),
            scan: ScanConfig::default(),
            estimate: EstimateConfig::default(),
            diagnose: Thresholds::default(),
            figure: FigureConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads a config or manifest file. The `[manifest]` table, if present,
    /// is dropped before validation.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io("config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::config(e.message()))?;
        table.remove("manifest");
        RunConfig::deserialize(table).map_err(|e| CliError::config(e.message()))
    }

    /// Fills defaults that depend on other fields, so the manifest records
    /// every value actually used.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        let grid = self.scan.grid()?;
        grid.validate().map_err(|e| CliError::core("config", e))?;
        self.scan.grid = Some(grid.to_string());
        if !(1..=5).contains(&self.figure.which) {
            return Err(CliError::config(format!("figure.which must be 1..5, got {}", self.figure.which)));
        }
        if self.output.is_empty() {
            return Err(CliError::config("output must not be empty"));
        }
        Ok(self)
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::config(e.to_string()))
    }
}
