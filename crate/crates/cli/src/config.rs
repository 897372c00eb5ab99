//! Run configuration: a JSON record that command-line flags override.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use testroll::search::Criterion;
use testroll::validation::Suite;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Verb {
    Recommend,
    Table,
    Figure,
    Validate,
    Simulate,
}

/// Table or figure to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum Target {
    #[serde(rename = "table1")]
    #[value(name = "table1")]
    Table1,
    #[serde(rename = "table2")]
    #[value(name = "table2")]
    Table2,
    #[serde(rename = "fig1a")]
    #[value(name = "fig1a")]
    Fig1a,
    #[serde(rename = "fig1b")]
    #[value(name = "fig1b")]
    Fig1b,
    #[serde(rename = "fig2")]
    #[value(name = "fig2")]
    Fig2,
    #[serde(rename = "figA")]
    #[value(name = "figA")]
    FigA,
}

impl Target {
    pub fn is_table(self) -> bool {
        matches!(self, Target::Table1 | Target::Table2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Model {
    Bernoulli,
    Gaussian { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    #[default]
    ErrorProb,
    Regret,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct GridOptions {
    /// Lattice step; defaults to 0.01 for regret grids and to epsilon for
    /// WMB grids.
    pub step: Option<f64>,
    pub refine: bool,
    pub prune: bool,
    pub bisect: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            step: None,
            refine: true,
            prune: true,
            bisect: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct OutputOptions {
    /// Standard output when absent.
    pub path: Option<PathBuf>,
    /// Defaults to JSON for reports and CSV for tables and figures.
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SimulationOptions {
    pub m: Option<u64>,
    pub mu1: Option<f64>,
    pub mu0: Option<f64>,
    pub tau: Option<f64>,
    pub quantity: Quantity,
    pub replications: u64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            m: None,
            mu1: None,
            mu0: None,
            tau: None,
            quantity: Quantity::ErrorProb,
            replications: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub command: Verb,
    #[serde(default)]
    pub target: Option<Target>,
    #[serde(rename = "N", default)]
    pub population: Option<u64>,
    #[serde(rename = "NList", default)]
    pub population_list: Option<Vec<u64>>,
    #[serde(default = "default_model")]
    pub model: Model,
    #[serde(default)]
    pub criterion: Option<Criterion>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub epsilon_list: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: GridOptions,
    #[serde(default)]
    pub output: OutputOptions,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Validation suites; all of them when empty.
    #[serde(default)]
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub simulation: SimulationOptions,
    /// Directory holding per-run trace checkpoints.
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub quiet: bool,
}

fn default_model() -> Model {
    Model::Bernoulli
}

fn default_seed() -> u64 {
    42
}

impl RunConfig {
    pub fn new(command: Verb) -> Self {
        Self {
            command,
            target: None,
            population: None,
            population_list: None,
            model: default_model(),
            criterion: None,
            epsilon: None,
            epsilon_list: None,
            grid: GridOptions::default(),
            output: OutputOptions::default(),
            workers: None,
            seed: default_seed(),
            suites: Vec::new(),
            simulation: SimulationOptions::default(),
            checkpoint: None,
            quiet: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad config file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn format(&self) -> Format {
        self.output.format.unwrap_or(match self.command {
            Verb::Table | Verb::Figure => Format::Csv,
            _ => Format::Json,
        })
    }

    pub fn require_population(&self) -> Result<u64, CliError> {
        self.population
            .ok_or_else(|| CliError::Config("--N is required".into()))
    }

    pub fn require_epsilon(&self) -> Result<f64, CliError> {
        let eps = self
            .epsilon
            .ok_or_else(|| CliError::Config("--epsilon is required".into()))?;
        check_epsilon(eps)?;
        Ok(eps)
    }

    /// Checks that do not depend on the verb.
    pub fn validate(&self) -> Result<(), CliError> {
        let populations = self
            .population
            .iter()
            .chain(self.population_list.iter().flatten());
        for &n in populations {
            if n == 0 || !n.is_multiple_of(2) {
                return Err(CliError::Config(format!(
                    "N must be even and positive, got {n}"
                )));
            }
        }
        for &eps in self
            .epsilon
            .iter()
            .chain(self.epsilon_list.iter().flatten())
        {
            check_epsilon(eps)?;
        }
        if let Some(step) = self.grid.step {
            if !(step > 0.0 && step <= 0.5) {
                return Err(CliError::Config(format!(
                    "grid step must lie in (0, 0.5], got {step}"
                )));
            }
        }
        if let Model::Gaussian { sigma } = self.model {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(CliError::Config(format!(
                    "sigma must be positive, got {sigma}"
                )));
            }
        }
        if self.workers == Some(0) {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        if self.simulation.replications == 0 {
            return Err(CliError::Config("replications must be positive".into()));
        }
        Ok(())
    }
}

fn check_epsilon(eps: f64) -> Result<(), CliError> {
    if eps > 0.0 && eps <= 0.5 {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "epsilon must lie in (0, 0.5], got {eps}"
        )))
    }
}
