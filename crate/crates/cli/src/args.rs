//! Command-line flags and their merge into a [`RunConfig`].

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use testroll::validation::Suite;

use crate::config::{Format, Model, Quantity, RunConfig, Target, Verb};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "testroll",
    version,
    about = "Sample sizes for finite-population test-and-roll experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub verb: VerbArgs,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Subcommand)]
pub enum VerbArgs {
    /// Recommend an experimental size under one criterion.
    Recommend,
    /// Emit table1 (minimax regret) or table2 (grid WMB) as CSV.
    Table { target: Option<Target> },
    /// Emit the data series behind fig1a, fig1b, fig2 or figA.
    Figure { target: Option<Target> },
    /// Run property suites and report pass/fail per suite.
    Validate,
    /// Monte Carlo estimate of the error probability or regret.
    Simulate,
}

#[derive(Debug, Args)]
pub struct Flags {
    /// JSON run configuration; flags given on the command line override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
    /// Population size.
    #[arg(long = "N", global = true)]
    pub population: Option<u64>,
    /// Comma-separated population sizes for tables.
    #[arg(long = "N-list", global = true, value_delimiter = ',')]
    pub population_list: Option<Vec<u64>>,
    /// Minimum arm gap of the WMB grid.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Comma-separated gaps for table2 and figA.
    #[arg(long, global = true, value_delimiter = ',')]
    pub epsilon_list: Option<Vec<f64>>,
    /// Outcome standard deviation; selects the Gaussian model.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// minimax-regret, wmb-grid, wmb-normal-approx, gaussian-wmb or
    /// relative-regret.
    #[arg(long, global = true)]
    pub criterion: Option<String>,
    #[arg(long, global = true)]
    pub grid_step: Option<f64>,
    /// Local refinement of the minimax adversary (default true).
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub refine: Option<bool>,
    /// Hoeffding pruning in the WMB search (default true).
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub prune: Option<bool>,
    /// Bisection instead of the ascending WMB scan.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub bisect: Option<bool>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (standard output by default).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Directory for trace checkpoints of long searches.
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
    /// Validation suite; repeat or separate with commas (default: all).
    #[arg(long, global = true, value_delimiter = ',')]
    pub suite: Vec<String>,
    /// Experimental size for simulate.
    #[arg(long, global = true)]
    pub m: Option<u64>,
    #[arg(long, global = true)]
    pub mu1: Option<f64>,
    #[arg(long, global = true)]
    pub mu0: Option<f64>,
    /// Treatment effect for the Gaussian model.
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub quantity: Option<Quantity>,
    #[arg(long, global = true)]
    pub replications: Option<u64>,
    /// Suppress progress on standard error.
    #[arg(long, global = true)]
    pub quiet: bool,
}

/// `Ok(None)` when help or version output was requested.
pub fn parse<I, T>(argv: I) -> Result<Option<RunConfig>, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(None);
        }
        Err(e) => return Err(CliError::Config(e.to_string().trim_end().to_string())),
    };
    let dump = cli.flags.dump_config;
    let cfg = resolve(cli)?;
    if dump {
        println!("{}", cfg.to_json());
        return Ok(None);
    }
    Ok(Some(cfg))
}

pub fn resolve(cli: Cli) -> Result<RunConfig, CliError> {
    let (verb, target) = match cli.verb {
        VerbArgs::Recommend => (Verb::Recommend, None),
        VerbArgs::Table { target } => (Verb::Table, target),
        VerbArgs::Figure { target } => (Verb::Figure, target),
        VerbArgs::Validate => (Verb::Validate, None),
        VerbArgs::Simulate => (Verb::Simulate, None),
    };
    let f = cli.flags;
    let mut cfg = match &f.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::new(verb),
    };
    cfg.command = verb;
    set(&mut cfg.target, target);
    set(&mut cfg.population, f.population);
    if f.population_list.is_some() {
        cfg.population_list = f.population_list;
    }
    set(&mut cfg.epsilon, f.epsilon);
    if f.epsilon_list.is_some() {
        cfg.epsilon_list = f.epsilon_list;
    }
    if let Some(sigma) = f.sigma {
        cfg.model = Model::Gaussian { sigma };
    }
    if let Some(c) = f.criterion {
        cfg.criterion = Some(c.parse()?);
    }
    set(&mut cfg.grid.step, f.grid_step);
    if let Some(v) = f.refine {
        cfg.grid.refine = v;
    }
    if let Some(v) = f.prune {
        cfg.grid.prune = v;
    }
    if let Some(v) = f.bisect {
        cfg.grid.bisect = v;
    }
    set(&mut cfg.workers, f.workers);
    if let Some(s) = f.seed {
        cfg.seed = s;
    }
    set(&mut cfg.output.path, f.output);
    set(&mut cfg.output.format, f.format);
    set(&mut cfg.checkpoint, f.checkpoint);
    if !f.suite.is_empty() {
        cfg.suites = f
            .suite
            .iter()
            .map(|s| s.parse::<Suite>())
            .collect::<Result<_, _>>()?;
    }
    set(&mut cfg.simulation.m, f.m);
    set(&mut cfg.simulation.mu1, f.mu1);
    set(&mut cfg.simulation.mu0, f.mu0);
    set(&mut cfg.simulation.tau, f.tau);
    if let Some(q) = f.quantity {
        cfg.simulation.quantity = q;
    }
    if let Some(r) = f.replications {
        cfg.simulation.replications = r;
    }
    cfg.quiet |= f.quiet;
    Ok(cfg)
}

fn set<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}
