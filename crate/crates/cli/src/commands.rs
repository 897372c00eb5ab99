//! Verb implementations.

use serde_json::{json, Value};
use testroll::bernoulli::{error_prob, BernoulliState, DesignContext};
use testroll::criteria::{evaluate, relative_regret_curve};
use testroll::exec::Parallelism;
use testroll::gaussian::{gaussian_error_prob, GaussianState};
use testroll::montecarlo::{simulate_error_prob, simulate_regret, SimConfig, SimModel};
use testroll::search::{
    gaussian_wmb_recommendation, minimax_sample_size_with, relative_regret_sample_size,
    wmb_sample_size_na, wmb_sample_size_with, Criterion, DesignRecommendation, GridSpec,
    SearchObserver, SearchOptions, TraceEntry,
};
use testroll::validation::{run_suite, Suite, ValidateConfig};

use crate::checkpoint::{self, Progress};
use crate::config::{Format, Model, Quantity, RunConfig, Target};
use crate::output::{emit, pretty, Cell, Table};
use crate::{CliError, Outcome};

const TABLE_POPULATIONS: [u64; 5] = [200, 500, 1000, 5000, 10000];
const TABLE2_EPSILONS: [f64; 2] = [0.01, 0.005];
const FIGURE_POPULATION: u64 = 500;
const FIGURE_EPSILON: f64 = 0.01;
const FIG_A_EPSILONS: [f64; 4] = [0.1, 0.01, 0.001, 0.0001];
const REGRET_STEP: f64 = 0.01;

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    use crate::config::Verb;
    cfg.validate()?;
    match cfg.command {
        Verb::Recommend => recommend(cfg),
        Verb::Table => table(cfg),
        Verb::Figure => figure(cfg),
        Verb::Validate => validate(cfg),
        Verb::Simulate => simulate(cfg),
    }
}

fn parallelism(cfg: &RunConfig) -> Parallelism {
    Parallelism::from_workers(cfg.workers)
}

fn search_options(cfg: &RunConfig) -> SearchOptions {
    SearchOptions {
        parallelism: parallelism(cfg),
        refine: cfg.grid.refine,
        prune: cfg.grid.prune,
        bisect: cfg.grid.bisect,
        ..SearchOptions::default()
    }
}

fn write(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    emit(cfg.output.path.as_deref(), text)
}

fn bernoulli_only(cfg: &RunConfig, what: &str) -> Result<(), CliError> {
    match cfg.model {
        Model::Bernoulli => Ok(()),
        Model::Gaussian { .. } => Err(CliError::Config(format!(
            "{what} is only defined for the Bernoulli model"
        ))),
    }
}

/// Runs `search` with progress reporting and, when a checkpoint directory is
/// configured, resumes from and extends the trace stored under `key`.
fn checkpointed<F>(cfg: &RunConfig, key: &str, search: F) -> Result<DesignRecommendation, CliError>
where
    F: FnOnce(&mut dyn SearchObserver, &[TraceEntry]) -> testroll::Result<DesignRecommendation>,
{
    let (resume, file) = match &cfg.checkpoint {
        Some(dir) if !cfg.grid.bisect => {
            let p = checkpoint::path(dir, key);
            let resume = checkpoint::load(&p)?;
            let file = checkpoint::open(&p, &resume)?;
            (resume, Some(file))
        }
        _ => (Vec::new(), None),
    };
    if !resume.is_empty() && !cfg.quiet {
        eprintln!(
            "{key}: resuming after m={}",
            resume.last().map_or(0, |e| e.m)
        );
    }
    let mut progress = Progress::new(key.to_string(), file, cfg.quiet);
    let rec = search(&mut progress, &resume)?;
    progress.finish(&match rec.m_star {
        Some(m) => format!("m*={m}"),
        None => "infeasible".to_string(),
    });
    Ok(rec)
}

fn minimax(
    cfg: &RunConfig,
    population: u64,
    full_trace: bool,
) -> Result<DesignRecommendation, CliError> {
    bernoulli_only(cfg, "minimax regret")?;
    let step = cfg.grid.step.unwrap_or(REGRET_STEP);
    let grid = GridSpec::full(step)?;
    let opts = SearchOptions {
        full_trace,
        ..search_options(cfg)
    };
    let key = format!(
        "minimax-regret_N{population}_step{step}_refine{}",
        u8::from(opts.refine)
    );
    checkpointed(cfg, &key, |obs, resume| {
        minimax_sample_size_with(population, &grid, &opts, obs, resume)
    })
}

fn wmb(
    cfg: &RunConfig,
    population: u64,
    eps: f64,
    full_trace: bool,
) -> Result<DesignRecommendation, CliError> {
    bernoulli_only(cfg, "the grid WMB rule")?;
    let step = cfg.grid.step.unwrap_or(eps);
    let grid = GridSpec::new(step, false, eps, Default::default())?;
    let opts = SearchOptions {
        full_trace,
        ..search_options(cfg)
    };
    let key = format!(
        "wmb-grid_N{population}_eps{eps}_step{step}_prune{}",
        u8::from(opts.prune)
    );
    checkpointed(cfg, &key, |obs, resume| {
        wmb_sample_size_with(population, &grid, &opts, obs, resume)
    })
}

pub fn recommend(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let population = cfg.require_population()?;
    let criterion = cfg
        .criterion
        .ok_or_else(|| CliError::Config("--criterion is required".into()))?;
    if criterion != Criterion::GaussianWmb {
        bernoulli_only(cfg, criterion.as_str())?;
    }
    let rec = match criterion {
        Criterion::MinimaxRegret => minimax(cfg, population, false)?,
        Criterion::WmbGrid => wmb(cfg, population, cfg.require_epsilon()?, false)?,
        Criterion::WmbNormalApprox => wmb_sample_size_na(population)?,
        Criterion::GaussianWmb => gaussian_wmb_recommendation(population)?,
        Criterion::RelativeRegret => {
            let grid = GridSpec::full(cfg.grid.step.unwrap_or(REGRET_STEP))?;
            relative_regret_sample_size(population, &grid, &search_options(cfg))?
        }
    };
    let text = match cfg.format() {
        Format::Json => pretty(&rec),
        Format::Csv => {
            let mut t = Table::new(&[
                "criterion",
                "N",
                "mStar",
                "fraction",
                "feasible",
                "mu1",
                "mu0",
                "value",
                "degenerate",
            ]);
            let lf = rec.least_favorable;
            t.push(vec![
                Cell::Text(rec.criterion.to_string()),
                Cell::Int(rec.population),
                rec.m_star.map_or(Cell::Missing, Cell::Int),
                rec.fraction.map_or(Cell::Missing, Cell::Sig),
                Cell::Bool(rec.feasible),
                lf.map_or(Cell::Missing, |s| Cell::Exact(s.mu1)),
                lf.map_or(Cell::Missing, |s| Cell::Exact(s.mu0)),
                rec.value.map_or(Cell::Missing, Cell::Sig),
                Cell::Bool(rec.degenerate),
            ]);
            t.to_csv()?
        }
    };
    write(cfg, &text)?;
    Ok(if rec.feasible {
        Outcome::Ok
    } else {
        Outcome::Infeasible
    })
}

fn populations(cfg: &RunConfig, default: &[u64]) -> Vec<u64> {
    match (&cfg.population_list, cfg.population) {
        (Some(list), _) => list.clone(),
        (None, Some(n)) => vec![n],
        (None, None) => default.to_vec(),
    }
}

fn epsilons(cfg: &RunConfig, default: &[f64]) -> Vec<f64> {
    match (&cfg.epsilon_list, cfg.epsilon) {
        (Some(list), _) => list.clone(),
        (None, Some(e)) => vec![e],
        (None, None) => default.to_vec(),
    }
}

fn target(cfg: &RunConfig) -> Result<Target, CliError> {
    cfg.target
        .ok_or_else(|| CliError::Config("a table or figure name is required".into()))
}

pub fn table(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let which = target(cfg)?;
    let mut outcome = Outcome::Ok;
    let t = match which {
        Target::Table1 => {
            let mut t = Table::new(&["N", "m", "fraction"]);
            for n in populations(cfg, &TABLE_POPULATIONS) {
                let rec = minimax(cfg, n, false)?;
                t.push(vec![
                    Cell::Int(n),
                    rec.m_star.map_or(Cell::Missing, Cell::Int),
                    rec.fraction.map_or(Cell::Missing, |f| Cell::Fixed(f, 3)),
                ]);
            }
            t
        }
        Target::Table2 => {
            let mut t = Table::new(&["epsilon", "N", "m", "fraction", "mu0", "mu1"]);
            for eps in epsilons(cfg, &TABLE2_EPSILONS) {
                for n in populations(cfg, &TABLE_POPULATIONS) {
                    let rec = wmb(cfg, n, eps, false)?;
                    if !rec.feasible {
                        outcome = Outcome::Infeasible;
                    }
                    let lf = rec.least_favorable.filter(|_| rec.feasible);
                    t.push(vec![
                        Cell::Exact(eps),
                        Cell::Int(n),
                        rec.m_star.map_or(Cell::Missing, Cell::Int),
                        rec.fraction.map_or(Cell::Missing, |f| Cell::Fixed(f, 3)),
                        lf.map_or(Cell::Missing, |s| Cell::Fixed(s.mu0, 3)),
                        lf.map_or(Cell::Missing, |s| Cell::Fixed(s.mu1, 3)),
                    ]);
                }
            }
            t
        }
        other => {
            return Err(CliError::Config(format!(
                "{} is a figure; use the figure command",
                target_name(other)
            )))
        }
    };
    let name = target_name(which);
    write(
        cfg,
        &t.render(cfg.format(), |rows| json!({ "table": name, "rows": rows }))?,
    )?;
    Ok(outcome)
}

fn target_name(t: Target) -> String {
    serde_json::to_value(t)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn figure(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let which = target(cfg)?;
    if which.is_table() {
        return Err(CliError::Config(format!(
            "{} is a table; use the table command",
            target_name(which)
        )));
    }
    let population = cfg.population.unwrap_or(FIGURE_POPULATION);
    let name = target_name(which);
    let mut extra = serde_json::Map::new();
    let t = match which {
        Target::Fig1a | Target::Fig1b => {
            let rec = minimax(cfg, population, true)?;
            let mut t = if which == Target::Fig1a {
                Table::new(&["m", "mu1", "mu0"])
            } else {
                Table::new(&["m", "worstRegret"])
            };
            for e in &rec.trace {
                t.push(if which == Target::Fig1a {
                    vec![
                        Cell::Int(e.m),
                        Cell::Sig(e.argmax.mu1),
                        Cell::Sig(e.argmax.mu0),
                    ]
                } else {
                    vec![Cell::Int(e.m), Cell::Sig(e.worst_value)]
                });
            }
            extra.insert("mStar".into(), json!(rec.m_star));
            t
        }
        Target::Fig2 => {
            let eps = cfg.epsilon.unwrap_or(FIGURE_EPSILON);
            let rec = wmb(cfg, population, eps, true)?;
            let mut t = Table::new(&["m", "maxEta", "crossing"]);
            for e in &rec.trace {
                t.push(vec![
                    Cell::Int(e.m),
                    Cell::Sig(e.worst_value),
                    Cell::Bool(Some(e.m) == rec.m_star),
                ]);
            }
            extra.insert("epsilon".into(), json!(eps));
            extra.insert("crossing".into(), json!(rec.m_star));
            if !cfg.quiet {
                match rec.m_star {
                    Some(m) => eprintln!("fig2: max ratio first at or below 1 at m={m}"),
                    None => eprintln!("fig2: max ratio never falls to 1"),
                }
            }
            t
        }
        Target::FigA => {
            bernoulli_only(cfg, "relative regret")?;
            let mut t = Table::new(&["epsilon", "m", "relativeRegret"]);
            for eps in epsilons(cfg, &FIG_A_EPSILONS) {
                let s = BernoulliState::new(0.0, eps)?;
                for (m, v) in relative_regret_curve(population, &s)? {
                    t.push(vec![Cell::Exact(eps), Cell::Int(m), Cell::Sig(v)]);
                }
            }
            t
        }
        Target::Table1 | Target::Table2 => unreachable!("checked above"),
    };
    let text = t.render(cfg.format(), |series| {
        let mut obj = serde_json::Map::new();
        obj.insert("figure".into(), json!(name));
        obj.insert("N".into(), json!(population));
        obj.extend(extra);
        obj.insert("series".into(), series);
        Value::Object(obj)
    })?;
    write(cfg, &text)?;
    Ok(Outcome::Ok)
}

pub fn validate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let suites = if cfg.suites.is_empty() {
        Suite::ALL.to_vec()
    } else {
        cfg.suites.clone()
    };
    let vc = ValidateConfig {
        seed: cfg.seed,
        parallelism: parallelism(cfg),
        ..ValidateConfig::default()
    };
    let mut reports = Vec::new();
    for s in suites {
        let started = std::time::Instant::now();
        let r = run_suite(s, &vc)?;
        if !cfg.quiet {
            eprintln!(
                "{}: {} ({:.1}s)",
                s.as_str(),
                if r.passed { "pass" } else { "FAIL" },
                started.elapsed().as_secs_f64()
            );
        }
        reports.push(r);
    }
    let passed = reports.iter().all(|r| r.passed);
    let text = match cfg.format() {
        Format::Json => pretty(&json!({ "passed": passed, "suites": reports })),
        Format::Csv => {
            let mut t = Table::new(&[
                "suite",
                "passed",
                "cases",
                "metric",
                "worst",
                "threshold",
                "detail",
            ]);
            for r in &reports {
                t.push(vec![
                    Cell::Text(r.suite.as_str().into()),
                    Cell::Bool(r.passed),
                    Cell::Int(r.cases as u64),
                    Cell::Text(r.metric.clone()),
                    Cell::Sig(r.worst),
                    Cell::Sig(r.threshold),
                    Cell::Text(r.detail.clone()),
                ]);
            }
            t.to_csv()?
        }
    };
    write(cfg, &text)?;
    Ok(if passed { Outcome::Ok } else { Outcome::Failed })
}

pub fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let population = cfg.require_population()?;
    let sim = &cfg.simulation;
    let m = sim
        .m
        .ok_or_else(|| CliError::Config("--m is required".into()))?;
    let ctx = DesignContext::new(population, m)?;
    let missing = |flag: &str| CliError::Config(format!("--{flag} is required"));
    let (model, exact) = match cfg.model {
        Model::Bernoulli => {
            let s = BernoulliState::new(
                sim.mu1.ok_or_else(|| missing("mu1"))?,
                sim.mu0.ok_or_else(|| missing("mu0"))?,
            )?;
            let exact = match sim.quantity {
                Quantity::ErrorProb => error_prob(&ctx, &s)?,
                Quantity::Regret => evaluate(&ctx, &s)?.regret,
            };
            (SimModel::Bernoulli(s), exact)
        }
        Model::Gaussian { sigma } => {
            let g = GaussianState::new(sim.tau.ok_or_else(|| missing("tau"))?, sigma)?;
            let e = if m == 0 {
                0.5
            } else {
                gaussian_error_prob(m as f64, &g)?
            };
            let exact = match sim.quantity {
                Quantity::ErrorProb => e,
                Quantity::Regret => {
                    let gap = g.tau.abs();
                    0.5 * m as f64 * gap + ctx.rollout() as f64 * gap * e
                }
            };
            (SimModel::Gaussian(g), exact)
        }
    };
    let sc = SimConfig {
        replications: sim.replications,
        seed: cfg.seed,
        model,
        ctx,
        parallelism: parallelism(cfg),
    };
    let est = match sim.quantity {
        Quantity::ErrorProb => simulate_error_prob(&sc)?,
        Quantity::Regret => simulate_regret(&sc)?,
    };
    let z = if est.std_error > 0.0 {
        (est.mean - exact) / est.std_error
    } else {
        0.0
    };
    let quantity = match sim.quantity {
        Quantity::ErrorProb => "error-prob",
        Quantity::Regret => "regret",
    };
    let text = match cfg.format() {
        Format::Json => pretty(&json!({
            "quantity": quantity,
            "N": population,
            "m": m,
            "seed": cfg.seed,
            "model": model,
            "estimate": est,
            "exact": exact,
            "zScore": z,
        })),
        Format::Csv => {
            let mut t = Table::new(&[
                "quantity",
                "N",
                "m",
                "replications",
                "mean",
                "stdError",
                "exact",
                "zScore",
            ]);
            t.push(vec![
                Cell::Text(quantity.into()),
                Cell::Int(population),
                Cell::Int(m),
                Cell::Int(est.replications),
                Cell::Exact(est.mean),
                Cell::Exact(est.std_error),
                Cell::Exact(exact),
                Cell::Sig(z),
            ]);
            t.to_csv()?
        }
    };
    write(cfg, &text)?;
    Ok(Outcome::Ok)
}
