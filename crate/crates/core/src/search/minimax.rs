//! Worst-case regret and the minimax-regret sample size.

use super::engine::StateSet;
use super::grid::{Bounds, GridSpec, Symmetry};
use super::{
    Criterion, DesignRecommendation, SearchDiagnostics, SearchObserver, SearchOptions, Silent,
    TraceEntry, WorstCaseResult,
};
use crate::bernoulli::{BernoulliState, DesignContext};
use crate::criteria::EvalBreakdown;
use crate::error::{Error, Result};

fn regrets(set: &StateSet, ctx: &DesignContext, opts: &SearchOptions) -> Vec<f64> {
    let errs = set.errors(opts.parallelism, ctx.pairs(), 0..set.len());
    errs.iter()
        .enumerate()
        .map(|(i, &e)| EvalBreakdown::from_error_prob(ctx, &set.state(i), e).regret)
        .collect()
}

/// Grid maximum, with the evaluated representative of the argmax (the
/// reported image may lie outside non-symmetric bounds, the representative
/// never does).
fn coarse(
    set: &StateSet,
    ctx: &DesignContext,
    opts: &SearchOptions,
) -> (WorstCaseResult, BernoulliState) {
    let values = regrets(set, ctx, opts);
    let (i, value) = set.argmax(&values, 0).expect("nonempty grid");
    let r = WorstCaseResult {
        m: ctx.m,
        value,
        argmax: set.reported(i),
        states_evaluated: set.len() as u64,
        states_pruned: 0,
        pruned_max: None,
    };
    (r, set.state(i))
}

/// One refinement pass in a window around `center`; returns the improved
/// result when the window beats `base`.
fn refine(
    grid: &GridSpec,
    center: BernoulliState,
    ctx: &DesignContext,
    base: &WorstCaseResult,
    opts: &SearchOptions,
) -> Result<WorstCaseResult> {
    let w = opts.refine_window;
    let clip = |x: f64| ((x - w).max(0.0), (x + w).min(1.0));
    let inter = |(a, b): (f64, f64), (c, d): (f64, f64)| (a.max(c), b.min(d));
    let bounds = Bounds {
        mu1: inter(clip(center.mu1), grid.bounds.mu1),
        mu0: inter(clip(center.mu0), grid.bounds.mu0),
    };
    let fine = GridSpec {
        step: opts.refine_step,
        bounds,
        ..*grid
    };
    let set = match StateSet::new(&fine, Symmetry::Full) {
        Ok(s) => s,
        Err(_) => return Ok(*base),
    };
    let (r, _) = coarse(&set, ctx, opts);
    let mut out = *base;
    out.states_evaluated += r.states_evaluated;
    let lex = |s: &BernoulliState| (s.mu1, s.mu0);
    if r.value > base.value || (r.value == base.value && lex(&r.argmax) < lex(&base.argmax)) {
        out.value = r.value;
        out.argmax = r.argmax;
    }
    Ok(out)
}

/// Largest regret over the grid at `ctx.m`, refined locally when
/// `opts.refine` is set.
pub fn worst_case_regret(
    ctx: &DesignContext,
    grid: &GridSpec,
    opts: &SearchOptions,
) -> Result<WorstCaseResult> {
    let set = StateSet::new(grid, Symmetry::Full)?;
    let (r, center) = coarse(&set, ctx, opts);
    if opts.refine {
        refine(grid, center, ctx, &r, opts)
    } else {
        Ok(r)
    }
}

pub fn minimax_sample_size(
    population: u64,
    grid: &GridSpec,
    opts: &SearchOptions,
) -> Result<DesignRecommendation> {
    minimax_sample_size_with(population, grid, opts, &mut Silent, &[])
}

/// Even `m` in `0..=N` minimising the worst-case regret.
///
/// Sizes are scanned upward. The worst case at `m` is at least
/// `(m / 2) * max gap`, so the scan stops once that exceeds the best value
/// found. Refinement only runs at sizes whose coarse value could still beat
/// the best refined value. `resume` is a trace prefix from an earlier run.
pub fn minimax_sample_size_with(
    population: u64,
    grid: &GridSpec,
    opts: &SearchOptions,
    observer: &mut dyn SearchObserver,
    resume: &[TraceEntry],
) -> Result<DesignRecommendation> {
    DesignContext::new(population, 0)?;
    let set = StateSet::new(grid, Symmetry::Full)?;
    let max_gap = set.max_gap();
    let mut diagnostics = SearchDiagnostics::default();
    let mut trace: Vec<TraceEntry> = Vec::new();
    let mut best: Option<TraceEntry> = None;
    let consider = |e: &TraceEntry, best: &mut Option<TraceEntry>| {
        if (e.refined || !opts.refine) && best.is_none_or(|b| e.worst_value < b.worst_value) {
            *best = Some(*e);
        }
    };
    for (j, e) in resume.iter().enumerate() {
        if e.m != 2 * j as u64 || e.m > population {
            return Err(Error::Config(format!(
                "resume trace is not a scan prefix at m={}",
                e.m
            )));
        }
        consider(e, &mut best);
        trace.push(*e);
    }
    let trace_limit = opts.max_m.unwrap_or(population).min(population);
    let mut m = resume.last().map_or(0, |e| e.m + 2);
    while m <= population {
        let bound = 0.5 * m as f64 * max_gap;
        let done = best.is_some_and(|b| bound > b.worst_value);
        if done && (!opts.full_trace || m > trace_limit) {
            break;
        }
        let ctx = DesignContext::new(population, m)?;
        let (mut r, center) = coarse(&set, &ctx, opts);
        let mut refined = false;
        if opts.refine && best.is_none_or(|b| r.value < b.worst_value) {
            r = refine(grid, center, &ctx, &r, opts)?;
            refined = true;
        }
        diagnostics.absorb(&r);
        let entry = TraceEntry {
            m,
            worst_value: r.value,
            argmax: r.argmax,
            refined,
        };
        consider(&entry, &mut best);
        observer.on_entry(&entry);
        trace.push(entry);
        m += 2;
    }
    let b = best.expect("m = 0 is always evaluated");
    Ok(DesignRecommendation {
        criterion: Criterion::MinimaxRegret,
        population,
        m_star: Some(b.m),
        fraction: Some(b.m as f64 / population as f64),
        feasible: true,
        least_favorable: Some(b.argmax),
        value: Some(b.worst_value),
        degenerate: false,
        trace,
        diagnostics,
    })
}

/// Minimiser of the worst-case relative regret over the grid. Flagged
/// degenerate: the criterion flattens toward 1/2 near the boundary and does
/// not single out an interior size.
pub fn relative_regret_sample_size(
    population: u64,
    grid: &GridSpec,
    opts: &SearchOptions,
) -> Result<DesignRecommendation> {
    DesignContext::new(population, 0)?;
    // relative regret is only swap invariant, and undefined at (0, 0)
    let set = StateSet::new(grid, Symmetry::Swap)?;
    let last = opts.max_m.unwrap_or(population).min(population);
    let mut diagnostics = SearchDiagnostics::default();
    let mut trace = Vec::new();
    let mut best: Option<TraceEntry> = None;
    for m in (0..=last).step_by(2) {
        let ctx = DesignContext::new(population, m)?;
        let errs = set.errors(opts.parallelism, ctx.pairs(), 0..set.len());
        let values: Vec<f64> = errs
            .iter()
            .enumerate()
            .map(|(i, &e)| {
                EvalBreakdown::from_error_prob(&ctx, &set.state(i), e)
                    .relative_regret
                    .unwrap_or(f64::NEG_INFINITY)
            })
            .collect();
        let (i, value) = set.argmax(&values, 0).expect("nonempty grid");
        let r = WorstCaseResult {
            m,
            value,
            argmax: set.reported(i),
            states_evaluated: set.len() as u64,
            states_pruned: 0,
            pruned_max: None,
        };
        diagnostics.absorb(&r);
        let e = TraceEntry::from(&r);
        if best.is_none_or(|b| e.worst_value < b.worst_value) {
            best = Some(e);
        }
        trace.push(e);
    }
    let b = best.expect("m = 0 is always evaluated");
    if !b.worst_value.is_finite() {
        return Err(Error::UndefinedCriterion(
            "relative regret is undefined on this grid".into(),
        ));
    }
    Ok(DesignRecommendation {
        criterion: Criterion::RelativeRegret,
        population,
        m_star: Some(b.m),
        fraction: Some(b.m as f64 / population as f64),
        feasible: true,
        least_favorable: Some(b.argmax),
        value: Some(b.worst_value),
        degenerate: true,
        trace,
        diagnostics,
    })
}
