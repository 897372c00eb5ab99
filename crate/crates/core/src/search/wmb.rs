//! Worst-case marginal ratio and the WMB sample size.

use std::collections::BTreeMap;

use super::engine::StateSet;
use super::grid::{GridSpec, Symmetry};
use super::{
    Criterion, DesignRecommendation, SearchDiagnostics, SearchObserver, SearchOptions, Silent,
    TraceEntry, WorstCaseResult,
};
use crate::bernoulli::DesignContext;
use crate::criteria::{marginal_ratio, wmb_ratio_na_sup};
use crate::error::{domain, Error, Result};
use crate::gaussian::{smallest_even_third, LimitCurve};

/// Error probabilities at `pairs` for the leading states, carried from one
/// size to the next: the ratio at `m` needs `e(m + 2)`, which is `e(m)` at the
/// following step.
#[derive(Default)]
struct ErrCache {
    pairs: usize,
    vals: Vec<f64>,
}

fn wmb_at(
    set: &StateSet,
    population: u64,
    m: u64,
    opts: &SearchOptions,
    cache: &mut ErrCache,
) -> WorstCaseResult {
    let n = (m / 2) as usize;
    let par = opts.parallelism;
    let keep = if opts.prune {
        set.unpruned(population, m).max(1)
    } else {
        set.len()
    };

    let mut here = std::mem::take(&mut cache.vals);
    if cache.pairs != n {
        here.clear();
    }
    if here.len() < keep {
        let extra = set.errors(par, n, here.len()..keep);
        here.extend(extra);
    }
    here.truncate(keep);
    let next = set.errors(par, n + 1, 0..keep);
    let etas: Vec<f64> = here
        .iter()
        .zip(&next)
        .map(|(&a, &b)| marginal_ratio(population, m, a, b))
        .collect();
    *cache = ErrCache {
        pairs: n + 1,
        vals: next,
    };

    let pruned_max = (opts.verify_pruning && keep < set.len()).then(|| {
        let a = set.errors(par, n, keep..set.len());
        let b = set.errors(par, n + 1, keep..set.len());
        a.iter()
            .zip(&b)
            .map(|(&x, &y)| marginal_ratio(population, m, x, y))
            .fold(f64::NEG_INFINITY, f64::max)
    });

    let (idx, value) = set.argmax(&etas, 0).expect("at least one state");
    WorstCaseResult {
        m,
        value,
        argmax: set.reported(idx),
        states_evaluated: keep as u64,
        states_pruned: (set.len() - keep) as u64,
        pruned_max,
    }
}

/// Largest marginal ratio over the grid at `ctx.m`.
pub fn worst_case_wmb(
    ctx: &DesignContext,
    grid: &GridSpec,
    opts: &SearchOptions,
) -> Result<WorstCaseResult> {
    if ctx.m + 2 > ctx.population {
        return Err(domain(format!(
            "marginal ratio needs m <= N - 2, got m={} N={}",
            ctx.m, ctx.population
        )));
    }
    let set = StateSet::new(grid, Symmetry::Full)?;
    Ok(wmb_at(
        &set,
        ctx.population,
        ctx.m,
        opts,
        &mut ErrCache::default(),
    ))
}

pub fn wmb_sample_size(
    population: u64,
    grid: &GridSpec,
    opts: &SearchOptions,
) -> Result<DesignRecommendation> {
    wmb_sample_size_with(population, grid, opts, &mut Silent, &[])
}

/// Smallest even `m <= N - 2` whose worst-case marginal ratio is at most 1.
///
/// `resume` holds trace entries from an interrupted scan (consecutive sizes
/// from 0); scanning continues after the last one. Bisection mode ignores it.
pub fn wmb_sample_size_with(
    population: u64,
    grid: &GridSpec,
    opts: &SearchOptions,
    observer: &mut dyn SearchObserver,
    resume: &[TraceEntry],
) -> Result<DesignRecommendation> {
    DesignContext::new(population, 0)?;
    if grid.include_diagonal || grid.min_gap < grid.step * (1.0 - 1e-9) {
        return Err(Error::Config(
            "the WMB grid must exclude the diagonal and have a minimum gap of at least one step"
                .into(),
        ));
    }
    let set = StateSet::new(grid, Symmetry::Full)?;
    let mut rec = DesignRecommendation {
        criterion: Criterion::WmbGrid,
        population,
        m_star: None,
        fraction: None,
        feasible: false,
        least_favorable: None,
        value: None,
        degenerate: false,
        trace: Vec::new(),
        diagnostics: SearchDiagnostics::default(),
    };
    let last = population - 2;

    if opts.bisect {
        bisect(&set, &mut rec, opts, observer);
        return Ok(rec);
    }

    for (j, e) in resume.iter().enumerate() {
        if e.m != 2 * j as u64 || e.m > last {
            return Err(Error::Config(format!(
                "resume trace is not a scan prefix at m={}",
                e.m
            )));
        }
    }
    rec.trace.extend_from_slice(resume);
    if let Some(e) = resume.iter().find(|e| e.worst_value <= 1.0) {
        decide(&mut rec, e);
    }
    let trace_limit = opts.max_m.unwrap_or(last).min(last);
    let mut cache = ErrCache::default();
    let mut m = resume.last().map_or(0, |e| e.m + 2);
    while m <= last {
        if rec.feasible && (!opts.full_trace || m > trace_limit) {
            break;
        }
        let r = wmb_at(&set, population, m, opts, &mut cache);
        rec.diagnostics.absorb(&r);
        let entry = TraceEntry::from(&r);
        observer.on_entry(&entry);
        rec.trace.push(entry);
        if !rec.feasible && r.value <= 1.0 {
            decide(&mut rec, &entry);
        }
        m += 2;
    }
    if !rec.feasible {
        // report the adversary at the largest admissible size
        if let Some(e) = rec.trace.last() {
            rec.least_favorable = Some(e.argmax);
            rec.value = Some(e.worst_value);
        }
    }
    Ok(rec)
}

fn decide(rec: &mut DesignRecommendation, e: &TraceEntry) {
    rec.feasible = true;
    rec.m_star = Some(e.m);
    rec.fraction = Some(e.m as f64 / rec.population as f64);
    rec.least_favorable = Some(e.argmax);
    rec.value = Some(e.worst_value);
}

/// Bisection over even sizes, assuming feasibility is upward closed.
fn bisect(
    set: &StateSet,
    rec: &mut DesignRecommendation,
    opts: &SearchOptions,
    observer: &mut dyn SearchObserver,
) {
    let population = rec.population;
    let mut seen: BTreeMap<u64, TraceEntry> = BTreeMap::new();
    let mut eval = |m: u64, rec: &mut DesignRecommendation| -> TraceEntry {
        let r = wmb_at(set, population, m, opts, &mut ErrCache::default());
        rec.diagnostics.absorb(&r);
        let e = TraceEntry::from(&r);
        observer.on_entry(&e);
        seen.insert(m, e);
        e
    };
    let top = (population - 2) / 2;
    let e_top = eval(2 * top, rec);
    if e_top.worst_value > 1.0 {
        rec.least_favorable = Some(e_top.argmax);
        rec.value = Some(e_top.worst_value);
    } else {
        let (mut lo, mut hi) = (0u64, top);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if eval(2 * mid, rec).worst_value <= 1.0 {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        let e = seen[&(2 * hi)];
        decide(rec, &e);
    }
    rec.trace = seen.into_values().collect();
}

/// Smallest even `m >= 2` with `3 m >= N`, from the normal approximation.
pub fn wmb_sample_size_na(population: u64) -> Result<DesignRecommendation> {
    if population < 6 {
        return Err(Error::Config(format!(
            "normal-approximation rule needs N >= 6, got {population}"
        )));
    }
    DesignContext::new(population, 0)?;
    let m = smallest_even_third(population).max(2);
    let mut rec = DesignRecommendation::closed_form(Criterion::WmbNormalApprox, population, m);
    if m < population {
        rec.value = Some(wmb_ratio_na_sup(&DesignContext::new(population, m)?)?.0);
    }
    Ok(rec)
}

/// Relaxed Gaussian threshold, rounded up to an even size.
pub fn gaussian_wmb_recommendation(population: u64) -> Result<DesignRecommendation> {
    if population == 0 {
        return Err(Error::Config("population size must be positive".into()));
    }
    let m = smallest_even_third(population).max(2).min(population);
    let mut rec = DesignRecommendation::closed_form(Criterion::GaussianWmb, population, m);
    rec.value = Some(LimitCurve::for_design(population as f64, m as f64)?.sup().0);
    Ok(rec)
}
