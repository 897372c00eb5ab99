//! Localization of least favourable states and the local normal
//! approximation check.

use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use super::{worst_case_wmb, SearchOptions, TraceEntry};
use crate::bernoulli::{BernoulliState, DesignContext, PairKernel, StepTable};
use crate::criteria::{marginal_ratio, wmb_ratio_na};
use crate::error::{domain, Result};
use crate::exec::{map_with_scratch, Parallelism};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LocalizationRow {
    pub m: u64,
    pub value: f64,
    pub argmax: BernoulliState,
    pub gap: f64,
    /// `2 sqrt(ln N / m)`
    pub bound: f64,
    pub within: bool,
    /// The bound is only guaranteed when the maximal ratio is at least 1.
    pub required: bool,
}

impl LocalizationRow {
    pub fn from_entry(population: u64, e: &TraceEntry) -> Self {
        let gap = e.argmax.tau().abs();
        let bound = if e.m == 0 {
            f64::INFINITY
        } else {
            2.0 * ((population as f64).ln() / e.m as f64).sqrt()
        };
        Self {
            m: e.m,
            value: e.worst_value,
            argmax: e.argmax,
            gap,
            bound,
            within: gap <= bound,
            required: e.worst_value >= 1.0,
        }
    }

    pub fn ok(&self) -> bool {
        self.within || !self.required
    }
}

/// Gap of the grid argmax of the marginal ratio against `2 sqrt(ln N / m)`
/// for each size in `sizes`.
pub fn localization_diagnostic(
    population: u64,
    sizes: &[u64],
    grid: &GridSpec,
    opts: &SearchOptions,
) -> Result<Vec<LocalizationRow>> {
    sizes
        .iter()
        .map(|&m| {
            if m == 0 {
                return Err(domain("localization needs m > 0"));
            }
            let r = worst_case_wmb(&DesignContext::new(population, m)?, grid, opts)?;
            Ok(LocalizationRow::from_entry(
                population,
                &TraceEntry::from(&r),
            ))
        })
        .collect()
}

/// States near the diagonal: `mid` in `[kappa, 1 - kappa]` and
/// `0 < half_gap <= K sqrt(ln N / N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LocalRegion {
    pub kappa: f64,
    pub big_k: f64,
    pub population: u64,
}

impl LocalRegion {
    pub fn new(kappa: f64, big_k: f64, population: u64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 0.5) {
            return Err(domain(format!("kappa must lie in (0, 1/2), got {kappa}")));
        }
        if !(big_k > 0.0 && big_k.is_finite()) {
            return Err(domain(format!("K must be positive, got {big_k}")));
        }
        if population < 2 {
            return Err(domain("population must be at least 2"));
        }
        Ok(Self {
            kappa,
            big_k,
            population,
        })
    }

    pub fn max_half_gap(&self) -> f64 {
        let n = self.population as f64;
        self.big_k * (n.ln() / n).sqrt()
    }

    /// `per_axis x per_axis` grid: equally spaced midpoints including both
    /// ends, half gaps `j * max / per_axis` for `j = 1..=per_axis`. States
    /// leaving the unit square are dropped.
    pub fn states(&self, per_axis: usize) -> Vec<BernoulliState> {
        let dmax = self.max_half_gap();
        let mut out = Vec::with_capacity(per_axis * per_axis);
        for i in 0..per_axis {
            let mid = if per_axis == 1 {
                0.5
            } else {
                self.kappa + (1.0 - 2.0 * self.kappa) * i as f64 / (per_axis - 1) as f64
            };
            for j in 1..=per_axis {
                let d = dmax * j as f64 / per_axis as f64;
                if let Ok(s) = BernoulliState::from_centered(mid, d) {
                    out.push(s);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NaAgreement {
    pub population: u64,
    pub m: u64,
    pub states: usize,
    pub max_abs_diff: f64,
    pub worst_state: BernoulliState,
}

/// Largest |exact ratio - normal-approximation ratio| over the region grid.
pub fn na_agreement(
    region: &LocalRegion,
    m: u64,
    per_axis: usize,
    par: Parallelism,
) -> Result<NaAgreement> {
    let ctx = DesignContext::new(region.population, m)?;
    if m < 2 || m + 2 > region.population {
        return Err(domain(format!("need 2 <= m <= N - 2, got m={m}")));
    }
    let states = region.states(per_axis);
    if states.is_empty() {
        return Err(domain("local region grid is empty"));
    }
    let here = StepTable::new(ctx.pairs());
    let next = StepTable::new(ctx.pairs() + 1);
    let diffs = map_with_scratch(par, &states, PairKernel::new, |k, s| {
        let eta = marginal_ratio(
            ctx.population,
            m,
            k.error_prob(&here, s),
            k.error_prob(&next, s),
        );
        (eta - wmb_ratio_na(&ctx, s).expect("interior state")).abs()
    });
    let (i, &d) = diffs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("nonempty");
    Ok(NaAgreement {
        population: region.population,
        m,
        states: states.len(),
        max_abs_diff: d,
        worst_state: states[i],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::wmb_ratio;

    #[test]
    fn region_states() {
        let r = LocalRegion::new(0.1, 1.0, 2000).unwrap();
        let s = r.states(20);
        assert_eq!(s.len(), 400);
        let dmax = r.max_half_gap();
        for st in &s {
            assert!(st.mid() >= 0.1 - 1e-12 && st.mid() <= 0.9 + 1e-12);
            assert!(st.half_gap() > 0.0 && st.half_gap() <= dmax + 1e-12);
        }
        assert!(LocalRegion::new(0.6, 1.0, 100).is_err());
    }

    #[test]
    fn agreement_matches_pointwise_ratios() {
        let r = LocalRegion::new(0.1, 1.0, 400).unwrap();
        let a = na_agreement(&r, 200, 5, Parallelism::Sequential).unwrap();
        let ctx = DesignContext::new(400, 200).unwrap();
        let want = r
            .states(5)
            .iter()
            .map(|s| (wmb_ratio(&ctx, s).unwrap().value - wmb_ratio_na(&ctx, s).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!((a.max_abs_diff - want).abs() < 1e-10);
        assert!(a.max_abs_diff < 0.2);
    }

    #[test]
    fn localization_rows() {
        let g = GridSpec::separated(0.01).unwrap();
        let rows = localization_diagnostic(200, &[90], &g, &SearchOptions::default()).unwrap();
        let row = rows[0];
        assert!((row.gap - 0.01).abs() < 1e-12);
        assert!(row.ok());
        let diag = GridSpec::diagonal(0.1).unwrap();
        let rows =
            localization_diagnostic(200, &[10, 50], &diag, &SearchOptions::default()).unwrap();
        assert!(rows.iter().all(|r| r.gap == 0.0 && r.within));
    }
}
