//! Worst-case searches over state grids and sample-size selection.

mod engine;
mod grid;
mod local;
mod minimax;
mod wmb;

use serde::{Deserialize, Serialize};

use crate::bernoulli::BernoulliState;
use crate::exec::Parallelism;

pub use grid::{Bounds, GridSpec};
pub use local::{localization_diagnostic, na_agreement, LocalRegion, LocalizationRow, NaAgreement};
pub use minimax::{
    minimax_sample_size, minimax_sample_size_with, relative_regret_sample_size, worst_case_regret,
};
pub use wmb::{
    gaussian_wmb_recommendation, wmb_sample_size, wmb_sample_size_na, wmb_sample_size_with,
    worst_case_wmb,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    MinimaxRegret,
    WmbGrid,
    WmbNormalApprox,
    GaussianWmb,
    RelativeRegret,
}

impl Criterion {
    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::MinimaxRegret => "minimax-regret",
            Criterion::WmbGrid => "wmb-grid",
            Criterion::WmbNormalApprox => "wmb-normal-approx",
            Criterion::GaussianWmb => "gaussian-wmb",
            Criterion::RelativeRegret => "relative-regret",
        }
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Criterion {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        [
            Criterion::MinimaxRegret,
            Criterion::WmbGrid,
            Criterion::WmbNormalApprox,
            Criterion::GaussianWmb,
            Criterion::RelativeRegret,
        ]
        .into_iter()
        .find(|c| c.as_str() == s)
        .ok_or_else(|| crate::Error::Config(format!("unknown criterion '{s}'")))
    }
}

/// Search switches shared by the grid searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SearchOptions {
    pub parallelism: Parallelism,
    /// Local refinement of the minimax adversary.
    pub refine: bool,
    pub refine_step: f64,
    /// Half-width of the refinement window.
    pub refine_window: f64,
    /// Hoeffding pruning in marginal-ratio searches.
    pub prune: bool,
    /// Re-evaluate pruned states and report their maximum.
    pub verify_pruning: bool,
    /// Bisection instead of the ascending scan for the WMB size.
    pub bisect: bool,
    /// Keep scanning past the stopping point, up to `max_m` (or the largest
    /// admissible size), to record a complete trace.
    pub full_trace: bool,
    pub max_m: Option<u64>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            parallelism: Parallelism::default(),
            refine: true,
            refine_step: 1e-4,
            refine_window: 0.02,
            prune: true,
            verify_pruning: false,
            bisect: false,
            full_trace: false,
            max_m: None,
        }
    }
}

/// Adversary's choice at one experimental size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WorstCaseResult {
    pub m: u64,
    pub value: f64,
    pub argmax: BernoulliState,
    pub states_evaluated: u64,
    pub states_pruned: u64,
    /// Largest value among pruned states, when verification was requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pruned_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceEntry {
    pub m: u64,
    pub worst_value: f64,
    pub argmax: BernoulliState,
    /// Whether `worst_value` includes the local refinement pass.
    #[serde(default)]
    pub refined: bool,
}

impl From<&WorstCaseResult> for TraceEntry {
    fn from(r: &WorstCaseResult) -> Self {
        Self {
            m: r.m,
            worst_value: r.value,
            argmax: r.argmax,
            refined: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchDiagnostics {
    pub states_evaluated: u64,
    pub states_pruned: u64,
    pub sizes_evaluated: u64,
}

impl SearchDiagnostics {
    pub(crate) fn absorb(&mut self, r: &WorstCaseResult) {
        self.states_evaluated += r.states_evaluated;
        self.states_pruned += r.states_pruned;
        self.sizes_evaluated += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DesignRecommendation {
    pub criterion: Criterion,
    #[serde(rename = "N")]
    pub population: u64,
    /// `None` when no admissible size satisfies the criterion.
    pub m_star: Option<u64>,
    pub fraction: Option<f64>,
    pub feasible: bool,
    /// Adversary's state at the deciding size; `None` for closed forms.
    pub least_favorable: Option<BernoulliState>,
    /// Criterion value at `m_star`.
    pub value: Option<f64>,
    /// Set for criteria that are known not to identify an interior optimum.
    pub degenerate: bool,
    pub trace: Vec<TraceEntry>,
    pub diagnostics: SearchDiagnostics,
}

impl DesignRecommendation {
    pub(crate) fn closed_form(criterion: Criterion, population: u64, m: u64) -> Self {
        Self {
            criterion,
            population,
            m_star: Some(m),
            fraction: Some(m as f64 / population as f64),
            feasible: true,
            least_favorable: None,
            value: None,
            degenerate: false,
            trace: Vec::new(),
            diagnostics: SearchDiagnostics::default(),
        }
    }
}

/// Receives trace entries as a search proceeds (progress reporting,
/// checkpointing).
pub trait SearchObserver {
    fn on_entry(&mut self, _entry: &TraceEntry) {}
}

/// Observer that ignores everything.
pub struct Silent;

impl SearchObserver for Silent {}

impl<F: FnMut(&TraceEntry)> SearchObserver for F {
    fn on_entry(&mut self, entry: &TraceEntry) {
        self(entry)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criterion_round_trip() {
        for c in [
            Criterion::MinimaxRegret,
            Criterion::WmbGrid,
            Criterion::WmbNormalApprox,
            Criterion::GaussianWmb,
            Criterion::RelativeRegret,
        ] {
            assert_eq!(c.as_str().parse::<Criterion>().unwrap(), c);
            let j = serde_json::to_string(&c).unwrap();
            assert_eq!(j, format!("\"{}\"", c.as_str()));
        }
        assert!("nope".parse::<Criterion>().is_err());
    }

    #[test]
    fn options_round_trip() {
        let o = SearchOptions {
            bisect: true,
            max_m: Some(40),
            ..Default::default()
        };
        let j = serde_json::to_string(&o).unwrap();
        assert_eq!(serde_json::from_str::<SearchOptions>(&j).unwrap(), o);
        let partial: SearchOptions = serde_json::from_str(r#"{"prune": false}"#).unwrap();
        assert!(!partial.prune && partial.refine);
    }
}
