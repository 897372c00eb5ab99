//! Batched evaluation of error probabilities over a set of grid states.

use std::cmp::Ordering;
use std::ops::Range;

use super::grid::{GridPoint, GridSpec, Lattice, Symmetry};
use crate::bernoulli::{BernoulliState, PairKernel, StepTable};
use crate::error::{Error, Result};
use crate::exec::{map_with_scratch, Parallelism};

/// Slack below 1 required of the Hoeffding cap before a state is skipped.
pub(crate) const PRUNE_CAP: f64 = 0.999;

/// Orbit representatives of a grid, ordered by increasing gap.
pub(crate) struct StateSet {
    lattice: Lattice,
    points: Vec<GridPoint>,
    keys: Vec<GridPoint>,
    states: Vec<BernoulliState>,
    gaps: Vec<f64>,
}

impl StateSet {
    pub fn new(grid: &GridSpec, wanted: Symmetry) -> Result<Self> {
        grid.validate()?;
        let lattice = grid.lattice();
        let sym = lattice.closure(wanted);
        let mut points = lattice.points(sym);
        if points.is_empty() {
            return Err(Error::Config("grid contains no states".into()));
        }
        points.sort_by_key(|p| (p.gap(), p.i1, p.i0));
        // report images under the full invariance even when the bounds break it
        let keys = points
            .iter()
            .map(|&p| lattice.orbit_min(p, wanted))
            .collect();
        let states = points.iter().map(|&p| lattice.state(p)).collect();
        let gaps = points.iter().map(|&p| lattice.gap_value(p)).collect();
        Ok(Self {
            lattice,
            points,
            keys,
            states,
            gaps,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn state(&self, i: usize) -> BernoulliState {
        self.states[i]
    }

    pub fn max_gap(&self) -> f64 {
        *self.gaps.last().expect("nonempty")
    }

    /// The lexicographically smallest grid image of state `i`.
    pub fn reported(&self, i: usize) -> BernoulliState {
        self.lattice.state(self.keys[i])
    }

    /// Error probabilities at `pairs` matched pairs for states in `range`.
    pub fn errors(&self, par: Parallelism, pairs: usize, range: Range<usize>) -> Vec<f64> {
        let table = StepTable::new(pairs);
        map_with_scratch(par, &self.states[range], PairKernel::new, |k, s| {
            k.error_prob(&table, s)
        })
    }

    /// Number of leading states that survive the Hoeffding pruning rule at
    /// size `m`: a state is skipped when `tau^2 > 4 ln N / m` and
    /// `(N - m) exp(-m tau^2 / 4) <= PRUNE_CAP`.
    pub fn unpruned(&self, population: u64, m: u64) -> usize {
        if m == 0 {
            return self.len();
        }
        let mf = m as f64;
        let rest = (population - m) as f64;
        let floor = 4.0 * (population as f64).ln() / mf;
        let prunable = |t: f64| t * t > floor && rest * (-mf * t * t / 4.0).exp() <= PRUNE_CAP;
        self.gaps.partition_point(|&t| !prunable(t))
    }

    /// Index of the maximum of `values` (indexed from `offset`), ties going to
    /// the lexicographically smallest reported state.
    pub fn argmax(&self, values: &[f64], offset: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (j, &v) in values.iter().enumerate() {
            let i = offset + j;
            best = match best {
                None => Some((i, v)),
                Some((b, bv)) => match v.total_cmp(&bv) {
                    Ordering::Greater => Some((i, v)),
                    Ordering::Equal if self.keys[i] < self.keys[b] => Some((i, v)),
                    _ => Some((b, bv)),
                },
            };
        }
        best
    }
}
