//! Direct O(n) error probabilities from the two arm-count distributions.
//!
//! The walk DP in the parent module needs O(n^2) work to reach n pairs from
//! scratch. Grid searches need e(m) for thousands of states at one `m`, so
//! this kernel evaluates
//!
//!   e = sum_k P(X_lo = k) [P(X_hi < k) + P(X_hi = k) / 2]
//!
//! with X_hi ~ Bin(n, better mean), X_lo ~ Bin(n, worse mean), in one pass
//! over the overlap of the two mass windows. The recurrence ratios depend
//! only on `n` and are shared across states through [`StepTable`].

use super::BernoulliState;
use crate::dist::UNDERFLOW_CUTOFF;

/// Binomial recurrence ratios for a fixed trial count.
#[derive(Debug, Clone)]
pub struct StepTable {
    n: usize,
    /// (n - k) / (k + 1)
    up: Vec<f64>,
    /// k / (n - k + 1)
    down: Vec<f64>,
}

impl StepTable {
    pub fn new(n: usize) -> Self {
        let up = (0..n).map(|k| (n - k) as f64 / (k + 1) as f64).collect();
        let down = (0..=n).map(|k| k as f64 / (n - k + 1) as f64).collect();
        Self { n, up, down }
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Unnormalised mass window: `mass[start..=end]` is valid.
#[derive(Debug, Clone, Copy)]
struct Window {
    start: usize,
    end: usize,
    total: f64,
}

/// Scratch buffers for one worker.
#[derive(Debug, Clone, Default)]
pub struct PairKernel {
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl PairKernel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Error probability at `table.n()` pairs.
    pub fn error_prob(&mut self, table: &StepTable, s: &BernoulliState) -> f64 {
        if s.is_diagonal() {
            return 0.5;
        }
        self.error_and_tie(table, s).0
    }

    /// (error probability, tie probability).
    pub fn error_and_tie(&mut self, table: &StepTable, s: &BernoulliState) -> (f64, f64) {
        if s.is_diagonal() {
            let tie = if table.n == 0 {
                1.0
            } else {
                self.tie_only(table, s.mu1)
            };
            return (0.5, tie);
        }
        if table.n == 0 {
            return (0.5, 1.0);
        }
        let (p_hi, p_lo) = s.ordered();
        let n = table.n;
        if self.hi.len() < n + 1 {
            self.hi.resize(n + 1, 0.0);
            self.lo.resize(n + 1, 0.0);
        }
        let wh = fill(table, p_hi, &mut self.hi);
        let wl = fill(table, p_lo, &mut self.lo);
        let (hi, lo) = (&self.hi, &self.lo);

        // mass of X_hi strictly below the first lo index
        let mut below = 0.0;
        let mut k = wh.start;
        while k < wl.start && k <= wh.end {
            below += hi[k];
            k += 1;
        }
        let mut err = 0.0;
        let mut tie = 0.0;
        for k in wl.start..=wl.end {
            let h = if k >= wh.start && k <= wh.end {
                hi[k]
            } else {
                0.0
            };
            let l = lo[k];
            err += l * (below + 0.5 * h);
            tie += l * h;
            below += h;
        }
        let norm = 1.0 / (wh.total * wl.total);
        (err * norm, tie * norm)
    }

    fn tie_only(&mut self, table: &StepTable, p: f64) -> f64 {
        let n = table.n;
        if self.hi.len() < n + 1 {
            self.hi.resize(n + 1, 0.0);
            self.lo.resize(n + 1, 0.0);
        }
        let w = fill(table, p, &mut self.hi);
        let sq: f64 = self.hi[w.start..=w.end].iter().map(|x| x * x).sum();
        sq / (w.total * w.total)
    }
}

fn fill(table: &StepTable, p: f64, out: &mut [f64]) -> Window {
    let n = table.n;
    if p <= 0.0 {
        out[0] = 1.0;
        return Window {
            start: 0,
            end: 0,
            total: 1.0,
        };
    }
    if p >= 1.0 {
        out[n] = 1.0;
        return Window {
            start: n,
            end: n,
            total: 1.0,
        };
    }
    let cutoff = UNDERFLOW_CUTOFF;
    let odds = p / (1.0 - p);
    let inv_odds = (1.0 - p) / p;
    let mode = (((n + 1) as f64 * p).floor() as usize).min(n);
    out[mode] = 1.0;
    let mut total = 1.0;

    let mut end = mode;
    let mut v = 1.0;
    while end < n {
        v *= table.up[end] * odds;
        if v < cutoff {
            break;
        }
        end += 1;
        out[end] = v;
        total += v;
    }
    let mut start = mode;
    v = 1.0;
    while start > 0 {
        v *= table.down[start] * inv_odds;
        if v < cutoff {
            break;
        }
        start -= 1;
        out[start] = v;
        total += v;
    }
    Window { start, end, total }
}

/// One-off direct evaluation of e(2n) for a state.
pub fn error_prob_direct(pairs: usize, s: &BernoulliState) -> f64 {
    PairKernel::new().error_prob(&StepTable::new(pairs), s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernoulli::{error_prob, tie_prob, DesignContext};
    use proptest::prelude::*;

    #[test]
    fn agrees_with_walk_on_examples() {
        let s = BernoulliState::new(0.7, 0.3).unwrap();
        assert!((error_prob_direct(2, &s) - 0.216).abs() < 1e-15);
        assert!((error_prob_direct(3, &s) - 0.16308).abs() < 1e-15);
        assert_eq!(error_prob_direct(0, &s), 0.5);
        assert_eq!(error_prob_direct(7, &s.swapped()), error_prob_direct(7, &s));
    }

    #[test]
    fn boundary_states() {
        // (p, 0): tie iff the treated arm records no success.
        let s = BernoulliState::new(0.01, 0.0).unwrap();
        let want = 0.5 * 0.99f64.powi(44);
        assert!((error_prob_direct(44, &s) / want - 1.0).abs() < 1e-13);
        let s = BernoulliState::new(1.0, 0.0).unwrap();
        assert_eq!(error_prob_direct(5, &s), 0.0);
        let s = BernoulliState::new(1.0, 1.0).unwrap();
        let mut k = PairKernel::new();
        assert_eq!(k.error_and_tie(&StepTable::new(5), &s), (0.5, 1.0));
    }

    proptest! {
        #[test]
        fn agrees_with_walk_dp(a in 0.0f64..=1.0, b in 0.0f64..=1.0, n in 0usize..300) {
            let ctx = DesignContext::new(1000, 2 * n as u64).unwrap();
            let s = BernoulliState::new(a, b).unwrap();
            let mut k = PairKernel::new();
            let (e, t) = k.error_and_tie(&StepTable::new(n), &s);
            prop_assert!((e - error_prob(&ctx, &s).unwrap()).abs() < 1e-12);
            if n > 0 {
                prop_assert!((t - tie_prob(&ctx, &s).unwrap()).abs() < 1e-12);
            }
        }
    }
}
