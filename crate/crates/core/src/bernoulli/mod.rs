//! Exact finite-sample quantities for the Bernoulli matched-pairs model.
//!
//! The experiment assigns `n = m / 2` units to each arm. With paired
//! differences W_j = Y_j(1) - Y_j(0) in {-1, 0, 1}, the difference of success
//! counts is the trinomial walk S_n, and the empirical success rule errs
//! with probability P(S_n < 0) + P(S_n = 0) / 2 when arm 1 is better.

mod kernel;

pub use kernel::{error_prob_direct, PairKernel, StepTable};

use serde::{Deserialize, Serialize};

use crate::dist::{TrinomialWalk, WalkStepper};
use crate::error::{domain, ensure_probability, Result};

/// Success probabilities of the treated (`mu1`) and control (`mu0`) arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliState {
    pub mu1: f64,
    pub mu0: f64,
}

impl BernoulliState {
    pub fn new(mu1: f64, mu0: f64) -> Result<Self> {
        ensure_probability("mu1", mu1)?;
        ensure_probability("mu0", mu0)?;
        Ok(Self { mu1, mu0 })
    }

    /// Builds `(mid + half_gap, mid - half_gap)`.
    pub fn from_centered(mid: f64, half_gap: f64) -> Result<Self> {
        Self::new(mid + half_gap, mid - half_gap)
    }

    pub fn tau(&self) -> f64 {
        self.mu1 - self.mu0
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.mu1 + self.mu0)
    }

    pub fn half_gap(&self) -> f64 {
        0.5 * (self.mu1 - self.mu0)
    }

    pub fn q(&self) -> f64 {
        let mid = self.mid();
        mid * (1.0 - mid)
    }

    pub fn swapped(&self) -> Self {
        Self {
            mu1: self.mu0,
            mu0: self.mu1,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.mu1 == self.mu0
    }

    pub fn best_mean(&self) -> f64 {
        self.mu1.max(self.mu0)
    }

    /// `mid +- half_gap` stays inside [0, 1].
    pub fn is_consistent(&self) -> bool {
        let (m, d) = (self.mid(), self.half_gap());
        (-1e-15..=1.0 + 1e-15).contains(&(m + d)) && (-1e-15..=1.0 + 1e-15).contains(&(m - d))
    }

    /// (better, worse) means.
    pub(crate) fn ordered(&self) -> (f64, f64) {
        if self.mu1 >= self.mu0 {
            (self.mu1, self.mu0)
        } else {
            (self.mu0, self.mu1)
        }
    }

    /// Walk of paired differences treated minus control.
    pub fn walk(&self, steps: usize) -> TrinomialWalk {
        walk_for(self.mu1, self.mu0, steps)
    }
}

fn walk_for(mu1: f64, mu0: f64, steps: usize) -> TrinomialWalk {
    let up = mu1 * (1.0 - mu0);
    let down = mu0 * (1.0 - mu1);
    let stay = mu1 * mu0 + (1.0 - mu1) * (1.0 - mu0);
    TrinomialWalk {
        up,
        stay,
        down,
        steps,
    }
}

/// Population size `population` (N) and experimental size `m`, both even.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignContext {
    pub population: u64,
    pub m: u64,
}

impl DesignContext {
    pub fn new(population: u64, m: u64) -> Result<Self> {
        if population == 0 || !population.is_multiple_of(2) {
            return Err(domain(format!(
                "population size must be even and positive, got {population}"
            )));
        }
        if !m.is_multiple_of(2) {
            return Err(domain(format!("experimental size must be even, got {m}")));
        }
        if m > population {
            return Err(domain(format!(
                "experimental size {m} exceeds population {population}"
            )));
        }
        Ok(Self { population, m })
    }

    /// Units per arm.
    pub fn pairs(&self) -> usize {
        (self.m / 2) as usize
    }

    pub fn rollout(&self) -> u64 {
        self.population - self.m
    }

    pub fn with_m(&self, m: u64) -> Result<Self> {
        Self::new(self.population, m)
    }
}

/// Tie-adjusted probability that the empirical success rule picks the
/// worse arm. Equal means give exactly 1/2, as does `m = 0` (no data, the
/// rule ties).
pub fn error_prob(ctx: &DesignContext, s: &BernoulliState) -> Result<f64> {
    let mut ev = ErrorProbStepper::new(s, ctx.pairs());
    ev.advance_to_pairs(ctx.pairs());
    Ok(ev.error_prob())
}

/// P(S_n = 0): both arms record the same number of successes.
pub fn tie_prob(ctx: &DesignContext, s: &BernoulliState) -> Result<f64> {
    if ctx.m < 2 {
        return Err(domain("tie probability needs m >= 2"));
    }
    let mut ev = ErrorProbStepper::new(s, ctx.pairs());
    ev.advance_to_pairs(ctx.pairs());
    Ok(ev.tie_prob())
}

/// Both sides of `e(m) - e(m + 2) = |delta| P(S_n = 0)`, from one DP pass.
pub fn exact_identity_gap(ctx: &DesignContext, s: &BernoulliState) -> Result<(f64, f64)> {
    if ctx.m < 2 {
        return Err(domain("identity check needs m >= 2"));
    }
    if ctx.m + 2 > ctx.population {
        return Err(domain(format!(
            "m + 2 = {} exceeds population {}",
            ctx.m + 2,
            ctx.population
        )));
    }
    let mut ev = ErrorProbStepper::new(s, ctx.pairs() + 1);
    ev.advance_to_pairs(ctx.pairs());
    let e_here = ev.error_prob();
    let rhs = s.half_gap().abs() * ev.tie_prob();
    ev.advance();
    Ok((e_here - ev.error_prob(), rhs))
}

/// Hoeffding bound `exp(-m tau^2 / 4)` on the error probability.
pub fn hoeffding_error_bound(ctx: &DesignContext, s: &BernoulliState) -> f64 {
    let tau = s.tau();
    (-(ctx.m as f64) * tau * tau / 4.0).exp()
}

/// Error probabilities for one state along m = 0, 2, 4, ... Holds the
/// rolling walk buffer, so each step costs O(n). Single owner.
#[derive(Debug, Clone)]
pub struct ErrorProbStepper {
    diagonal: bool,
    stepper: WalkStepper,
}

impl ErrorProbStepper {
    pub fn new(s: &BernoulliState, max_pairs: usize) -> Self {
        // Orient so the walk drifts upward; the error event is then S < 0
        // regardless of which arm is better, and swapping arms is exact.
        let (hi, lo) = s.ordered();
        Self {
            diagonal: s.is_diagonal(),
            stepper: WalkStepper::with_capacity(&walk_for(hi, lo, 0), max_pairs),
        }
    }

    pub fn pairs(&self) -> usize {
        self.stepper.steps()
    }

    pub fn m(&self) -> u64 {
        2 * self.stepper.steps() as u64
    }

    pub fn advance(&mut self) {
        self.stepper.advance();
    }

    pub fn advance_to_pairs(&mut self, n: usize) {
        self.stepper.advance_to(n);
    }

    pub fn error_prob(&self) -> f64 {
        if self.diagonal {
            return 0.5;
        }
        self.stepper.negative_mass() + 0.5 * self.stepper.prob(0)
    }

    pub fn tie_prob(&self) -> f64 {
        self.stepper.prob(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx(n: u64, m: u64) -> DesignContext {
        DesignContext::new(n, m).unwrap()
    }

    fn st(mu1: f64, mu0: f64) -> BernoulliState {
        BernoulliState::new(mu1, mu0).unwrap()
    }

    /// Enumerates every 0/1 outcome vector of the 2n experimental units.
    fn brute_error(m: u64, s: &BernoulliState) -> f64 {
        let n = (m / 2) as u32;
        if s.mu1 == s.mu0 {
            return 0.5;
        }
        let mut total = 0.0;
        for bits in 0u32..(1 << (2 * n)) {
            let treated = bits & ((1 << n) - 1);
            let control = bits >> n;
            let mut p = 1.0;
            for i in 0..n {
                p *= if treated >> i & 1 == 1 {
                    s.mu1
                } else {
                    1.0 - s.mu1
                };
                p *= if control >> i & 1 == 1 {
                    s.mu0
                } else {
                    1.0 - s.mu0
                };
            }
            let (x1, x0) = (treated.count_ones(), control.count_ones());
            let wrong = if s.mu1 > s.mu0 { x1 < x0 } else { x1 > x0 };
            if wrong {
                total += p;
            } else if x1 == x0 {
                total += 0.5 * p;
            }
        }
        total
    }

    #[test]
    fn state_derived_quantities() {
        let s = st(0.7, 0.3);
        assert!((s.tau() - 0.4).abs() < 1e-15);
        assert!((s.mid() - 0.5).abs() < 1e-15);
        assert!((s.half_gap() - 0.2).abs() < 1e-15);
        assert!((s.q() - 0.25).abs() < 1e-15);
        assert!(s.is_consistent());
        assert!(BernoulliState::new(1.2, 0.3).is_err());
        assert!(BernoulliState::from_centered(0.9, 0.2).is_err());
    }

    #[test]
    fn context_validation() {
        assert!(DesignContext::new(10, 3).is_err());
        assert!(DesignContext::new(9, 2).is_err());
        assert!(DesignContext::new(10, 12).is_err());
        assert!(DesignContext::new(0, 0).is_err());
        assert_eq!(ctx(10, 4).pairs(), 2);
    }

    #[test]
    fn walk_matches_centred_parametrisation() {
        for (mu, d) in [(0.5, 0.2), (0.3, 0.05), (0.1, 0.1), (0.8, -0.15)] {
            let s = BernoulliState::from_centered(mu, d).unwrap();
            let w = s.walk(1);
            let q = mu * (1.0 - mu);
            assert!((w.up - (q + d + d * d)).abs() < 1e-14);
            assert!((w.stay - (1.0 - 2.0 * q - 2.0 * d * d)).abs() < 1e-14);
            assert!((w.down - (q - d + d * d)).abs() < 1e-14);
            assert!((w.up + w.stay + w.down - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn error_prob_examples() {
        assert_eq!(error_prob(&ctx(20, 10), &st(0.4, 0.4)).unwrap(), 0.5);
        // 27/125 and 4077/25000 by exact rational enumeration
        assert!((error_prob(&ctx(10, 4), &st(0.7, 0.3)).unwrap() - 0.216).abs() < 1e-15);
        assert!((error_prob(&ctx(10, 6), &st(0.7, 0.3)).unwrap() - 0.16308).abs() < 1e-15);
        assert_eq!(error_prob(&ctx(10, 0), &st(0.9, 0.1)).unwrap(), 0.5);
    }

    #[test]
    fn tie_prob_examples() {
        assert_eq!(tie_prob(&ctx(10, 2), &st(1.0, 0.0)).unwrap(), 0.0);
        assert!((tie_prob(&ctx(10, 2), &st(0.5, 0.5)).unwrap() - 0.5).abs() < 1e-15);
        let s = BernoulliState::from_centered(0.5, 0.1).unwrap();
        let pmf = crate::dist::walk_pmf(&s.walk(4));
        assert_eq!(tie_prob(&ctx(10, 8), &s).unwrap(), pmf.prob(0));
        assert!(tie_prob(&ctx(10, 0), &s).is_err());
    }

    #[test]
    fn identity_examples() {
        let (l, r) = exact_identity_gap(&ctx(20, 6), &st(0.35, 0.35)).unwrap();
        assert_eq!((l, r), (0.0, 0.0));
        for (n, m, mu, d) in [(10, 4, 0.5, 0.2), (200, 100, 0.1, 0.01)] {
            let s = BernoulliState::from_centered(mu, d).unwrap();
            let (l, r) = exact_identity_gap(&ctx(n, m), &s).unwrap();
            assert!((l - r).abs() < 1e-12, "{l} vs {r}");
        }
        assert!(exact_identity_gap(&ctx(10, 10), &st(0.6, 0.4)).is_err());
        assert!(exact_identity_gap(&ctx(10, 0), &st(0.6, 0.4)).is_err());
    }

    #[test]
    fn hoeffding_examples() {
        assert_eq!(hoeffding_error_bound(&ctx(100, 40), &st(0.3, 0.3)), 1.0);
        let b = hoeffding_error_bound(&ctx(100, 100), &st(0.7, 0.3));
        assert!((b - 0.018_315_638_888_734_18).abs() < 1e-15);
        let b = hoeffding_error_bound(&ctx(10, 4), &st(0.7, 0.3));
        assert!((b - 0.852_143_788_966_211_3).abs() < 1e-15);
        assert!(b >= error_prob(&ctx(10, 4), &st(0.7, 0.3)).unwrap());
    }

    #[test]
    fn matches_outcome_enumeration() {
        let grid = [0.0, 0.2, 0.5, 0.75, 1.0];
        for m in (0..=10).step_by(2) {
            for &a in &grid {
                for &b in &grid {
                    let s = st(a, b);
                    let e = error_prob(&ctx(10, m), &s).unwrap();
                    assert!((e - brute_error(m, &s)).abs() < 1e-12, "m={m} {s:?}");
                }
            }
        }
    }

    #[test]
    fn stepper_walks_consecutive_sizes() {
        let s = st(0.62, 0.41);
        let mut ev = ErrorProbStepper::new(&s, 20);
        for n in 0..20u64 {
            let direct = error_prob(&ctx(40, 2 * n), &s).unwrap();
            assert_eq!(ev.error_prob(), direct);
            assert_eq!(ev.m(), 2 * n);
            ev.advance();
        }
    }

    proptest! {
        #[test]
        fn swap_symmetry_is_exact(a in 0.0f64..=1.0, b in 0.0f64..=1.0, n in 0u64..40) {
            let c = ctx(80, 2 * n);
            prop_assert_eq!(
                error_prob(&c, &st(a, b)).unwrap().to_bits(),
                error_prob(&c, &st(b, a)).unwrap().to_bits()
            );
        }

        #[test]
        fn equal_means_give_one_half(a in 0.0f64..=1.0, n in 0u64..40) {
            prop_assert_eq!(error_prob(&ctx(80, 2 * n), &st(a, a)).unwrap(), 0.5);
        }

        #[test]
        fn error_is_nonincreasing_via_identity(a in 0.0f64..=1.0, b in 0.0f64..=1.0, n in 1u64..60) {
            let (l, r) = exact_identity_gap(&ctx(200, 2 * n), &st(a, b)).unwrap();
            prop_assert!(r >= 0.0);
            prop_assert!((l - r).abs() < 1e-12);
            prop_assert!(l > -1e-12);
        }

        #[test]
        fn hoeffding_dominates(a in 0.0f64..=1.0, b in 0.0f64..=1.0, n in 1u64..150) {
            let c = ctx(400, 2 * n);
            let s = st(a, b);
            prop_assert!(error_prob(&c, &s).unwrap() <= hoeffding_error_bound(&c, &s) + 1e-15);
        }
    }
}
