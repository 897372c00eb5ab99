//! Welfare, regret and the design criteria built on them.

use serde::{Deserialize, Serialize};

use crate::bernoulli::{error_prob, BernoulliState, DesignContext, ErrorProbStepper};
use crate::error::{domain, ensure_probability, Error, Result};
use crate::gaussian::LimitCurve;

/// Regret decomposition at one `(m, state)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalBreakdown {
    pub m: u64,
    /// (m/2) |tau|
    pub exploration_cost: f64,
    /// (N - m) |tau| e(m)
    pub exploitation_risk: f64,
    pub regret: f64,
    pub error_prob: f64,
    /// N max(mu1, mu0)
    pub oracle_welfare: f64,
    /// `regret / oracle_welfare`; `None` when the oracle welfare is zero.
    pub relative_regret: Option<f64>,
}

impl EvalBreakdown {
    pub(crate) fn from_error_prob(ctx: &DesignContext, s: &BernoulliState, e: f64) -> Self {
        let gap = s.tau().abs();
        let exploration_cost = 0.5 * ctx.m as f64 * gap;
        let exploitation_risk = ctx.rollout() as f64 * gap * e;
        let regret = exploration_cost + exploitation_risk;
        let oracle_welfare = ctx.population as f64 * s.best_mean();
        Self {
            m: ctx.m,
            exploration_cost,
            exploitation_risk,
            regret,
            error_prob: e,
            oracle_welfare,
            relative_regret: (oracle_welfare > 0.0).then(|| regret / oracle_welfare),
        }
    }

    /// Expected welfare of the design, `oracle_welfare - regret`.
    pub fn welfare(&self) -> f64 {
        self.oracle_welfare - self.regret
    }
}

pub fn evaluate(ctx: &DesignContext, s: &BernoulliState) -> Result<EvalBreakdown> {
    let e = error_prob(ctx, s)?;
    Ok(EvalBreakdown::from_error_prob(ctx, s, e))
}

/// Regret over oracle welfare. Undefined when both means are zero.
pub fn relative_regret(ctx: &DesignContext, s: &BernoulliState) -> Result<f64> {
    if s.best_mean() <= 0.0 {
        return Err(Error::UndefinedCriterion(
            "relative regret needs max(mu1, mu0) > 0".into(),
        ));
    }
    let b = evaluate(ctx, s)?;
    Ok(b.regret / b.oracle_welfare)
}

/// Relative regret for every even `m` in `0..=N`, from one DP pass.
pub fn relative_regret_curve(population: u64, s: &BernoulliState) -> Result<Vec<(u64, f64)>> {
    DesignContext::new(population, 0)?;
    if s.best_mean() <= 0.0 {
        return Err(Error::UndefinedCriterion(
            "relative regret needs max(mu1, mu0) > 0".into(),
        ));
    }
    let pairs = (population / 2) as usize;
    let mut ev = ErrorProbStepper::new(s, pairs);
    let mut out = Vec::with_capacity(pairs + 1);
    loop {
        let ctx = DesignContext::new(population, ev.m())?;
        let b = EvalBreakdown::from_error_prob(&ctx, s, ev.error_prob());
        out.push((ctx.m, b.regret / b.oracle_welfare));
        if ev.pairs() == pairs {
            break;
        }
        ev.advance();
    }
    Ok(out)
}

/// Marginal cost-benefit ratio of adding one matched pair at size `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalRatio {
    pub m: u64,
    pub value: f64,
}

/// `(N - m) e(m) - (N - m - 2) e(m + 2)`, exactly 1 on the diagonal.
pub fn wmb_ratio(ctx: &DesignContext, s: &BernoulliState) -> Result<MarginalRatio> {
    if ctx.m + 2 > ctx.population {
        return Err(domain(format!(
            "marginal ratio needs m <= N - 2, got m={} N={}",
            ctx.m, ctx.population
        )));
    }
    if s.is_diagonal() {
        return Ok(MarginalRatio {
            m: ctx.m,
            value: 1.0,
        });
    }
    let mut ev = ErrorProbStepper::new(s, ctx.pairs() + 1);
    ev.advance_to_pairs(ctx.pairs());
    let here = ev.error_prob();
    ev.advance();
    let next = ev.error_prob();
    Ok(MarginalRatio {
        m: ctx.m,
        value: marginal_ratio(ctx.population, ctx.m, here, next),
    })
}

pub(crate) fn marginal_ratio(population: u64, m: u64, e_here: f64, e_next: f64) -> f64 {
    let rest = (population - m) as f64;
    rest * e_here - (rest - 2.0) * e_next
}

/// Normal-approximation ratio `f_k(t)` with `t = sqrt(m) |tau| / sqrt(2 v)`
/// and `v = mu1 (1 - mu1) + mu0 (1 - mu0)`.
pub fn wmb_ratio_na(ctx: &DesignContext, s: &BernoulliState) -> Result<f64> {
    if ctx.m < 2 {
        return Err(domain("normal-approximation ratio needs m >= 2"));
    }
    let v = s.mu1 * (1.0 - s.mu1) + s.mu0 * (1.0 - s.mu0);
    if v <= 0.0 {
        return Err(domain(
            "normal-approximation ratio needs a nonzero variance",
        ));
    }
    let m = ctx.m as f64;
    let t = m.sqrt() * s.tau().abs() / (2.0 * v).sqrt();
    Ok(LimitCurve::for_design(ctx.population as f64, m)?.eval(t))
}

/// The symmetric state `((1 + d) / 2, (1 - d) / 2)` with `d = t / sqrt(m + t^2)`,
/// whose normal-approximation statistic at size `m` equals `t`.
pub fn na_extremal_state(m: u64, t: f64) -> Result<BernoulliState> {
    if m == 0 || !(t.is_finite() && t >= 0.0) {
        return Err(domain(format!("need m > 0 and t >= 0, got m={m}, t={t}")));
    }
    let d = t / (m as f64 + t * t).sqrt();
    BernoulliState::new(0.5 * (1.0 + d), 0.5 * (1.0 - d))
}

/// Largest normal-approximation ratio at size `m`, attained by
/// [`na_extremal_state`] at the maximiser of `f_k`.
pub fn wmb_ratio_na_sup(ctx: &DesignContext) -> Result<(f64, BernoulliState)> {
    let curve = LimitCurve::for_design(ctx.population as f64, ctx.m as f64)?;
    let (_, t) = curve.sup();
    let s = na_extremal_state(ctx.m, t)?;
    let value = if t == 0.0 {
        1.0
    } else {
        wmb_ratio_na(ctx, &s)?
    };
    Ok((value, s))
}

/// Relaxed ratio along the boundary states `(c / N, 0)`:
/// `(1 - tau)^{m/2} (1 - (N - m)/2 ln(1 - tau))`, `tau = c / N`.
pub fn boundary_pathology_ratio(population: f64, m: f64, c: f64) -> Result<f64> {
    if !(population > 0.0 && m > 0.0 && m < population) {
        return Err(domain(format!("need 0 < m < N, got m={m}, N={population}")));
    }
    let tau = c / population;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(domain(format!("need 0 < c < N, got c={c}")));
    }
    let log_keep = (-tau).ln_1p();
    Ok((0.5 * m * log_keep).exp() * (1.0 - 0.5 * (population - m) * log_keep))
}

/// Per-unit rollout regret `|tau| e`.
pub fn superpop_regret(s: &BernoulliState, error_prob: f64) -> Result<f64> {
    ensure_probability("error probability", error_prob)?;
    Ok(s.tau().abs() * error_prob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernoulli::hoeffding_error_bound;
    use crate::gaussian::LimitCurve;
    use proptest::prelude::*;

    fn ctx(n: u64, m: u64) -> DesignContext {
        DesignContext::new(n, m).unwrap()
    }

    fn st(a: f64, b: f64) -> BernoulliState {
        BernoulliState::new(a, b).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let b = evaluate(&ctx(500, 0), &st(0.6, 0.4)).unwrap();
        assert_eq!(b.exploration_cost, 0.0);
        assert!((b.exploitation_risk - 50.0).abs() < 1e-12);
        assert!((b.regret - 50.0).abs() < 1e-12);

        let b = evaluate(&ctx(10, 4), &st(0.7, 0.3)).unwrap();
        assert!((b.exploration_cost - 0.8).abs() < 1e-15);
        assert!((b.exploitation_risk - 0.5184).abs() < 1e-14);
        assert!((b.regret - 1.3184).abs() < 1e-14);
        assert!((b.oracle_welfare - 7.0).abs() < 1e-14);
        assert!((b.welfare() - (7.0 - 1.3184)).abs() < 1e-13);

        let b = evaluate(&ctx(100, 20), &st(0.3, 0.3)).unwrap();
        assert_eq!(b.regret, 0.0);
        assert_eq!(b.error_prob, 0.5);
    }

    #[test]
    fn relative_regret_examples() {
        assert_eq!(relative_regret(&ctx(100, 10), &st(0.4, 0.4)).unwrap(), 0.0);
        let r = relative_regret(&ctx(10, 4), &st(0.7, 0.3)).unwrap();
        assert!((r - 0.18834285714285714).abs() < 1e-14);
        assert!(matches!(
            relative_regret(&ctx(10, 4), &st(0.0, 0.0)),
            Err(Error::UndefinedCriterion(_))
        ));
        let r = relative_regret(&ctx(500, 100), &st(1e-4, 0.0)).unwrap();
        assert!((r - 0.5).abs() < 2.5e-3, "{r}");
    }

    #[test]
    fn relative_regret_curve_matches_pointwise() {
        let s = st(0.2, 0.05);
        let curve = relative_regret_curve(40, &s).unwrap();
        assert_eq!(curve.len(), 21);
        for (m, r) in curve {
            let want = relative_regret(&ctx(40, m), &s).unwrap();
            assert!((r - want).abs() < 1e-15);
        }
    }

    #[test]
    fn relative_regret_flattens_toward_half() {
        let dev = |eps: f64| {
            relative_regret_curve(500, &st(eps, 0.0))
                .unwrap()
                .into_iter()
                .map(|(_, r)| (r - 0.5).abs())
                .fold(0.0, f64::max)
        };
        let (a, b, c) = (dev(1e-2), dev(1e-3), dev(1e-4));
        assert!(a > b && b > c, "{a} {b} {c}");
    }

    #[test]
    fn wmb_ratio_examples() {
        assert_eq!(wmb_ratio(&ctx(100, 10), &st(0.3, 0.3)).unwrap().value, 1.0);
        let v = wmb_ratio(&ctx(10, 4), &st(0.7, 0.3)).unwrap().value;
        assert!((v - 0.64368).abs() < 1e-13);
        assert!(wmb_ratio(&ctx(500, 2), &st(0.51, 0.5)).unwrap().value > 1.0);
        assert!(wmb_ratio(&ctx(10, 10), &st(0.7, 0.3)).is_err());
    }

    #[test]
    fn na_examples() {
        assert_eq!(wmb_ratio_na(&ctx(400, 100), &st(0.3, 0.3)).unwrap(), 1.0);
        let s = na_extremal_state(100, (1.0f64 / 3.0).sqrt()).unwrap();
        let v = wmb_ratio_na(&ctx(400, 100), &s).unwrap();
        assert!((v - 1.148611828818996).abs() < 1e-12);
        assert!(wmb_ratio_na(&ctx(400, 100), &st(1.0, 0.0)).is_err());
        for i in 1..100 {
            for j in 1..100 {
                let s = st(i as f64 / 100.0, j as f64 / 100.0);
                assert!(wmb_ratio_na(&ctx(300, 100), &s).unwrap() <= 1.0 + 1e-15);
            }
        }
    }

    #[test]
    fn na_sup_construction_attains_limit_sup() {
        for k in [2.5, 3.0, 5.0] {
            // N = (k + 1) m
            let m = 200u64;
            let n = ((k + 1.0) * m as f64) as u64;
            let (v, _) = wmb_ratio_na_sup(&ctx(n, m)).unwrap();
            let (want, _) = LimitCurve::new(k).unwrap().sup();
            assert!((v - want).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn boundary_pathology_examples() {
        let n = 1e6;
        for (alpha, want) in [
            (0.3, 1.0195908584484227),
            (0.4, 1.0096046339666514),
            (0.45, 1.0046393964303418),
            (0.5, 0.9996926597985625),
            (0.55, 0.9947643626375897),
            (0.6, 0.9898544437051422),
        ] {
            let v = boundary_pathology_ratio(n, alpha * n, 0.1).unwrap();
            assert!((v - want).abs() < 1e-12, "alpha={alpha} v={v}");
        }
        let near = boundary_pathology_ratio(1e6, 5e5, 1e-4).unwrap();
        assert!((near - 1.0).abs() < 1e-6);
        assert!(boundary_pathology_ratio(100.0, 50.0, 100.0).is_err());
        assert!(boundary_pathology_ratio(100.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn superpop_examples() {
        assert_eq!(superpop_regret(&st(0.4, 0.4), 0.5).unwrap(), 0.0);
        let r = superpop_regret(&st(0.7, 0.3), 0.216).unwrap();
        assert!((r - 0.0864).abs() < 1e-15);
        assert!((0.8 + 6.0 * r - 1.3184).abs() < 1e-14);
        assert!(superpop_regret(&st(0.7, 0.3), 1.5).is_err());
    }

    proptest! {
        #[test]
        fn decomposition(a in 0.0f64..=1.0, b in 0.0f64..=1.0, half in 1u64..200, frac in 0.0f64..=1.0) {
            let n = 2 * half;
            let m = 2 * ((frac * half as f64) as u64);
            let c = ctx(n, m);
            let s = st(a, b);
            let e = evaluate(&c, &s).unwrap();
            let sreg = superpop_regret(&s, e.error_prob).unwrap();
            let rebuilt = 0.5 * m as f64 * s.tau().abs() + (n - m) as f64 * sreg;
            prop_assert!((e.regret - rebuilt).abs() < 1e-12);
            prop_assert!((e.regret - e.exploration_cost - e.exploitation_risk).abs() < 1e-12);
            prop_assert!(e.regret >= 0.0 && (0.0..=1.0).contains(&e.error_prob));
        }

        #[test]
        fn wmb_hoeffding_cap(a in 0.0f64..=1.0, b in 0.0f64..=1.0, half in 2u64..300, frac in 0.0f64..1.0) {
            prop_assume!(a != b);
            let n = 2 * half;
            let m = 2 * ((frac * (half - 1) as f64) as u64);
            let c = ctx(n, m);
            let s = st(a, b);
            let eta = wmb_ratio(&c, &s).unwrap().value;
            let cap = (n - m) as f64 * hoeffding_error_bound(&c, &s);
            prop_assert!(eta <= cap + 1e-12, "eta={eta} cap={cap}");
        }

        #[test]
        fn diagonal_ratio_is_one(a in 0.0f64..=1.0, half in 1u64..300) {
            let n = 2 * half + 2;
            prop_assert_eq!(wmb_ratio(&ctx(n, 2 * half), &st(a, a)).unwrap().value, 1.0);
        }
    }
}
