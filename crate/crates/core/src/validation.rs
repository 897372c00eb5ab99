//! Property suites with measured worst deviations, for command-line
//! validation runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bernoulli::{
    error_prob, exact_identity_gap, hoeffding_error_bound, BernoulliState, DesignContext,
};
use crate::criteria::{evaluate, wmb_ratio_na, wmb_ratio_na_sup};
use crate::dist::{walk_pmf, walk_pmf_tilted, TiltedWalk, TrinomialWalk};
use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::gaussian::{
    gaussian_error_prob, gaussian_marginal_ratio, numeric_sup, GaussianState, LimitCurve,
};
use crate::montecarlo::{simulate_error_prob, simulate_regret, SimConfig, SimModel};
use crate::search::{
    na_agreement, wmb_sample_size, GridSpec, LocalRegion, LocalizationRow, SearchOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    ExactIdentity,
    TiltIdentity,
    Hoeffding,
    Localization,
    Montecarlo,
    NaAgreement,
    GaussianClosedForm,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::ExactIdentity,
        Suite::TiltIdentity,
        Suite::Hoeffding,
        Suite::Localization,
        Suite::Montecarlo,
        Suite::NaAgreement,
        Suite::GaussianClosedForm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::ExactIdentity => "exact-identity",
            Suite::TiltIdentity => "tilt-identity",
            Suite::Hoeffding => "hoeffding",
            Suite::Localization => "localization",
            Suite::Montecarlo => "montecarlo",
            Suite::NaAgreement => "na-agreement",
            Suite::GaussianClosedForm => "gaussian-closed-form",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ValidateConfig {
    pub seed: u64,
    pub parallelism: Parallelism,
    /// Population and grid step of the localization scan.
    pub localization_population: u64,
    pub localization_step: f64,
    /// Replications per Monte Carlo configuration.
    pub replications: u64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            parallelism: Parallelism::default(),
            localization_population: 5000,
            localization_step: 0.01,
            replications: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub cases: usize,
    /// What `worst` measures.
    pub metric: String,
    pub worst: f64,
    pub threshold: f64,
    pub detail: String,
}

pub fn run_suite(suite: Suite, cfg: &ValidateConfig) -> Result<SuiteReport> {
    match suite {
        Suite::ExactIdentity => exact_identity(cfg),
        Suite::TiltIdentity => tilt_identity(cfg),
        Suite::Hoeffding => hoeffding(cfg),
        Suite::Localization => localization(cfg),
        Suite::Montecarlo => montecarlo(cfg),
        Suite::NaAgreement => na(cfg),
        Suite::GaussianClosedForm => gaussian_closed_form(),
    }
}

fn rng(cfg: &ValidateConfig, salt: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(cfg.seed);
    r.set_stream(salt);
    r
}

/// Uniform state with occasional boundary and diagonal coordinates.
fn random_state(r: &mut ChaCha8Rng) -> BernoulliState {
    let pick = |r: &mut ChaCha8Rng| match r.random_range(0..20) {
        0 => 0.0,
        1 => 1.0,
        _ => r.random::<f64>(),
    };
    let a = pick(r);
    let b = if r.random_range(0..20) == 0 {
        a
    } else {
        pick(r)
    };
    BernoulliState { mu1: a, mu0: b }
}

/// `e(m) - e(m + 2)` against `|delta| P(S_n = 0)` for random `m <= 2000`.
pub fn exact_identity(cfg: &ValidateConfig) -> Result<SuiteReport> {
    let mut r = rng(cfg, 1);
    let cases = 1000;
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let m = 2 * r.random_range(1..=1000u64);
        let s = random_state(&mut r);
        let (lhs, rhs) = exact_identity_gap(&DesignContext::new(m + 2, m)?, &s)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(report(
        Suite::ExactIdentity,
        cases,
        "max |lhs - rhs|",
        worst,
        1e-12,
        String::new(),
    ))
}

/// Tilted representation against the direct walk DP for random interior walks.
pub fn tilt_identity(cfg: &ValidateConfig) -> Result<SuiteReport> {
    let mut r = rng(cfg, 2);
    let cases = 200;
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let (a, c) = loop {
            let a = r.random::<f64>();
            let c = r.random::<f64>() * (1.0 - a);
            if a > 1e-6 && c > 1e-6 {
                break (a, c);
            }
        };
        let n = r.random_range(0..=500usize);
        let w = TrinomialWalk::new(a, 1.0 - a - c, c, n)?;
        let direct = walk_pmf(&w);
        let tilted = walk_pmf_tilted(&w, &TiltedWalk::new(&w)?)?;
        for (k, p) in direct.support() {
            worst = worst.max((p - tilted.prob(k)).abs());
        }
    }
    Ok(report(
        Suite::TiltIdentity,
        cases,
        "max entrywise |difference|",
        worst,
        1e-12,
        String::new(),
    ))
}

/// Error probability against `exp(-m tau^2 / 4)`.
pub fn hoeffding(cfg: &ValidateConfig) -> Result<SuiteReport> {
    let mut r = rng(cfg, 3);
    let cases = 1000;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cases {
        let m = 2 * r.random_range(1..=500u64);
        let s = random_state(&mut r);
        let ctx = DesignContext::new(m, m)?;
        worst = worst.max(error_prob(&ctx, &s)? - hoeffding_error_bound(&ctx, &s));
    }
    Ok(report(
        Suite::Hoeffding,
        cases,
        "max (error - bound)",
        worst,
        1e-15,
        String::new(),
    ))
}

/// Checks every scanned size of a WMB run whose maximal ratio is at least 1.
pub fn localization(cfg: &ValidateConfig) -> Result<SuiteReport> {
    let n = cfg.localization_population;
    let grid = GridSpec::separated(cfg.localization_step)?;
    let opts = SearchOptions {
        parallelism: cfg.parallelism,
        ..Default::default()
    };
    let rec = wmb_sample_size(n, &grid, &opts)?;
    let rows: Vec<LocalizationRow> = rec
        .trace
        .iter()
        .map(|e| LocalizationRow::from_entry(n, e))
        .collect();
    let required: Vec<_> = rows.iter().filter(|r| r.required && r.m > 0).collect();
    let worst = required.iter().map(|r| r.gap / r.bound).fold(0.0, f64::max);
    let failures = required.iter().filter(|r| !r.within).count();
    let mut rep = report(
        Suite::Localization,
        required.len(),
        "max gap / (2 sqrt(ln N / m)) over sizes with ratio >= 1",
        worst,
        1.0,
        format!(
            "N={n}, step={}, {failures} violations",
            cfg.localization_step
        ),
    );
    rep.passed = failures == 0;
    Ok(rep)
}

/// Twenty random configurations; exact values must fall within four
/// standard errors in at least nineteen.
pub fn montecarlo(cfg: &ValidateConfig) -> Result<SuiteReport> {
    let mut r = rng(cfg, 5);
    let cases = 20;
    let mut inside = 0;
    let mut worst: f64 = 0.0;
    for i in 0..cases {
        let half = r.random_range(5..=250u64);
        let n = 2 * half;
        let m = 2 * r.random_range(1..=half);
        let ctx = DesignContext::new(n, m)?;
        let seed = cfg.seed.wrapping_add(1000 + i as u64);
        let (est, exact) = match i % 3 {
            0 => {
                let s = BernoulliState::new(r.random(), r.random())?;
                let c = SimConfig {
                    replications: cfg.replications,
                    seed,
                    model: SimModel::Bernoulli(s),
                    ctx,
                    parallelism: cfg.parallelism,
                };
                (simulate_error_prob(&c)?, error_prob(&ctx, &s)?)
            }
            1 => {
                let s = BernoulliState::new(r.random(), r.random())?;
                let c = SimConfig {
                    replications: cfg.replications,
                    seed,
                    model: SimModel::Bernoulli(s),
                    ctx,
                    parallelism: cfg.parallelism,
                };
                (simulate_regret(&c)?, evaluate(&ctx, &s)?.regret)
            }
            _ => {
                let g = GaussianState::new(r.random_range(-0.5..0.5), r.random_range(0.5..2.0))?;
                let c = SimConfig {
                    replications: cfg.replications,
                    seed,
                    model: SimModel::Gaussian(g),
                    ctx,
                    parallelism: cfg.parallelism,
                };
                (simulate_error_prob(&c)?, gaussian_error_prob(m as f64, &g)?)
            }
        };
        let z = if est.std_error > 0.0 {
            (est.mean - exact).abs() / est.std_error
        } else if (est.mean - exact).abs() * est.replications as f64 <= 1.0 {
            // a constant sample cannot resolve a difference below one
            // replication's worth
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(z);
        if z <= 4.0 {
            inside += 1;
        }
    }
    let mut rep = report(
        Suite::Montecarlo,
        cases,
        "max |simulated - exact| / standard error",
        worst,
        4.0,
        format!("{inside}/{cases} within 4 standard errors"),
    );
    rep.passed = inside >= 19;
    Ok(rep)
}

/// Exact against normal-approximation ratio on the local region at
/// `m = N / 2` for `N = 2000` and `N = 20000`.
pub fn na(cfg: &ValidateConfig) -> Result<SuiteReport> {
    let mut diffs = Vec::new();
    for n in [2000u64, 20_000] {
        let region = LocalRegion::new(0.1, 1.0, n)?;
        diffs.push(na_agreement(&region, n / 2, 20, cfg.parallelism)?.max_abs_diff);
    }
    let mut rep = report(
        Suite::NaAgreement,
        800,
        "max |exact - normal approximation| at N = 20000",
        diffs[1],
        0.05,
        format!("N=2000: {:.6}, N=20000: {:.6}", diffs[0], diffs[1]),
    );
    rep.passed = rep.passed && diffs[1] < diffs[0];
    Ok(rep)
}

/// Closed-form maximiser of `f_k` against numerical maximisation, and the
/// rule of thirds for the Gaussian and normal-approximation ratios.
pub fn gaussian_closed_form() -> Result<SuiteReport> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for k in [2.5, 3.0, 4.0, 5.0, 10.0] {
        let c = LimitCurve::new(k)?;
        let (v, t) = c.sup();
        let (nv, nt) = numeric_sup(&c, 20.0);
        worst = worst.max((t - nt).abs()).max((v - nv).abs());
        cases += 1;
    }
    let mut thirds_ok = true;
    for n in [6u64, 12, 300, 1000] {
        for m in (2..n).step_by(2) {
            let g = gaussian_thirds_sup(n, m)?;
            let na = wmb_ratio_na_sup(&DesignContext::new(n, m)?)?.0;
            let want = 3 * m >= n;
            thirds_ok &= (g <= 1.0) == want && (na <= 1.0) == want;
            cases += 1;
        }
    }
    let mut rep = report(
        Suite::GaussianClosedForm,
        cases,
        "max |closed form - numerical| over argmax and sup",
        worst,
        1e-8,
        format!(
            "rule of thirds {}",
            if thirds_ok { "holds" } else { "violated" }
        ),
    );
    rep.passed &= thirds_ok;
    Ok(rep)
}

/// Supremum of the relaxed Gaussian ratio over `t = sqrt(m) |tau| / 2` on
/// `[0, 10]` with step `1e-3`.
pub fn gaussian_thirds_sup(population: u64, m: u64) -> Result<f64> {
    let mut sup = f64::NEG_INFINITY;
    for i in 0..=10_000 {
        let t = i as f64 * 1e-3;
        let s = GaussianState::new(2.0 * t / (m as f64).sqrt(), 1.0)?;
        sup = sup.max(gaussian_marginal_ratio(population as f64, m as f64, &s)?);
    }
    Ok(sup)
}

/// Largest normal-approximation ratio over an interior `steps x steps` grid.
pub fn na_grid_sup(ctx: &DesignContext, steps: u32) -> Result<f64> {
    let mut sup = f64::NEG_INFINITY;
    for i in 1..steps {
        for j in 1..steps {
            let s = BernoulliState::new(
                f64::from(i) / f64::from(steps),
                f64::from(j) / f64::from(steps),
            )?;
            sup = sup.max(wmb_ratio_na(ctx, &s)?);
        }
    }
    Ok(sup)
}

fn report(
    suite: Suite,
    cases: usize,
    metric: &str,
    worst: f64,
    threshold: f64,
    detail: String,
) -> SuiteReport {
    SuiteReport {
        suite,
        passed: worst <= threshold,
        cases,
        metric: metric.into(),
        worst,
        threshold,
        detail,
    }
}
