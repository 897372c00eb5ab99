//! Simulation of matched-pairs experiments and rollouts.
//!
//! Replications run in fixed-size batches. Batch `b` draws from a ChaCha8
//! stream seeded by `(seed, b)`, and batch summaries are merged in batch
//! order, so estimates are bitwise reproducible for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bernoulli::{BernoulliState, DesignContext};
use crate::error::{domain, Result};
use crate::exec::{map_range, Parallelism};
use crate::gaussian::GaussianState;

const BATCH: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SimModel {
    Bernoulli(BernoulliState),
    /// Treated mean `tau`, control mean 0.
    Gaussian(GaussianState),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SimConfig {
    pub replications: u64,
    pub seed: u64,
    pub model: SimModel,
    pub ctx: DesignContext,
    #[serde(default)]
    pub parallelism: Parallelism,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SimEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replications: u64,
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        let w = o.n as f64 / n as f64;
        Moments {
            n,
            mean: self.mean + d * w,
            m2: self.m2 + o.m2 + d * d * self.n as f64 * w,
        }
    }

    fn estimate(self) -> SimEstimate {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        SimEstimate {
            mean: self.mean,
            std_error: (var.max(0.0) / self.n as f64).sqrt(),
            replications: self.n,
        }
    }
}

fn run<F>(cfg: &SimConfig, draw: F) -> Result<SimEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync + Send,
{
    if cfg.replications == 0 {
        return Err(domain("replications must be positive"));
    }
    let batches = cfg.replications.div_ceil(BATCH);
    let parts = map_range(cfg.parallelism, batches as usize, |b| {
        let b = b as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(b);
        let len = BATCH.min(cfg.replications - b * BATCH);
        let mut acc = Moments::default();
        for _ in 0..len {
            acc.push(draw(&mut rng));
        }
        acc
    });
    Ok(parts
        .into_iter()
        .fold(Moments::default(), Moments::merge)
        .estimate())
}

fn binomial(n: u64, p: f64) -> Binomial {
    Binomial::new(n, p).expect("validated probability")
}

/// Which arm the empirical success rule rolls out: `true` for the treated
/// arm. Ties, including the empty experiment, are broken by a fair coin.
fn choose_treated(diff: f64, rng: &mut ChaCha8Rng) -> bool {
    if diff > 0.0 {
        true
    } else if diff < 0.0 {
        false
    } else {
        rng.random_bool(0.5)
    }
}

/// Tie-adjusted error indicator for a treated-minus-control difference.
/// With equal means the treated arm counts as the better one.
fn error_indicator(diff: f64, treated_better: bool) -> f64 {
    let wrong = if treated_better {
        diff < 0.0
    } else {
        diff > 0.0
    };
    if diff == 0.0 {
        0.5
    } else if wrong {
        1.0
    } else {
        0.0
    }
}

fn validate(cfg: &SimConfig, allow_empty: bool) -> Result<()> {
    DesignContext::new(cfg.ctx.population, cfg.ctx.m)?;
    if cfg.ctx.m == 0 && !allow_empty {
        return Err(domain("simulation of the error probability needs m >= 2"));
    }
    match cfg.model {
        SimModel::Bernoulli(s) => {
            BernoulliState::new(s.mu1, s.mu0)?;
        }
        SimModel::Gaussian(g) => {
            GaussianState::new(g.tau, g.sigma)?;
        }
    }
    Ok(())
}

/// Experiment outcome totals (treated, control).
fn experiment(model: &SimModel, n: u64, rng: &mut ChaCha8Rng) -> (f64, f64) {
    match *model {
        SimModel::Bernoulli(s) => (
            binomial(n, s.mu1).sample(rng) as f64,
            binomial(n, s.mu0).sample(rng) as f64,
        ),
        SimModel::Gaussian(g) => {
            let treated = Normal::new(g.tau, g.sigma).expect("validated");
            let control = Normal::new(0.0, g.sigma).expect("validated");
            let a: f64 = (0..n).map(|_| treated.sample(rng)).sum();
            let b: f64 = (0..n).map(|_| control.sample(rng)).sum();
            (a, b)
        }
    }
}

/// Monte Carlo estimate of the tie-adjusted error probability.
pub fn simulate_error_prob(cfg: &SimConfig) -> Result<SimEstimate> {
    validate(cfg, false)?;
    let n = cfg.ctx.m / 2;
    let treated_better = match cfg.model {
        SimModel::Bernoulli(s) => s.mu1 >= s.mu0,
        SimModel::Gaussian(g) => g.tau >= 0.0,
    };
    run(cfg, |rng| {
        let (a, b) = experiment(&cfg.model, n, rng);
        error_indicator(a - b, treated_better)
    })
}

/// Monte Carlo estimate of the regret: oracle welfare minus realised welfare
/// over the experiment and a rollout drawn fresh for the `N - m` remaining
/// units.
pub fn simulate_regret(cfg: &SimConfig) -> Result<SimEstimate> {
    validate(cfg, true)?;
    let n = cfg.ctx.m / 2;
    let rest = cfg.ctx.rollout();
    let pop = cfg.ctx.population as f64;
    match cfg.model {
        SimModel::Bernoulli(s) => {
            let oracle = pop * s.best_mean();
            let (roll1, roll0) = (binomial(rest, s.mu1), binomial(rest, s.mu0));
            run(cfg, |rng| {
                let (a, b) = experiment(&cfg.model, n, rng);
                let rolled = if choose_treated(a - b, rng) {
                    roll1.sample(rng)
                } else {
                    roll0.sample(rng)
                };
                oracle - (a + b + rolled as f64)
            })
        }
        SimModel::Gaussian(g) => {
            let oracle = pop * g.tau.max(0.0);
            let sd = g.sigma * (rest as f64).sqrt();
            run(cfg, |rng| {
                let (a, b) = experiment(&cfg.model, n, rng);
                let mean = if choose_treated(a - b, rng) {
                    g.tau * rest as f64
                } else {
                    0.0
                };
                let rolled = if rest == 0 {
                    0.0
                } else {
                    Normal::new(mean, sd).expect("sd > 0").sample(rng)
                };
                oracle - (a + b + rolled)
            })
        }
    }
}
