//! Closed-form quantities for the known-variance Gaussian model.
//!
//! Only the effect `tau` and the common standard deviation enter: with
//! `k = (N - m) / m` and `t = sqrt(m) |tau| / (2 sigma)` the relaxed marginal
//! ratio is `f_k(t) = 2 Phi(-t) + k t phi(t)`.

use serde::{Deserialize, Serialize};

use crate::dist::{phi_cdf, phi_pdf};
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub tau: f64,
    pub sigma: f64,
}

impl GaussianState {
    pub fn new(tau: f64, sigma: f64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(domain(format!("tau must be finite, got {tau}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(domain(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { tau, sigma })
    }

    /// Standardised gap `sqrt(m) |tau| / (2 sigma)` at experimental size `m`.
    pub fn standardized(&self, m: f64) -> f64 {
        m.sqrt() * self.tau.abs() / (2.0 * self.sigma)
    }
}

/// `f_k` for a fixed rollout-to-experiment ratio `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitCurve {
    pub k: f64,
}

impl LimitCurve {
    pub fn new(k: f64) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(domain(format!("k must be nonnegative, got {k}")));
        }
        Ok(Self { k })
    }

    /// Curve for population `n` and experimental size `m`.
    pub fn for_design(population: f64, m: f64) -> Result<Self> {
        if !(m > 0.0 && m <= population) {
            return Err(domain(format!(
                "need 0 < m <= N, got m={m}, N={population}"
            )));
        }
        Self::new((population - m) / m)
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(domain(format!("t must be nonnegative, got {t}")));
        }
        Ok(self.eval(t))
    }

    pub(crate) fn eval(&self, t: f64) -> f64 {
        2.0 * phi_cdf(-t) + self.k * t * phi_pdf(t)
    }

    /// `phi(t) (k (1 - t^2) - 2)`.
    pub fn derivative(&self, t: f64) -> f64 {
        phi_pdf(t) * (self.k * (1.0 - t * t) - 2.0)
    }

    /// (sup value, argmax). Nonincreasing from t = 0 when k <= 2.
    pub fn sup(&self) -> (f64, f64) {
        if self.k <= 2.0 {
            return (1.0, 0.0);
        }
        let t = (1.0 - 2.0 / self.k).sqrt();
        (self.eval(t), t)
    }
}

pub fn limit_curve_value(curve: &LimitCurve, t: f64) -> Result<f64> {
    curve.value(t)
}

pub fn limit_curve_sup(curve: &LimitCurve) -> (f64, f64) {
    curve.sup()
}

/// `Phi(-sqrt(m) |tau| / (2 sigma))`.
pub fn gaussian_error_prob(m: f64, s: &GaussianState) -> Result<f64> {
    if !(m.is_finite() && m > 0.0) {
        return Err(domain(format!("m must be positive, got {m}")));
    }
    GaussianState::new(s.tau, s.sigma)?;
    Ok(phi_cdf(-s.standardized(m)))
}

/// Relaxed marginal ratio `f_{(N-m)/m}(t)`.
pub fn gaussian_marginal_ratio(population: f64, m: f64, s: &GaussianState) -> Result<f64> {
    GaussianState::new(s.tau, s.sigma)?;
    let curve = LimitCurve::for_design(population, m)?;
    Ok(curve.eval(s.standardized(m)))
}

/// Threshold N/3 of the relaxed rule and its even discrete counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GaussianThreshold {
    pub continuous: f64,
    pub m_even: u64,
}

/// Smallest even `m` with `3 m >= N`.
pub fn smallest_even_third(population: u64) -> u64 {
    let m = population.div_ceil(3);
    m + m % 2
}

pub fn gaussian_wmb_threshold(population: u64) -> Result<GaussianThreshold> {
    if population == 0 {
        return Err(domain("population size must be positive"));
    }
    Ok(GaussianThreshold {
        continuous: population as f64 / 3.0,
        m_even: smallest_even_third(population),
    })
}

/// Golden-section maximiser of `f` on `[lo, hi]`, for unimodal `f`.
pub fn golden_section_max(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    let t = 0.5 * (lo + hi);
    (f(t), t)
}

/// Numerical (sup, argmax) of `f_k` over `[0, t_max]`, independent of the
/// closed form: golden-section bracketing, then bisection on the sign of a
/// central-difference slope.
pub fn numeric_sup(curve: &LimitCurve, t_max: f64) -> (f64, f64) {
    let f = |t: f64| curve.eval(t);
    let (_, t0) = golden_section_max(f, 0.0, t_max, 1e-6);
    let h = 1e-5;
    let slope = |t: f64| f(t + h) - f((t - h).max(0.0));
    let (mut lo, mut hi) = ((t0 - 1e-5).max(0.0), t0 + 1e-5);
    if slope(lo) <= 0.0 {
        // peak at the left end of the range
        return if lo == 0.0 {
            (f(0.0), 0.0)
        } else {
            (f(t0), t0)
        };
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    (f(t), t)
}
