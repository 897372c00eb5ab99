//! Sample-size design for finite-population test-and-roll experiments.
//!
//! The crate computes exact Bernoulli and closed-form Gaussian welfare
//! quantities for a matched-pairs experiment of size `m` followed by a
//! rollout of the empirically better arm to the remaining `N - m` units,
//! searches the state space for least favorable parameters, and recommends
//! experimental sizes under the absolute minimax-regret and worst-case
//! marginal benefit (WMB) criteria.

pub mod bernoulli;
pub mod criteria;
pub mod dist;
pub mod error;
pub mod exec;
pub mod gaussian;
pub mod montecarlo;
pub mod search;
pub mod validation;

pub use error::{Error, Result};
