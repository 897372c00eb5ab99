//! Integer-indexed grids over the state square.
//!
//! Grid points are `i * step`; when `1 / step` is an integer `K` the value is
//! computed as `i / K` so that coarse and fine grids share exact values. The
//! regret and marginal ratio are invariant under swapping the arms and under
//! complementing both means, so closed grids are reduced to one
//! representative per orbit.

use serde::{Deserialize, Serialize};

use crate::bernoulli::BernoulliState;
use crate::error::{Error, Result};

const SNAP: f64 = 1e-9;

/// Closed rectangle `[mu1.0, mu1.1] x [mu0.0, mu0.1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub mu1: (f64, f64),
    pub mu0: (f64, f64),
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            mu1: (0.0, 1.0),
            mu0: (0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GridSpec {
    pub step: f64,
    pub include_diagonal: bool,
    /// Minimum |mu1 - mu0| of enumerated states.
    pub min_gap: f64,
    /// Maximum |mu1 - mu0|; `Some(0.0)` restricts to the diagonal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_gap: Option<f64>,
    #[serde(default)]
    pub bounds: Bounds,
}

impl GridSpec {
    pub fn new(step: f64, include_diagonal: bool, min_gap: f64, bounds: Bounds) -> Result<Self> {
        let g = Self {
            step,
            include_diagonal,
            min_gap,
            max_gap: None,
            bounds,
        };
        g.validate()?;
        Ok(g)
    }

    /// Whole square including the diagonal and the boundary.
    pub fn full(step: f64) -> Result<Self> {
        Self::new(step, true, 0.0, Bounds::default())
    }

    /// States on the `eps` lattice with `|mu1 - mu0| >= eps`.
    pub fn separated(eps: f64) -> Result<Self> {
        Self::new(eps, false, eps, Bounds::default())
    }

    pub fn diagonal(step: f64) -> Result<Self> {
        let mut g = Self::full(step)?;
        g.max_gap = Some(0.0);
        Ok(g)
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Result<Self> {
        self.bounds = bounds;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step <= 0.5) {
            return Err(Error::Config(format!(
                "grid step must lie in (0, 0.5], got {}",
                self.step
            )));
        }
        if !(self.min_gap >= 0.0 && self.min_gap <= 1.0) {
            return Err(Error::Config(format!(
                "minimum gap must lie in [0, 1], got {}",
                self.min_gap
            )));
        }
        for (lo, hi) in [self.bounds.mu1, self.bounds.mu0] {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(Error::Config(format!("bad grid bounds [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub(crate) fn lattice(&self) -> Lattice {
        let inv = 1.0 / self.step;
        let denom = ((inv - inv.round()).abs() < SNAP * inv.max(1.0)).then(|| inv.round() as u32);
        let top = (inv + SNAP).floor() as u32;
        let axis = |(lo, hi): (f64, f64)| {
            let a = (lo * inv - SNAP).ceil().max(0.0) as u32;
            let b = ((hi * inv + SNAP).floor() as u32).min(top);
            (a, b)
        };
        Lattice {
            step: self.step,
            denom,
            mu1: axis(self.bounds.mu1),
            mu0: axis(self.bounds.mu0),
            min_gap: (self.min_gap * inv - SNAP).ceil().max(0.0) as u32,
            max_gap: self.max_gap.map(|g| (g * inv + SNAP).floor() as u32),
            include_diagonal: self.include_diagonal,
        }
    }

    /// Every grid state, in lexicographic order.
    pub fn states(&self) -> Vec<BernoulliState> {
        let l = self.lattice();
        l.points(Symmetry::None)
            .into_iter()
            .map(|p| l.state(p))
            .collect()
    }
}

/// Which symmetries a criterion is invariant under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Symmetry {
    None,
    /// mu1 <-> mu0
    Swap,
    /// swap and mu -> 1 - mu
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct GridPoint {
    pub i1: u32,
    pub i0: u32,
}

impl GridPoint {
    pub fn gap(&self) -> u32 {
        self.i1.abs_diff(self.i0)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Lattice {
    step: f64,
    denom: Option<u32>,
    mu1: (u32, u32),
    mu0: (u32, u32),
    min_gap: u32,
    max_gap: Option<u32>,
    include_diagonal: bool,
}

impl Lattice {
    pub fn value(&self, i: u32) -> f64 {
        match self.denom {
            Some(k) => f64::from(i) / f64::from(k),
            None => f64::from(i) * self.step,
        }
    }

    pub fn state(&self, p: GridPoint) -> BernoulliState {
        BernoulliState {
            mu1: self.value(p.i1),
            mu0: self.value(p.i0),
        }
    }

    /// |mu1 - mu0| computed from the index gap.
    pub fn gap_value(&self, p: GridPoint) -> f64 {
        self.value(p.gap())
    }

    fn admits(&self, p: GridPoint) -> bool {
        let g = p.gap();
        (g > 0 || self.include_diagonal)
            && g >= self.min_gap
            && self.max_gap.is_none_or(|m| g <= m)
            && (self.mu1.0..=self.mu1.1).contains(&p.i1)
            && (self.mu0.0..=self.mu0.1).contains(&p.i0)
    }

    /// Strongest symmetry under which the point set is closed.
    pub fn closure(&self, wanted: Symmetry) -> Symmetry {
        if wanted == Symmetry::None || self.mu1 != self.mu0 {
            return Symmetry::None;
        }
        match (wanted, self.denom) {
            (Symmetry::Full, Some(k)) if self.mu1.0 + self.mu1.1 == k => Symmetry::Full,
            _ => Symmetry::Swap,
        }
    }

    /// Points representing each orbit once under `sym` (which must be a
    /// closure of the lattice), in lexicographic order.
    pub fn points(&self, sym: Symmetry) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for i1 in self.mu1.0..=self.mu1.1 {
            for i0 in self.mu0.0..=self.mu0.1 {
                let p = GridPoint { i1, i0 };
                if !self.admits(p) {
                    continue;
                }
                let keep = match sym {
                    Symmetry::None => true,
                    Symmetry::Swap => i1 >= i0,
                    Symmetry::Full => i1 >= i0 && i1 + i0 <= self.denom.unwrap_or(0),
                };
                if keep {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Lexicographically smallest image of `p` under `sym`. Images under the
    /// complement use the lattice denominator and need not lie inside the
    /// bounds.
    pub fn orbit_min(&self, p: GridPoint, sym: Symmetry) -> GridPoint {
        let swap = GridPoint { i1: p.i0, i0: p.i1 };
        match (sym, self.denom) {
            (Symmetry::None, _) => p,
            (Symmetry::Swap, _) | (Symmetry::Full, None) => p.min(swap),
            (Symmetry::Full, Some(k)) => {
                let c = GridPoint {
                    i1: k - p.i1,
                    i0: k - p.i0,
                };
                let cs = GridPoint { i1: c.i0, i0: c.i1 };
                p.min(swap).min(c).min(cs)
            }
        }
    }
}
