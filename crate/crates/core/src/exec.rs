//! Data-parallel map helpers.
//!
//! With the `parallel` feature (the default) the maps run on the current
//! rayon pool; without it, or when [`Parallelism::Sequential`] is requested,
//! they run on the calling thread. Output order always follows input order,
//! so reductions performed over the returned vectors are independent of
//! scheduling.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

impl Parallelism {
    /// `Some(1)` means sequential; anything else uses the pool.
    pub fn from_workers(workers: Option<usize>) -> Self {
        match workers {
            Some(1) => Parallelism::Sequential,
            _ => Parallelism::Parallel,
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }
}

/// Maps `f` over `items`, handing each call a per-worker scratch value
/// created by `init`.
pub fn map_with_scratch<T, R, S, I, F>(par: Parallelism, items: &[T], init: I, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, &T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if par.is_parallel() {
        use rayon::prelude::*;
        return items
            .par_iter()
            .with_min_len(16)
            .map_init(&init, |s, t| f(s, t))
            .collect();
    }
    let _ = par;
    let mut scratch = init();
    items.iter().map(|t| f(&mut scratch, t)).collect()
}

/// Maps `f` over `0..len`.
pub fn map_range<R, F>(par: Parallelism, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if par.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = par;
    (0..len).map(f).collect()
}
