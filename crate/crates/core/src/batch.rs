//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) these run on the rayon pool;
//! without it they fall back to plain iterators. [`Execution`] lets callers
//! pick the sequential path explicitly, which the benches use to compare.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;
use crate::market::{Allocation, Instance};
use crate::multipliers::{support_pipeline, Support};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether `Parallel` actually runs on a thread pool in this build.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// Order-preserving map over a slice.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_with(Execution::Parallel, items, f)
}

pub fn map_with<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

/// Order-preserving map over `0..len`.
pub fn map_range<R, F>(exec: Execution, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..len).into_par_iter().map(f).collect(),
        _ => (0..len).map(f).collect(),
    }
}

/// Runs [`support_pipeline`] on every case.
pub fn support_batch(exec: Execution, cases: &[(Instance, Allocation)]) -> Vec<Result<Support>> {
    map_with(exec, cases, |(inst, alloc)| support_pipeline(inst, alloc))
}
