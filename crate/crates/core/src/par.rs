//! Index-keyed data parallelism.
//!
//! Every parallel workload in the crate (search restarts, Monte Carlo trials,
//! random case batches) is a map over `0..n` where item `i` derives all of its
//! randomness from `(seed, i)`. The result vector is therefore identical under
//! any schedule, and the sequential path is a drop-in replacement.

use serde::{Deserialize, Serialize};

/// Execution backend for index-keyed maps.
///
/// `Parallel` silently degrades to sequential when the crate is built without
/// the `parallel` feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Map `f` over `0..n`, returning results in index order.
pub fn map_indexed<R, F>(n: usize, exec: Exec, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Exec::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}
