//! Replicate fan-out.
//!
//! Replicates are folded into integer accumulators, so the merged result
//! does not depend on how rayon splits the index range. Callers choose the
//! worker count by running inside a [`rayon::ThreadPool`].

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Folds `fold(acc, i)` over `i = 0..m` in parallel and merges with `merge`.
/// `merge` must be associative and commutative for reproducible output.
pub fn fold_replicates<A, I, F, M>(m: u64, identity: I, fold: F, merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, u64) -> Result<()> + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    (0..m as usize)
        .into_par_iter()
        .with_min_len(16)
        .try_fold(&identity, |mut acc, i| fold(&mut acc, i as u64).map(|_| acc))
        .try_reduce(&identity, |a, b| Ok(merge(a, b)))
}

/// Builds a pool with `workers` threads (at least one).
pub fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))
}

/// Elementwise sum of two count vectors of possibly different lengths.
pub fn add_counts(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

/// Increments `counts[w]`, growing the vector as needed.
pub fn bump(counts: &mut Vec<u64>, w: usize) {
    if counts.len() <= w {
        counts.resize(w + 1, 0);
    }
    counts[w] += 1;
}
