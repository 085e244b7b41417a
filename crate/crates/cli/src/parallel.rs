//! Multi-threaded drivers for the two expensive steps: pairwise OM distances
//! and join-count permutations. Both write results by index, so the output is
//! identical for any worker count.

use conflict_seq_core::om::{condensed_len, fill_condensed_row, DistanceMatrix};
use conflict_seq_core::seqcore::{CostMatrix, SequenceSet};
use conflict_seq_core::spatial::{
    permutation_replicate, summarize_permutations, PermutationReport, SpatialWeights,
};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{Error, Result};

/// A pool with `workers` threads, or rayon's default (one per core) for `None`.
pub fn pool(workers: Option<usize>) -> Result<ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::Other("workers must be at least 1".into()));
        }
        b = b.num_threads(w);
    }
    b.build()
        .map_err(|e| Error::Other(format!("cannot start worker pool: {e}")))
}

/// Condensed OM distance matrix, rows computed concurrently.
pub fn pairwise_distances(
    seqs: &SequenceSet,
    costs: &CostMatrix,
    pool: &ThreadPool,
) -> Result<DistanceMatrix> {
    let n = seqs.len();
    if n < 2 {
        return Err(Error::Other(format!(
            "pairwise distances need at least 2 sequences, got {n}"
        )));
    }
    let mut d = vec![0.0; condensed_len(n)];
    let mut rows: Vec<(usize, &mut [f64])> = Vec::with_capacity(n - 1);
    let mut rest = d.as_mut_slice();
    for i in 0..n - 1 {
        let (row, tail) = rest.split_at_mut(n - i - 1);
        rows.push((i, row));
        rest = tail;
    }
    pool.install(|| {
        rows.into_par_iter()
            .with_max_len(1)
            .for_each(|(i, row)| fill_condensed_row(seqs, costs, i, row));
    });
    Ok(DistanceMatrix::new(seqs.cells().collect(), d)?)
}

/// Permutation moments for every join count; replicates are independent
/// seeded streams, collected in replicate order.
pub fn permutation_report(
    labels: &[u32],
    w: &SpatialWeights,
    n_perms: usize,
    seed: u64,
    pool: &ThreadPool,
) -> Result<PermutationReport> {
    if n_perms < 99 {
        return Err(Error::Other(format!("n_perms = {n_perms} is below 99")));
    }
    let reps: Vec<Vec<u64>> = pool.install(|| {
        (0..n_perms as u64)
            .into_par_iter()
            .map(|r| permutation_replicate(labels, w, seed, r))
            .collect()
    });
    Ok(summarize_permutations(labels, w, seed, &reps)?)
}
