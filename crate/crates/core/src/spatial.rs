//! Grid contiguity weights and multitype join-count statistics.
//!
//! Moments follow Cliff and Ord's non-free sampling results: type counts are
//! held fixed and labels are shuffled across locations. The permutation
//! engine draws from that same null and serves as the reference for the
//! analytic moments.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cluster::ClusterAssignment;
use crate::grid::CellId;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Contiguity {
    /// Edge-sharing neighbours.
    Rook,
    /// Edge- or corner-sharing neighbours.
    #[default]
    Queen,
}

/// Binary symmetric contiguity weights over a set of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeights {
    cells: Vec<CellId>,
    neighbors: Vec<Vec<usize>>,
    scheme: Contiguity,
    s0: f64,
    s1: f64,
    s2: f64,
}

impl SpatialWeights {
    pub fn n(&self) -> usize {
        self.cells.len()
    }

    /// Nodes in ascending cell order.
    pub fn cells(&self) -> &[CellId] {
        &self.cells
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn scheme(&self) -> Contiguity {
        self.scheme
    }

    /// `Σ_i Σ_j w_ij`.
    pub fn s0(&self) -> f64 {
        self.s0
    }

    /// `½ Σ_i Σ_j (w_ij + w_ji)²`.
    pub fn s1(&self) -> f64 {
        self.s1
    }

    /// `Σ_i (w_i· + w_·i)²`.
    pub fn s2(&self) -> f64 {
        self.s2
    }

    /// Undirected neighbour pairs `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(i, ns)| {
            ns.iter()
                .copied()
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    pub fn n_edges(&self) -> usize {
        self.edges().count()
    }
}

/// Contiguity among the given cells only; cells absent from the set are not
/// nodes and break adjacency across them.
pub fn build_weights(cells: &[CellId], scheme: Contiguity) -> Result<SpatialWeights> {
    if cells.is_empty() {
        return Err(Error::InvalidArgument(
            "weights need at least one cell".into(),
        ));
    }
    let mut sorted = cells.to_vec();
    sorted.sort();
    sorted.dedup();
    let index: BTreeMap<CellId, usize> = sorted.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let offsets: &[(i64, i64)] = match scheme {
        Contiguity::Rook => &[(0, -1), (-1, 0), (1, 0), (0, 1)],
        Contiguity::Queen => &[
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ],
    };
    let neighbors: Vec<Vec<usize>> = sorted
        .iter()
        .map(|c| {
            let mut ns: Vec<usize> = offsets
                .iter()
                .filter_map(|&(dc, dr)| {
                    let col = c.col as i64 + dc;
                    let row = c.row as i64 + dr;
                    if col < 0 || row < 0 || col > u32::MAX as i64 || row > u32::MAX as i64 {
                        return None;
                    }
                    index.get(&CellId::new(col as u32, row as u32)).copied()
                })
                .collect();
            ns.sort_unstable();
            ns
        })
        .collect();
    let s0: f64 = neighbors.iter().map(|v| v.len() as f64).sum();
    let s2: f64 = neighbors
        .iter()
        .map(|v| {
            let d = 2.0 * v.len() as f64;
            d * d
        })
        .sum();
    Ok(SpatialWeights {
        cells: sorted,
        neighbors,
        scheme,
        s0,
        s1: 2.0 * s0,
        s2,
    })
}

/// Moments and z-score of one join count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JoinStat {
    pub observed: u64,
    pub expected: f64,
    pub variance: f64,
    /// `None` when the variance is degenerate (zero or negative).
    pub z: Option<f64>,
}

impl JoinStat {
    fn new(observed: u64, expected: f64, variance: f64) -> Self {
        let z = if variance > 1e-12 {
            Some((observed as f64 - expected) / libm::sqrt(variance))
        } else {
            None
        };
        JoinStat {
            observed,
            expected,
            variance,
            z,
        }
    }
}

/// Join statistics for one unordered type pair; `r == s` for like joins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairJoin {
    pub r: u32,
    pub s: u32,
    pub stat: JoinStat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinCountReport {
    /// Distinct types present, ascending.
    pub types: Vec<u32>,
    /// Locations per type, parallel to `types`.
    pub type_counts: Vec<usize>,
    /// All `r ≤ s` pairs in type order: (t0,t0), (t0,t1), …, (t1,t1), …
    pub pairs: Vec<PairJoin>,
    /// Joins between unlike types.
    pub total_unlike: JoinStat,
    /// Undirected joins overall, `S0 / 2`.
    pub total_joins: u64,
}

impl JoinCountReport {
    pub fn pair(&self, r: u32, s: u32) -> Option<&PairJoin> {
        let (r, s) = if r <= s { (r, s) } else { (s, r) };
        self.pairs.iter().find(|p| p.r == r && p.s == s)
    }
}

/// Falling factorial `n (n−1) … (n−k+1)` in floating point.
fn falling(n: usize, k: usize) -> f64 {
    (0..k).map(|i| n as f64 - i as f64).product()
}

/// Labels of each weighted node, looked up in the assignment.
pub fn node_labels(assign: &ClusterAssignment, w: &SpatialWeights) -> Result<Vec<u32>> {
    w.cells()
        .iter()
        .map(|&c| assign.label_of(c).ok_or(Error::MissingLabel(c)))
        .collect()
}

/// Type table for a label vector: distinct labels ascending and a
/// node → type-index map.
fn type_index(labels: &[u32]) -> (Vec<u32>, Vec<usize>, Vec<usize>) {
    let mut types = labels.to_vec();
    types.sort_unstable();
    types.dedup();
    let pos: BTreeMap<u32, usize> = types.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let idx: Vec<usize> = labels.iter().map(|l| pos[l]).collect();
    let mut counts = vec![0usize; types.len()];
    for &i in &idx {
        counts[i] += 1;
    }
    (types, idx, counts)
}

/// Position of pair `(a, b)`, `a ≤ b`, among the `k(k+1)/2` pairs taken row
/// by row (row `a` holds `k − a` entries).
#[inline]
fn pair_slot(k: usize, a: usize, b: usize) -> usize {
    a * k - a * a.saturating_sub(1) / 2 + (b - a)
}

/// Join counts per pair slot for a node → type-index vector.
fn count_joins(w: &SpatialWeights, idx: &[usize], k: usize, out: &mut [u64]) {
    out.iter_mut().for_each(|c| *c = 0);
    for (i, j) in w.edges() {
        let (a, b) = if idx[i] <= idx[j] {
            (idx[i], idx[j])
        } else {
            (idx[j], idx[i])
        };
        out[pair_slot(k, a, b)] += 1;
    }
}

/// Multitype join counts with analytic non-free sampling moments.
pub fn join_counts(assign: &ClusterAssignment, w: &SpatialWeights) -> Result<JoinCountReport> {
    let labels = node_labels(assign, w)?;
    join_counts_for_labels(&labels, w)
}

/// As [`join_counts`], with labels given per weighted node.
pub fn join_counts_for_labels(labels: &[u32], w: &SpatialWeights) -> Result<JoinCountReport> {
    if labels.len() != w.n() {
        return Err(Error::InvalidArgument(alloc::format!(
            "{} labels for {} weighted cells",
            labels.len(),
            w.n()
        )));
    }
    let (types, idx, counts) = type_index(labels);
    let k = types.len();
    let mut observed = vec![0u64; k * (k + 1) / 2];
    count_joins(w, &idx, k, &mut observed);

    let n = w.n();
    let (s0, s1, s2) = (w.s0(), w.s1(), w.s2());
    let n2 = falling(n, 2);
    let n3 = falling(n, 3);
    let n4 = falling(n, 4);
    // ratios vanish when the denominator does (n < 2, 3, 4)
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    let quad = s0 * s0 + s1 - s2;

    let like_e = |a: usize| 0.5 * s0 * ratio(falling(counts[a], 2), n2);
    let mut pairs = Vec::with_capacity(observed.len());
    for a in 0..k {
        for b in a..k {
            let (na, nb) = (counts[a], counts[b]);
            let (e, v) = if a == b {
                let e = like_e(a);
                let v = 0.25
                    * (s1 * ratio(falling(na, 2), n2)
                        + (s2 - 2.0 * s1) * ratio(falling(na, 3), n3)
                        + quad * ratio(falling(na, 4), n4))
                    - e * e;
                (e, v)
            } else {
                let (fa, fb) = (na as f64, nb as f64);
                let e = s0 * ratio(fa * fb, n2);
                let v = 0.25
                    * (2.0 * s1 * ratio(fa * fb, n2)
                        + (s2 - 2.0 * s1) * ratio(fa * fb * (fa + fb - 2.0), n3)
                        + 4.0 * quad * ratio(falling(na, 2) * falling(nb, 2), n4))
                    - e * e;
                (e, v)
            };
            let v = if falling(na.min(nb), 2) == 0.0 && a == b {
                0.0
            } else {
                v
            };
            pairs.push(PairJoin {
                r: types[a],
                s: types[b],
                stat: JoinStat::new(observed[pair_slot(k, a, b)], e, v),
            });
        }
    }

    // unlike joins = S0/2 − Σ like joins
    let total_joins = w.n_edges() as u64;
    let like_obs: u64 = (0..k).map(|a| observed[pair_slot(k, a, a)]).sum();
    let like_var: f64 = (0..k)
        .map(|a| pairs[pair_slot(k, a, a)].stat.variance)
        .sum();
    let mut cov = 0.0;
    for a in 0..k {
        for b in a + 1..k {
            cov += 0.25 * quad * ratio(falling(counts[a], 2) * falling(counts[b], 2), n4)
                - like_e(a) * like_e(b);
        }
    }
    let like_exp: f64 = (0..k).map(like_e).sum();
    let total_unlike = JoinStat::new(
        total_joins - like_obs,
        0.5 * s0 - like_exp,
        like_var + 2.0 * cov,
    );

    Ok(JoinCountReport {
        types,
        type_counts: counts,
        pairs,
        total_unlike,
        total_joins,
    })
}

/// Unlike joins straight from `½ Σ_i Σ_j w_ij θ_ij`.
pub fn total_unlike_joins(labels: &[u32], w: &SpatialWeights) -> u64 {
    let mut twice = 0u64;
    for i in 0..w.n() {
        for &j in w.neighbors(i) {
            if labels[i] != labels[j] {
                twice += 1;
            }
        }
    }
    twice / 2
}

/// Empirical moments for one pair under label permutation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationStat {
    pub r: u32,
    pub s: u32,
    pub observed: u64,
    pub mean: f64,
    /// Sample variance across replicates.
    pub variance: f64,
    /// Two-sided pseudo p-value on the distance from the permutation mean.
    pub pseudo_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationReport {
    pub n_perms: usize,
    pub seed: u64,
    /// Same pair order as [`JoinCountReport::pairs`].
    pub pairs: Vec<PermutationStat>,
    pub total_unlike: PermutationStat,
}

/// Join counts of one shuffled relabelling.
///
/// Replicate `r` uses ChaCha8 seeded with `seed` on stream `r`, so replicates
/// can be drawn in any order or on any thread with identical results.
pub fn permutation_replicate(
    labels: &[u32],
    w: &SpatialWeights,
    seed: u64,
    replicate: u64,
) -> Vec<u64> {
    let (types, idx, _) = type_index(labels);
    let k = types.len();
    let mut shuffled = idx;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    shuffled.shuffle(&mut rng);
    let mut out = vec![0u64; k * (k + 1) / 2];
    count_joins(w, &shuffled, k, &mut out);
    out
}

/// Reduces replicate join counts (in replicate order) to per-pair moments.
pub fn summarize_permutations(
    labels: &[u32],
    w: &SpatialWeights,
    seed: u64,
    replicates: &[Vec<u64>],
) -> Result<PermutationReport> {
    let n_perms = replicates.len();
    if n_perms < 2 {
        return Err(Error::InvalidArgument(
            "need at least two replicates".into(),
        ));
    }
    let (types, idx, _) = type_index(labels);
    let k = types.len();
    let mut observed = vec![0u64; k * (k + 1) / 2];
    count_joins(w, &idx, k, &mut observed);
    let edges = w.n_edges() as u64;

    let stat = |r: u32, s: u32, obs: u64, sample: &dyn Fn(&[u64]) -> u64| {
        let vals: Vec<f64> = replicates.iter().map(|rep| sample(rep) as f64).collect();
        let mean = vals.iter().sum::<f64>() / n_perms as f64;
        let variance =
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n_perms - 1) as f64;
        let dev = libm::fabs(obs as f64 - mean);
        let extreme = vals
            .iter()
            .filter(|&&v| libm::fabs(v - mean) >= dev - 1e-9)
            .count();
        let pseudo_p = (extreme + 1) as f64 / (n_perms + 1) as f64;
        PermutationStat {
            r,
            s,
            observed: obs,
            mean,
            variance,
            pseudo_p,
        }
    };

    let mut pairs = Vec::with_capacity(observed.len());
    for a in 0..k {
        for b in a..k {
            let slot = pair_slot(k, a, b);
            pairs.push(stat(types[a], types[b], observed[slot], &|rep| rep[slot]));
        }
    }
    let like_slots: Vec<usize> = (0..k).map(|a| pair_slot(k, a, a)).collect();
    let unlike = |rep: &[u64]| edges - like_slots.iter().map(|&s| rep[s]).sum::<u64>();
    let total_unlike = stat(0, 0, unlike(&observed), &unlike);
    Ok(PermutationReport {
        n_perms,
        seed,
        pairs,
        total_unlike,
    })
}

/// Permutation moments of every join count, single-threaded.
pub fn permutation_reference(
    assign: &ClusterAssignment,
    w: &SpatialWeights,
    n_perms: usize,
    seed: u64,
) -> Result<PermutationReport> {
    let labels = node_labels(assign, w)?;
    permutation_reference_for_labels(&labels, w, n_perms, seed)
}

pub fn permutation_reference_for_labels(
    labels: &[u32],
    w: &SpatialWeights,
    n_perms: usize,
    seed: u64,
) -> Result<PermutationReport> {
    if n_perms < 99 {
        return Err(Error::InvalidArgument(alloc::format!(
            "n_perms = {n_perms} is below 99"
        )));
    }
    if labels.len() != w.n() {
        return Err(Error::InvalidArgument(
            "labels do not match weighted cells".into(),
        ));
    }
    let reps: Vec<Vec<u64>> = (0..n_perms as u64)
        .map(|r| permutation_replicate(labels, w, seed, r))
        .collect();
    summarize_permutations(labels, w, seed, &reps)
}
