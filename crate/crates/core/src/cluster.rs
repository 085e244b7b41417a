//! Ward agglomerative clustering over a condensed distance matrix.
//!
//! Ward's recurrence runs on squared input distances; merge heights are the
//! square roots of the merge costs, so a two-item tree merges at the input
//! distance itself.
//!
//! Ties between equal merge costs go to the pair with the lexicographically
//! smallest (smaller, larger) cluster key, where a cluster's key is its
//! smallest leaf index.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::grid::CellId;
use crate::om::{condensed_len, row_start, DistanceMatrix};
use crate::{Error, Result};

/// One agglomeration step. Nodes `0..n_leaves` are leaves; the cluster made
/// by merge `k` is node `n_leaves + k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// Smaller child node id.
    pub a: usize,
    /// Larger child node id.
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    merges: Vec<Merge>,
    n_leaves: usize,
}

impl Dendrogram {
    /// Validates that `merges` describe a binary tree over `n_leaves` leaves.
    pub fn new(n_leaves: usize, merges: Vec<Merge>) -> Result<Self> {
        if n_leaves == 0 || merges.len() != n_leaves - 1 {
            return Err(Error::InvalidArgument(alloc::format!(
                "{} merges cannot join {n_leaves} leaves",
                merges.len()
            )));
        }
        let mut used = vec![false; 2 * n_leaves - 1];
        let mut sizes: Vec<usize> = vec![1; n_leaves];
        for (k, m) in merges.iter().enumerate() {
            let node = n_leaves + k;
            for child in [m.a, m.b] {
                if child >= node || used[child] {
                    return Err(Error::InvalidArgument(alloc::format!(
                        "merge {k} reuses or forward-references node {child}"
                    )));
                }
                used[child] = true;
            }
            if m.a == m.b || m.size != sizes[m.a] + sizes[m.b] || !(m.height >= 0.0) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "merge {k} is inconsistent"
                )));
            }
            sizes.push(m.size);
        }
        Ok(Dendrogram { merges, n_leaves })
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    /// Leaves under `node`, in ascending order.
    pub fn leaves_under(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if x < self.n_leaves {
                out.push(x);
            } else {
                let m = &self.merges[x - self.n_leaves];
                stack.push(m.a);
                stack.push(m.b);
            }
        }
        out.sort_unstable();
        out
    }
}

/// Lance–Williams update for Ward on squared distances.
#[inline]
pub fn ward_update(d_ik: f64, d_jk: f64, d_ij: f64, n_i: usize, n_j: usize, n_k: usize) -> f64 {
    let (ni, nj, nk) = (n_i as f64, n_j as f64, n_k as f64);
    ((ni + nk) * d_ik + (nj + nk) * d_jk - nk * d_ij) / (ni + nj + nk)
}

/// Working copy of squared distances between live cluster slots.
struct Squared {
    n: usize,
    d: Vec<f64>,
}

impl Squared {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        row_start(self.n, i) + (j - i - 1)
    }
    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.d[self.idx(i, j)]
    }
    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.d[k] = v;
    }
}

/// Ward linkage with a cached nearest neighbour per cluster slot.
///
/// Slot `i` always holds the cluster whose smallest leaf is `i`, and its
/// cached neighbour only looks at slots above `i`. This reproduces the
/// exhaustive pair scan (lowest cost, then smallest slot pair) while touching
/// far fewer entries per step.
pub fn ward_linkage(dm: &DistanceMatrix) -> Result<Dendrogram> {
    let n = dm.n();
    if n < 2 {
        return Err(Error::InvalidArgument(alloc::format!(
            "linkage needs at least 2 items, got {n}"
        )));
    }
    let mut sq = Squared {
        n,
        d: dm.condensed().iter().map(|v| v * v).collect(),
    };
    debug_assert_eq!(sq.d.len(), condensed_len(n));

    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut node = (0..n).collect::<Vec<_>>();
    let mut nn = vec![usize::MAX; n];
    let mut nn_dist = vec![f64::INFINITY; n];

    let recompute =
        |i: usize, sq: &Squared, active: &[bool], nn: &mut [usize], nn_dist: &mut [f64]| {
            let mut best = f64::INFINITY;
            let mut arg = usize::MAX;
            for j in i + 1..n {
                if active[j] {
                    let v = sq.get(i, j);
                    if v < best || arg == usize::MAX {
                        best = v;
                        arg = j;
                    }
                }
            }
            nn[i] = arg;
            nn_dist[i] = best;
        };

    for i in 0..n - 1 {
        recompute(i, &sq, &active, &mut nn, &mut nn_dist);
    }

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut i = usize::MAX;
        let mut best = f64::INFINITY;
        for k in 0..n {
            if active[k] && nn[k] != usize::MAX && (nn_dist[k] < best || i == usize::MAX) {
                best = nn_dist[k];
                i = k;
            }
        }
        let j = nn[i];
        let d_ij = best;

        let (na, nb) = (node[i].min(node[j]), node[i].max(node[j]));
        merges.push(Merge {
            a: na,
            b: nb,
            height: libm::sqrt(d_ij.max(0.0)),
            size: size[i] + size[j],
        });

        active[j] = false;
        for k in 0..n {
            if active[k] && k != i {
                let v = ward_update(sq.get(i, k), sq.get(j, k), d_ij, size[i], size[j], size[k]);
                sq.set(i, k, v);
            }
        }
        size[i] += size[j];
        node[i] = n + step;
        nn[j] = usize::MAX;

        recompute(i, &sq, &active, &mut nn, &mut nn_dist);
        for k in 0..i {
            if !active[k] {
                continue;
            }
            if nn[k] == i || nn[k] == j {
                recompute(k, &sq, &active, &mut nn, &mut nn_dist);
            } else {
                let v = sq.get(k, i);
                if v < nn_dist[k] || (v == nn_dist[k] && i < nn[k]) {
                    nn[k] = i;
                    nn_dist[k] = v;
                }
            }
        }
        for k in i + 1..j {
            if active[k] && nn[k] == j {
                recompute(k, &sq, &active, &mut nn, &mut nn_dist);
            }
        }
    }
    Dendrogram::new(n, merges)
}

/// Flat clustering: cluster id (1-based) per leaf, plus the cells they label.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    cells: Vec<CellId>,
    labels: Vec<u32>,
    k: u32,
    never_violent_label: Option<u32>,
    index: BTreeMap<CellId, usize>,
}

impl ClusterAssignment {
    /// Pairs each cell with its label. Labels must cover `1..=k` exactly.
    pub fn new(cells: Vec<CellId>, labels: Vec<u32>, k: u32) -> Result<Self> {
        if cells.len() != labels.len() {
            return Err(Error::InvalidArgument(
                "cells and labels differ in length".into(),
            ));
        }
        let mut seen = vec![false; k as usize];
        for &l in &labels {
            if l == 0 || l > k {
                return Err(Error::InvalidArgument(alloc::format!(
                    "label {l} outside 1..={k}"
                )));
            }
            seen[l as usize - 1] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument(alloc::format!(
                "not every label in 1..={k} is used"
            )));
        }
        let mut index = BTreeMap::new();
        for (i, &c) in cells.iter().enumerate() {
            if index.insert(c, i).is_some() {
                return Err(Error::DuplicateCell(c));
            }
        }
        Ok(ClusterAssignment {
            cells,
            labels,
            k,
            never_violent_label: None,
            index,
        })
    }

    /// Records the label reported for never-violent cells excluded upstream.
    pub fn with_never_violent_label(mut self, label: u32) -> Self {
        self.never_violent_label = Some(label);
        self
    }

    pub fn never_violent_label(&self) -> Option<u32> {
        self.never_violent_label
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn cells(&self) -> &[CellId] {
        &self.cells
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_of(&self, cell: CellId) -> Option<u32> {
        self.index.get(&cell).map(|&i| self.labels[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (CellId, u32)> + '_ {
        self.cells.iter().copied().zip(self.labels.iter().copied())
    }

    pub fn cluster_size(&self, c: u32) -> usize {
        self.labels.iter().filter(|&&l| l == c).count()
    }
}

/// Cuts the tree into `k` clusters by undoing its `k − 1` highest merges.
///
/// Label 1 goes to the largest cluster; equal sizes are ordered by smallest
/// leaf index. `cells[i]` labels leaf `i`.
pub fn cut(dg: &Dendrogram, k: usize, cells: &[CellId]) -> Result<ClusterAssignment> {
    let n = dg.n_leaves();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(alloc::format!(
            "k = {k} outside 1..={n}"
        )));
    }
    if cells.len() != n {
        return Err(Error::InvalidArgument(alloc::format!(
            "{} cells for {n} leaves",
            cells.len()
        )));
    }
    let labels = cut_labels(dg, k);
    ClusterAssignment::new(cells.to_vec(), labels, k as u32)
}

/// Leaf labels of a `k`-cut without attaching cells.
pub fn cut_labels(dg: &Dendrogram, k: usize) -> Vec<u32> {
    let n = dg.n_leaves();
    // union-find over nodes 0..2n-1 for the first n-k merges
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (step, m) in dg.merges().iter().take(n - k).enumerate() {
        let new = n + step;
        let ra = find(&mut parent, m.a);
        let rb = find(&mut parent, m.b);
        parent[ra] = new;
        parent[rb] = new;
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    // (size, min leaf) per root
    let mut stats: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (leaf, &r) in roots.iter().enumerate() {
        let e = stats.entry(r).or_insert((0, leaf));
        e.0 += 1;
    }
    let mut order: Vec<(usize, usize, usize)> =
        stats.iter().map(|(&r, &(s, m))| (s, m, r)).collect();
    order.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
    let label_of: BTreeMap<usize, u32> = order
        .iter()
        .enumerate()
        .map(|(i, &(_, _, r))| (r, i as u32 + 1))
        .collect();
    roots.iter().map(|r| label_of[r]).collect()
}

/// Adjusted Rand index between two labelings of the same items.
///
/// Returns 1.0 when both partitions are identical and trivially so (all
/// singletons or one block).
pub fn adjusted_rand_index(a: &[u32], b: &[u32]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len();
    let choose2 = |x: usize| (x as f64) * (x as f64 - 1.0) / 2.0;
    let mut table: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    let mut rows: BTreeMap<u32, usize> = BTreeMap::new();
    let mut cols: BTreeMap<u32, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    if total == 0.0 {
        return 1.0;
    }
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}
