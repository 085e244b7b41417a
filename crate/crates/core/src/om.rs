//! Optimal Matching edit distance and condensed pairwise distance matrices.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::CellId;
use crate::seqcore::{CostMatrix, SequenceSet};
use crate::{Error, Result, StateSymbol, N_STATES};

/// Minimum total cost of insertions, deletions and substitutions turning `a`
/// into `b`.
///
/// Full-table dynamic programme kept to two rows; `O(len(a) · len(b))`.
pub fn om_distance(a: &[StateSymbol], b: &[StateSymbol], costs: &CostMatrix) -> f64 {
    let mut scratch = Scratch::default();
    scratch.distance(a, b, costs.sub_table(), costs.indel())
}

/// Reusable DP rows, so tight loops avoid reallocating.
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    prev: Vec<f64>,
    cur: Vec<f64>,
}

impl Scratch {
    pub fn distance(
        &mut self,
        a: &[StateSymbol],
        b: &[StateSymbol],
        sub: &[[f64; N_STATES]; N_STATES],
        indel: f64,
    ) -> f64 {
        let m = b.len();
        self.prev.clear();
        self.prev.extend((0..=m).map(|j| j as f64 * indel));
        self.cur.clear();
        self.cur.resize(m + 1, 0.0);
        for (i, &ai) in a.iter().enumerate() {
            let row = &sub[ai.index()];
            self.cur[0] = (i + 1) as f64 * indel;
            for (j, &bj) in b.iter().enumerate() {
                let del = self.prev[j + 1] + indel;
                let ins = self.cur[j] + indel;
                let rep = self.prev[j] + row[bj.index()];
                self.cur[j + 1] = min(min(del, rep), ins);
            }
            core::mem::swap(&mut self.prev, &mut self.cur);
        }
        self.prev[m]
    }
}

/// Optional length normalisation for library callers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    None,
    /// Divide by the longer sequence length (0 for two empty sequences).
    MaxLength,
}

pub fn om_distance_normalized(
    a: &[StateSymbol],
    b: &[StateSymbol],
    costs: &CostMatrix,
    norm: Normalization,
) -> f64 {
    let d = om_distance(a, b, costs);
    match norm {
        Normalization::None => d,
        Normalization::MaxLength => {
            let l = a.len().max(b.len());
            if l == 0 {
                0.0
            } else {
                d / l as f64
            }
        }
    }
}

/// Upper-triangular pairwise distances stored row by row.
///
/// Entry `(i, j)` with `i < j` sits at `n·i − i(i+1)/2 + (j − i − 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
    labels: Vec<CellId>,
}

#[inline]
pub const fn condensed_len(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Offset of row `i`'s first entry, `(i, i + 1)`.
#[inline]
pub const fn row_start(n: usize, i: usize) -> usize {
    n * i - i * (i + 1) / 2
}

impl DistanceMatrix {
    pub fn new(labels: Vec<CellId>, d: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if d.len() != condensed_len(n) {
            return Err(Error::InvalidArgument(alloc::format!(
                "condensed matrix for n = {n} needs {} entries, got {}",
                condensed_len(n),
                d.len()
            )));
        }
        if let Some(bad) = d.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!(
                "distance {bad} is negative or not finite"
            )));
        }
        Ok(DistanceMatrix { n, d, labels })
    }

    /// Builds a matrix from any symmetric function, for tests and small inputs.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut d = Vec::with_capacity(condensed_len(n));
        for i in 0..n {
            for j in i + 1..n {
                d.push(f(i, j));
            }
        }
        let labels = (0..n).map(|i| CellId::new(i as u32, 0)).collect();
        Self::new(labels, d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn condensed(&self) -> &[f64] {
        &self.d
    }

    pub fn labels(&self) -> &[CellId] {
        &self.labels
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        row_start(self.n, i) + (j - i - 1)
    }

    /// Distance between items `i` and `j`; zero on the diagonal.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            core::cmp::Ordering::Equal => 0.0,
            core::cmp::Ordering::Less => self.d[self.index(i, j)],
            core::cmp::Ordering::Greater => self.d[self.index(j, i)],
        }
    }
}

/// Fills row `i` of the condensed matrix: distances from sequence `i` to every
/// later sequence. `out.len()` must be `n − i − 1`.
///
/// Rows are independent, so callers may compute them concurrently.
pub fn fill_condensed_row(seqs: &SequenceSet, costs: &CostMatrix, i: usize, out: &mut [f64]) {
    let all = seqs.sequences();
    assert_eq!(out.len(), all.len() - i - 1, "row {i} has the wrong width");
    let a = &all[i].symbols;
    let (sub, indel) = (costs.sub_table(), costs.indel());
    let others = &all[i + 1..];
    let mut block = Block::default();
    let mut done = 0;
    // every sequence in a set has the same length, so full blocks always apply
    while done + LANES <= others.len() {
        let bs: [&[StateSymbol]; LANES] =
            core::array::from_fn(|l| others[done + l].symbols.as_slice());
        out[done..done + LANES].copy_from_slice(&block.distances(a, bs, sub, indel));
        done += LANES;
    }
    let mut scratch = Scratch::default();
    for (slot, other) in out[done..].iter_mut().zip(&others[done..]) {
        *slot = scratch.distance(a, &other.symbols, sub, indel);
    }
}

#[inline(always)]
fn min(a: f64, b: f64) -> f64 {
    if b < a {
        b
    } else {
        a
    }
}

const LANES: usize = 8;

/// Runs `LANES` alignments of one sequence against equal-length partners in
/// lock-step. Each lane performs exactly the scalar recurrence, so results
/// are bitwise identical to [`Scratch::distance`]; interleaving only hides
/// the latency of the row-wise dependency chain.
#[derive(Default)]
struct Block {
    prev: Vec<[f64; LANES]>,
    cur: Vec<[f64; LANES]>,
    /// `cost[s][j][l]`: substituting state `s` for position `j` of lane `l`.
    cost: Vec<[f64; LANES]>,
}

impl Block {
    fn distances(
        &mut self,
        a: &[StateSymbol],
        bs: [&[StateSymbol]; LANES],
        sub: &[[f64; N_STATES]; N_STATES],
        indel: f64,
    ) -> [f64; LANES] {
        let m = bs[0].len();
        debug_assert!(bs.iter().all(|b| b.len() == m));
        self.cost.clear();
        for row in sub {
            self.cost
                .extend((0..m).map(|j| core::array::from_fn(|l| row[bs[l][j].index()])));
        }
        self.prev.clear();
        self.prev.extend((0..=m).map(|j| [j as f64 * indel; LANES]));
        self.cur.clear();
        self.cur.resize(m + 1, [0.0; LANES]);
        for (i, &ai) in a.iter().enumerate() {
            let cost = &self.cost[ai.index() * m..(ai.index() + 1) * m];
            let mut left = [(i + 1) as f64 * indel; LANES];
            self.cur[0] = left;
            for j in 0..m {
                let (diag, up, c) = (&self.prev[j], &self.prev[j + 1], &cost[j]);
                let mut next = [0.0; LANES];
                for l in 0..LANES {
                    let del = up[l] + indel;
                    let ins = left[l] + indel;
                    let rep = diag[l] + c[l];
                    next[l] = min(min(del, rep), ins);
                }
                self.cur[j + 1] = next;
                left = next;
            }
            core::mem::swap(&mut self.prev, &mut self.cur);
        }
        self.prev[m]
    }
}

/// Condensed matrix of OM distances over every unordered pair, single-threaded.
pub fn pairwise_distances(seqs: &SequenceSet, costs: &CostMatrix) -> Result<DistanceMatrix> {
    let n = seqs.len();
    if n < 2 {
        return Err(Error::InvalidArgument(alloc::format!(
            "pairwise distances need at least 2 sequences, got {n}"
        )));
    }
    let mut d = vec![0.0; condensed_len(n)];
    for i in 0..n - 1 {
        let start = row_start(n, i);
        fill_condensed_row(seqs, costs, i, &mut d[start..start + (n - i - 1)]);
    }
    DistanceMatrix::new(seqs.cells().collect(), d)
}
