//! Slow, independent reference implementations used only by tests.
//!
//! Nothing here calls into the code paths it checks: alignment enumeration
//! replaces the DP, exhaustive pair scans replace the cached Ward linkage,
//! full relabelling enumeration replaces the moment formulas, and simulated
//! walks replace the linear solve.
#![allow(dead_code)]

use std::collections::{BTreeMap, BinaryHeap, HashMap};

use conflict_seq_core::cluster::{ward_update, Merge};
use conflict_seq_core::om::DistanceMatrix;
use conflict_seq_core::seqcore::{CostMatrix, TransitionMatrix};
use conflict_seq_core::spatial::SpatialWeights;
use conflict_seq_core::{StateSymbol, N_STATES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Minimum cost over every alignment of `a` and `b`, enumerated recursively
/// without memoisation. Each alignment is an edit script that touches every
/// position at most once.
pub fn brute_force_om(a: &[StateSymbol], b: &[StateSymbol], costs: &CostMatrix) -> f64 {
    match (a.split_first(), b.split_first()) {
        (None, None) => 0.0,
        (Some(_), None) => a.len() as f64 * costs.indel(),
        (None, Some(_)) => b.len() as f64 * costs.indel(),
        (Some((&x, ra)), Some((&y, rb))) => {
            let sub = costs.sub(x, y) + brute_force_om(ra, rb, costs);
            let del = costs.indel() + brute_force_om(ra, b, costs);
            let ins = costs.indel() + brute_force_om(a, rb, costs);
            sub.min(del).min(ins)
        }
    }
}

#[derive(PartialEq)]
struct Node(f64, Vec<u8>);
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

/// Cheapest edit script from `a` to `b` by shortest-path search over all
/// intermediate strings of length ≤ `max_len`, with constant substitution
/// cost `subst` and indel cost `indel`.
pub fn edit_script_search(
    a: &[StateSymbol],
    b: &[StateSymbol],
    subst: f64,
    indel: f64,
    max_len: usize,
) -> f64 {
    let enc = |s: &[StateSymbol]| s.iter().map(|x| x.index() as u8).collect::<Vec<u8>>();
    let (start, goal) = (enc(a), enc(b));
    let mut best: HashMap<Vec<u8>, f64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    best.insert(start.clone(), 0.0);
    heap.push(Node(0.0, start));
    while let Some(Node(d, s)) = heap.pop() {
        if s == goal {
            return d;
        }
        if best.get(&s).is_some_and(|&b| d > b) {
            continue;
        }
        let mut push = |next: Vec<u8>, cost: f64| {
            let nd = d + cost;
            if best.get(&next).is_none_or(|&b| nd < b) {
                best.insert(next.clone(), nd);
                heap.push(Node(nd, next));
            }
        };
        for i in 0..s.len() {
            let mut del = s.clone();
            del.remove(i);
            push(del, indel);
            for sym in 0..N_STATES as u8 {
                if sym != s[i] {
                    let mut t = s.clone();
                    t[i] = sym;
                    push(t, subst);
                }
            }
        }
        if s.len() < max_len {
            for i in 0..=s.len() {
                for sym in 0..N_STATES as u8 {
                    let mut t = s.clone();
                    t.insert(i, sym);
                    push(t, indel);
                }
            }
        }
    }
    f64::INFINITY
}

/// Textbook Ward: scan every live pair each step. Clusters are keyed by
/// their smallest leaf; ties go to the smallest (key, key) pair.
pub fn naive_ward(dm: &DistanceMatrix) -> Vec<Merge> {
    let n = dm.n();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let v = dm.get(i, j);
            d[i][j] = v * v;
        }
    }
    let mut alive = vec![true; n];
    let mut size = vec![1usize; n];
    let mut node: Vec<usize> = (0..n).collect();
    let mut merges = Vec::new();
    for step in 0..n - 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            for j in i + 1..n {
                if alive[i] && alive[j] && best.is_none_or(|(b, _, _)| d[i][j] < b) {
                    best = Some((d[i][j], i, j));
                }
            }
        }
        let (dij, i, j) = best.unwrap();
        merges.push(Merge {
            a: node[i].min(node[j]),
            b: node[i].max(node[j]),
            height: dij.max(0.0).sqrt(),
            size: size[i] + size[j],
        });
        alive[j] = false;
        for k in 0..n {
            if alive[k] && k != i {
                let v = ward_update(d[i][k], d[j][k], dij, size[i], size[j], size[k]);
                d[i][k] = v;
                d[k][i] = v;
            }
        }
        size[i] += size[j];
        node[i] = n + step;
    }
    merges
}

/// Join count for every unordered type pair, from the raw weight lists.
pub fn raw_join_counts(labels: &[u32], w: &SpatialWeights) -> BTreeMap<(u32, u32), u64> {
    let mut out = BTreeMap::new();
    for i in 0..w.n() {
        for &j in w.neighbors(i) {
            if i < j {
                let (a, b) = (labels[i].min(labels[j]), labels[i].max(labels[j]));
                *out.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    out
}

/// Exact mean and population variance of every pair's join count over all
/// distinct relabellings of `labels`.
pub fn exhaustive_join_moments(
    labels: &[u32],
    w: &SpatialWeights,
) -> BTreeMap<(u32, u32), (f64, f64)> {
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    let mut types = sorted.clone();
    types.dedup();
    let mut samples: BTreeMap<(u32, u32), Vec<f64>> = BTreeMap::new();
    let mut count = 0usize;
    loop {
        let jc = raw_join_counts(&sorted, w);
        for (ai, &a) in types.iter().enumerate() {
            for &b in &types[ai..] {
                samples
                    .entry((a, b))
                    .or_default()
                    .push(*jc.get(&(a, b)).unwrap_or(&0) as f64);
            }
        }
        count += 1;
        if !next_permutation(&mut sorted) {
            break;
        }
    }
    samples
        .into_iter()
        .map(|(k, v)| {
            let m = v.iter().sum::<f64>() / count as f64;
            let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / count as f64;
            (k, (m, var))
        })
        .collect()
}

fn next_permutation(v: &mut [u32]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Simulated steps to first reach NC from `start`; returns (mean, standard
/// error) over `walks` walks. Walks longer than `cap` steps are reported as
/// `None` in the first slot.
pub fn simulate_absorption(
    tm: &TransitionMatrix,
    start: StateSymbol,
    walks: usize,
    seed: u64,
    cap: usize,
) -> Option<(f64, f64)> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..walks {
        let mut s = start.index();
        let mut steps = 0usize;
        while s != StateSymbol::NC.index() {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let row = &tm.probs[s];
            let mut next = N_STATES - 1;
            for (j, &p) in row.iter().enumerate() {
                acc += p;
                if u < acc {
                    next = j;
                    break;
                }
            }
            s = next;
            steps += 1;
            if steps > cap {
                return None;
            }
        }
        sum += steps as f64;
        sum_sq += (steps * steps) as f64;
    }
    let n = walks as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean) * n / (n - 1.0);
    Some((mean, (var / n).sqrt()))
}

/// Random transition matrix where every violent row has positive mass on NC
/// of at least `min_exit`.
pub fn random_absorbing_chain(rng: &mut impl Rng, min_exit: f64) -> TransitionMatrix {
    let mut p = [[0.0; N_STATES]; N_STATES];
    for (i, row) in p.iter_mut().enumerate() {
        let mut w: Vec<f64> = (0..N_STATES).map(|_| rng.random::<f64>()).collect();
        if i != 0 {
            w[0] = w[0].max(min_exit * w.iter().sum::<f64>());
        }
        let total: f64 = w.iter().sum();
        for (dst, v) in row.iter_mut().zip(w) {
            *dst = v / total;
        }
    }
    TransitionMatrix::from_probs(p).expect("rows are normalised")
}

/// Random cost matrix satisfying the cost invariants.
pub fn random_costs(rng: &mut impl Rng) -> CostMatrix {
    let mut sub = [[0.0; N_STATES]; N_STATES];
    for i in 0..N_STATES {
        for j in i + 1..N_STATES {
            let v = rng.random_range(0.0..=2.0);
            sub[i][j] = v;
            sub[j][i] = v;
        }
    }
    let indel = rng.random_range(0.05..2.0);
    CostMatrix::new(sub, indel).expect("valid by construction")
}

pub fn random_sequence(rng: &mut impl Rng, len: usize) -> Vec<StateSymbol> {
    (0..len)
        .map(|_| StateSymbol::ALL[rng.random_range(0..N_STATES)])
        .collect()
}

/// Every sequence of length `len` over the alphabet.
pub fn all_sequences(len: usize) -> Vec<Vec<StateSymbol>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| {
                StateSymbol::ALL.iter().map(move |&x| {
                    let mut t = s.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}
