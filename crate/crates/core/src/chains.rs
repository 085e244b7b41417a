//! Per-cluster Markov characterisation: transition matrices, expected years
//! from each violent state to NC, mean violence stopping time (MVST), and
//! trajectory summaries.

use alloc::vec::Vec;

use crate::cluster::ClusterAssignment;
use crate::seqcore::{SequenceSet, StateSequence, TransitionMatrix};
use crate::{Error, Result, StateSymbol, N_STATES, VIOLENT_STATES};

fn members<'a>(
    seqs: &'a SequenceSet,
    assign: &'a ClusterAssignment,
    c: u32,
) -> impl Iterator<Item = &'a StateSequence> + Clone + 'a {
    seqs.sequences()
        .iter()
        .filter(move |s| assign.label_of(s.cell) == Some(c))
}

/// Pooled transition matrix over the sequences labelled `c`.
pub fn cluster_transition_matrix(
    seqs: &SequenceSet,
    assign: &ClusterAssignment,
    c: u32,
) -> Result<TransitionMatrix> {
    let mut any = false;
    let tm = TransitionMatrix::from_runs(members(seqs, assign, c).map(|s| {
        any = true;
        s.symbols.as_slice()
    }));
    if !any {
        return Err(Error::EmptyCluster(c));
    }
    Ok(tm)
}

/// Expected years from each violent state to the first NC.
///
/// When NC is reachable but not certain (the chain can also fall into a
/// violent trap), the value is the expectation conditional on reaching NC.
/// With certain absorption this is the ordinary expected hitting time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HittingTimes {
    h: [f64; N_STATES],
    absorption: [f64; N_STATES],
    residual: f64,
}

impl HittingTimes {
    /// Hitting time from `s`; zero for NC, `+inf` where NC is unreachable.
    pub fn get(&self, s: StateSymbol) -> f64 {
        self.h[s.index()]
    }

    pub fn as_array(&self) -> &[f64; N_STATES] {
        &self.h
    }

    /// Probability of ever reaching NC from `s`.
    pub fn absorption_probability(&self, s: StateSymbol) -> f64 {
        self.absorption[s.index()]
    }

    /// Largest residual of the solved linear system.
    pub fn residual(&self) -> f64 {
        self.residual
    }
}

/// Solves `A x = b` in place by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap_or(col);
        if a[piv][col].abs() < 1e-12 {
            return Err(Error::SingularSystem {
                pivot: a[piv][col],
                state_count: n,
            });
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = alloc::vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Ok(x)
}

/// Violent states from which NC can be reached along positive transitions.
fn reaches_nc(tm: &TransitionMatrix) -> [bool; N_STATES] {
    let mut reach = [false; N_STATES];
    reach[StateSymbol::NC.index()] = true;
    loop {
        let mut changed = false;
        for i in VIOLENT_STATES {
            let i = i.index();
            if !reach[i] && (0..N_STATES).any(|j| reach[j] && tm.probs[i][j] > 0.0) {
                reach[i] = true;
                changed = true;
            }
        }
        if !changed {
            return reach;
        }
    }
}

/// Expected hitting times of NC from every violent state.
pub fn hitting_times(tm: &TransitionMatrix) -> Result<HittingTimes> {
    let nc = StateSymbol::NC.index();
    let reach = reaches_nc(tm);
    let live: Vec<usize> = VIOLENT_STATES
        .iter()
        .map(|s| s.index())
        .filter(|&i| reach[i])
        .collect();
    let m = live.len();

    let mut h = [f64::INFINITY; N_STATES];
    let mut absorption = [0.0; N_STATES];
    h[nc] = 0.0;
    absorption[nc] = 1.0;
    if m == 0 {
        return Ok(HittingTimes {
            h,
            absorption,
            residual: 0.0,
        });
    }

    // absorption probabilities: a_i = p(NC|i) + sum_j p(j|i) a_j over live j
    let system = |rhs: &dyn Fn(usize) -> f64, weight: &dyn Fn(usize, usize) -> f64| {
        let a: Vec<Vec<f64>> = live
            .iter()
            .map(|&i| {
                live.iter()
                    .map(|&j| if i == j { 1.0 } else { 0.0 } - weight(i, j))
                    .collect()
            })
            .collect();
        let b: Vec<f64> = live.iter().map(|&i| rhs(i)).collect();
        solve(a, b)
    };
    let a = system(&|i| tm.probs[i][nc], &|i, j| tm.probs[i][j])?;
    for (k, &i) in live.iter().enumerate() {
        absorption[i] = a[k].clamp(0.0, 1.0);
    }

    // hitting times under the chain conditioned on absorption
    let cond = |i: usize, j: usize| tm.probs[i][j] * absorption[j] / absorption[i];
    let t = system(&|_| 1.0, &cond)?;
    let mut residual = 0.0f64;
    for (k, &i) in live.iter().enumerate() {
        h[i] = t[k];
    }
    for &i in &live {
        let rhs: f64 = 1.0 + live.iter().map(|&j| cond(i, j) * h[j]).sum::<f64>();
        residual = residual.max((h[i] - rhs).abs());
    }
    Ok(HittingTimes {
        h,
        absorption,
        residual,
    })
}

/// Start-state weights over the violent states, indexed like
/// [`StateSymbol::index`] (the NC slot is always zero).
pub type StartDistribution = [f64; N_STATES];

/// Which sequence positions count as "violent states at the start".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StartReading {
    /// The first violent symbol of each sequence.
    #[default]
    FirstViolent,
    /// The symbol at the first year, for sequences that start violent.
    InitialState,
    /// The first symbol of every violent spell.
    SpellStarts,
}

/// Mean violence stopping time: hitting times averaged over `start`.
///
/// `+inf` when any state with positive weight never reaches NC.
pub fn mvst(tm: &TransitionMatrix, start: &StartDistribution) -> Result<f64> {
    let total: f64 = start.iter().sum();
    if start.iter().any(|w| !(*w >= 0.0))
        || (total - 1.0).abs() > 1e-9
        || start[StateSymbol::NC.index()] != 0.0
    {
        return Err(Error::InvalidArgument(alloc::format!(
            "start weights {start:?} must be a distribution over violent states"
        )));
    }
    let h = hitting_times(tm)?;
    Ok(mvst_from(&h, start))
}

pub fn mvst_from(h: &HittingTimes, start: &StartDistribution) -> f64 {
    let mut acc = 0.0;
    for s in VIOLENT_STATES {
        let w = start[s.index()];
        if w > 0.0 {
            acc += w * h.get(s);
        }
    }
    acc
}

fn tally_starts<'a>(
    seqs: impl Iterator<Item = &'a StateSequence>,
    reading: StartReading,
) -> [u64; N_STATES] {
    let mut tally = [0u64; N_STATES];
    for s in seqs {
        match reading {
            StartReading::FirstViolent => {
                if let Some(x) = s.first_violent() {
                    tally[x.index()] += 1;
                }
            }
            StartReading::InitialState => {
                if let Some(&x) = s.symbols.first() {
                    if x.is_violent() {
                        tally[x.index()] += 1;
                    }
                }
            }
            StartReading::SpellStarts => {
                let mut prev_violent = false;
                for &x in &s.symbols {
                    if x.is_violent() && !prev_violent {
                        tally[x.index()] += 1;
                    }
                    prev_violent = x.is_violent();
                }
            }
        }
    }
    tally
}

fn normalize(tally: [u64; N_STATES]) -> Option<StartDistribution> {
    let total: u64 = tally.iter().sum();
    if total == 0 {
        return None;
    }
    let mut out = [0.0; N_STATES];
    for (o, &t) in out.iter_mut().zip(&tally) {
        *o = t as f64 / total as f64;
    }
    Some(out)
}

/// Distribution of the first violent symbol over the sequences labelled `c`.
pub fn start_distribution(
    seqs: &SequenceSet,
    assign: &ClusterAssignment,
    c: u32,
) -> Result<StartDistribution> {
    start_distribution_with(seqs, assign, c, StartReading::FirstViolent)
}

pub fn start_distribution_with(
    seqs: &SequenceSet,
    assign: &ClusterAssignment,
    c: u32,
    reading: StartReading,
) -> Result<StartDistribution> {
    if members(seqs, assign, c).next().is_none() {
        return Err(Error::EmptyCluster(c));
    }
    normalize(tally_starts(members(seqs, assign, c), reading)).ok_or(Error::NoViolentSpell(c))
}

/// A reported transition and its rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatedTransition {
    pub from: StateSymbol,
    pub to: StateSymbol,
    pub rate: f64,
}

/// Summary columns for one trajectory type.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary {
    /// `None` for the all-sequences row.
    pub cluster: Option<u32>,
    pub n_cells: usize,
    /// NC→X with the largest count; rate is its share of all NC-source
    /// transitions, NC→NC included.
    pub start: Option<RatedTransition>,
    /// X→X (X violent) with the largest row-conditional probability.
    pub repetition: Option<RatedTransition>,
    /// X→Y between distinct violent states with the largest row-conditional
    /// probability.
    pub cross: Option<RatedTransition>,
    /// X→NC with the largest row-conditional probability.
    pub terminus: Option<RatedTransition>,
    /// `None` when there is no violent spell; may be `+inf`.
    pub mvst_years: Option<f64>,
    pub transitions: TransitionMatrix,
}

fn argmax(
    cands: impl Iterator<Item = (StateSymbol, StateSymbol, f64)>,
    tm: &TransitionMatrix,
) -> Option<RatedTransition> {
    let mut best: Option<RatedTransition> = None;
    for (from, to, rate) in cands {
        if tm.count(from, to) == 0 && tm.p(from, to) == 0.0 {
            continue;
        }
        if best.is_none_or(|b| rate > b.rate) {
            best = Some(RatedTransition { from, to, rate });
        }
    }
    best
}

fn summarize<'a>(
    cluster: Option<u32>,
    seqs: impl Iterator<Item = &'a StateSequence> + Clone,
    reading: StartReading,
) -> Result<TrajectorySummary> {
    let n_cells = seqs.clone().count();
    let tm = TransitionMatrix::from_runs(seqs.clone().map(|s| s.symbols.as_slice()));
    let nc = StateSymbol::NC;

    let nc_total = tm.row_total(nc);
    let start = argmax(
        VIOLENT_STATES.iter().map(|&x| {
            let share = if nc_total > 0 {
                tm.count(nc, x) as f64 / nc_total as f64
            } else {
                0.0
            };
            (nc, x, share)
        }),
        &tm,
    );
    let repetition = argmax(VIOLENT_STATES.iter().map(|&x| (x, x, tm.p(x, x))), &tm);
    let cross = argmax(
        VIOLENT_STATES.iter().flat_map(|&x| {
            VIOLENT_STATES
                .iter()
                .filter(move |&&y| y != x)
                .map(move |&y| (x, y, tm.p(x, y)))
        }),
        &tm,
    );
    let terminus = argmax(VIOLENT_STATES.iter().map(|&x| (x, nc, tm.p(x, nc))), &tm);

    let mvst_years = match normalize(tally_starts(seqs, reading)) {
        Some(start) => Some(mvst_from(&hitting_times(&tm)?, &start)),
        None => None,
    };
    Ok(TrajectorySummary {
        cluster,
        n_cells,
        start,
        repetition,
        cross,
        terminus,
        mvst_years,
        transitions: tm,
    })
}

/// Summary of the sequences labelled `c`.
pub fn trajectory_summary(
    seqs: &SequenceSet,
    assign: &ClusterAssignment,
    c: u32,
) -> Result<TrajectorySummary> {
    trajectory_summary_with(seqs, assign, c, StartReading::FirstViolent)
}

pub fn trajectory_summary_with(
    seqs: &SequenceSet,
    assign: &ClusterAssignment,
    c: u32,
    reading: StartReading,
) -> Result<TrajectorySummary> {
    if members(seqs, assign, c).next().is_none() {
        return Err(Error::EmptyCluster(c));
    }
    summarize(Some(c), members(seqs, assign, c), reading)
}

/// Summary pooled over every sequence.
pub fn overall_summary(seqs: &SequenceSet, reading: StartReading) -> Result<TrajectorySummary> {
    summarize(None, seqs.sequences().iter(), reading)
}
