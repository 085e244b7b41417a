//! Per-cell state sequences, pooled transition matrices, and substitution
//! costs derived from transition rates.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::grid::CellId;
use crate::scdi::StateField;
use crate::{Error, Result, StateSymbol, N_STATES};

/// The year-ordered states of one cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSequence {
    pub cell: CellId,
    pub symbols: Vec<StateSymbol>,
}

impl StateSequence {
    pub fn new(cell: CellId, symbols: Vec<StateSymbol>) -> Self {
        StateSequence { cell, symbols }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn is_never_violent(&self) -> bool {
        self.symbols.iter().all(|s| !s.is_violent())
    }

    /// State at the first violent time step, if any.
    pub fn first_violent(&self) -> Option<StateSymbol> {
        self.symbols.iter().copied().find(|s| s.is_violent())
    }

    /// Dash-joined rendering, e.g. `NC-CL-CH`.
    pub fn to_code(&self) -> alloc::string::String {
        let mut out = alloc::string::String::with_capacity(self.symbols.len() * 3);
        for (i, s) in self.symbols.iter().enumerate() {
            if i > 0 {
                out.push('-');
            }
            out.push_str(s.as_str());
        }
        out
    }

    /// Parses the dash-joined rendering produced by [`StateSequence::to_code`].
    pub fn parse_code(cell: CellId, code: &str) -> Result<Self> {
        let symbols = if code.trim().is_empty() {
            Vec::new()
        } else {
            code.split('-')
                .map(str::parse)
                .collect::<Result<Vec<_>>>()?
        };
        Ok(StateSequence { cell, symbols })
    }
}

/// Equal-length sequences, one per distinct cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceSet {
    sequences: Vec<StateSequence>,
    len: usize,
    includes_all_nc: bool,
}

impl SequenceSet {
    /// Validates a sequence collection of common length `len ≥ 2`.
    ///
    /// An empty collection is allowed and keeps `len`.
    pub fn new(sequences: Vec<StateSequence>, len: usize, includes_all_nc: bool) -> Result<Self> {
        if len < 2 {
            return Err(Error::SequenceLength {
                expected: 2,
                found: len,
            });
        }
        let mut seen = BTreeSet::new();
        for s in &sequences {
            if s.len() != len {
                return Err(Error::SequenceLength {
                    expected: len,
                    found: s.len(),
                });
            }
            if !seen.insert(s.cell) {
                return Err(Error::DuplicateCell(s.cell));
            }
        }
        Ok(SequenceSet {
            sequences,
            len,
            includes_all_nc,
        })
    }

    pub fn sequences(&self) -> &[StateSequence] {
        &self.sequences
    }

    /// Common sequence length (number of years).
    pub fn seq_len(&self) -> usize {
        self.len
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Whether never-violent cells were kept.
    pub fn includes_all_nc(&self) -> bool {
        self.includes_all_nc
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        self.sequences.iter().map(|s| s.cell)
    }
}

/// One sequence per grid cell, in row-major cell order.
///
/// With `drop_never_violent`, cells that stay NC for the whole span are left
/// out; they form the implicit never-conflict class.
pub fn extract_sequences(field: &StateField, drop_never_violent: bool) -> Result<SequenceSet> {
    let sequences = field
        .grid()
        .cells()
        .map(|cell| StateSequence::new(cell, field.series(cell).to_vec()))
        .filter(|s| !(drop_never_violent && s.is_never_violent()))
        .collect();
    SequenceSet::new(sequences, field.n_years(), !drop_never_violent)
}

/// First-order transition counts and their row-conditional probabilities.
///
/// `probs[i][j]` is `Pr(s_{t+1} = j | s_t = i)`; rows without any outgoing
/// transition are all zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    pub counts: [[u64; N_STATES]; N_STATES],
    pub probs: [[f64; N_STATES]; N_STATES],
}

impl TransitionMatrix {
    pub fn from_counts(counts: [[u64; N_STATES]; N_STATES]) -> Self {
        let mut probs = [[0.0; N_STATES]; N_STATES];
        for (i, row) in counts.iter().enumerate() {
            let total: u64 = row.iter().sum();
            if total > 0 {
                for (j, &c) in row.iter().enumerate() {
                    probs[i][j] = c as f64 / total as f64;
                }
            }
        }
        TransitionMatrix { counts, probs }
    }

    /// Pools adjacent-pair counts over any collection of symbol runs.
    pub fn from_runs<'a>(runs: impl IntoIterator<Item = &'a [StateSymbol]>) -> Self {
        let mut counts = [[0u64; N_STATES]; N_STATES];
        for run in runs {
            for w in run.windows(2) {
                counts[w[0].index()][w[1].index()] += 1;
            }
        }
        Self::from_counts(counts)
    }

    /// Builds a matrix straight from probabilities, with no count backing.
    ///
    /// Used for planted chains and tests; counts are left at zero.
    pub fn from_probs(probs: [[f64; N_STATES]; N_STATES]) -> Result<Self> {
        for row in &probs {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(0.0..=1.0).contains(p))
                || (sum != 0.0 && (sum - 1.0).abs() > 1e-9)
            {
                return Err(Error::InvalidArgument(alloc::format!(
                    "transition row {row:?} is not stochastic"
                )));
            }
        }
        Ok(TransitionMatrix {
            counts: [[0; N_STATES]; N_STATES],
            probs,
        })
    }

    #[inline]
    pub fn p(&self, from: StateSymbol, to: StateSymbol) -> f64 {
        self.probs[from.index()][to.index()]
    }

    #[inline]
    pub fn count(&self, from: StateSymbol, to: StateSymbol) -> u64 {
        self.counts[from.index()][to.index()]
    }

    pub fn row_total(&self, from: StateSymbol) -> u64 {
        self.counts[from.index()].iter().sum()
    }

    pub fn has_support(&self, from: StateSymbol) -> bool {
        self.probs[from.index()].iter().any(|&p| p > 0.0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Transition matrix pooled over every adjacent pair of every sequence.
pub fn empirical_transition_matrix(seqs: &SequenceSet) -> TransitionMatrix {
    TransitionMatrix::from_runs(seqs.sequences().iter().map(|s| s.symbols.as_slice()))
}

/// Substitution and indel costs over the state alphabet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostMatrix {
    sub: [[f64; N_STATES]; N_STATES],
    indel: f64,
}

impl CostMatrix {
    /// Validates zero diagonal, symmetry, off-diagonal range [0, 2] and a
    /// positive finite indel cost.
    pub fn new(sub: [[f64; N_STATES]; N_STATES], indel: f64) -> Result<Self> {
        if !(indel > 0.0) || !indel.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!(
                "indel cost {indel} must be positive"
            )));
        }
        for i in 0..N_STATES {
            if sub[i][i] != 0.0 {
                return Err(Error::InvalidArgument(alloc::format!(
                    "sub[{i}][{i}] must be 0"
                )));
            }
            for j in 0..N_STATES {
                if sub[i][j] != sub[j][i] || !(0.0..=2.0).contains(&sub[i][j]) {
                    return Err(Error::InvalidArgument(alloc::format!(
                        "sub[{i}][{j}] = {} breaks symmetry or the [0, 2] range",
                        sub[i][j]
                    )));
                }
            }
        }
        Ok(CostMatrix { sub, indel })
    }

    /// Every off-diagonal substitution costs `subst`; used for unit-cost and
    /// textbook comparisons. `subst` may exceed 2 here.
    pub fn constant(subst: f64, indel: f64) -> Self {
        let mut sub = [[subst; N_STATES]; N_STATES];
        for (i, row) in sub.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        CostMatrix { sub, indel }
    }

    #[inline]
    pub fn sub(&self, a: StateSymbol, b: StateSymbol) -> f64 {
        self.sub[a.index()][b.index()]
    }

    pub fn sub_table(&self) -> &[[f64; N_STATES]; N_STATES] {
        &self.sub
    }

    #[inline]
    pub fn indel(&self) -> f64 {
        self.indel
    }

    pub fn with_indel(mut self, indel: f64) -> Result<Self> {
        if !(indel > 0.0) || !indel.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!(
                "indel cost {indel} must be positive"
            )));
        }
        self.indel = indel;
        Ok(self)
    }

    pub fn max_substitution(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..N_STATES {
            for j in 0..N_STATES {
                if i != j {
                    m = m.max(self.sub[i][j]);
                }
            }
        }
        m
    }
}

/// How the indel cost is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IndelPolicy {
    /// Fixed value.
    Fixed(f64),
    /// Fraction of the largest off-diagonal substitution cost.
    FractionOfMax(f64),
}

impl Default for IndelPolicy {
    fn default() -> Self {
        IndelPolicy::FractionOfMax(0.5)
    }
}

/// Substitution costs `2 − p(j|i) − p(i|j)` off the diagonal, zero on it.
pub fn substitution_table(tm: &TransitionMatrix) -> [[f64; N_STATES]; N_STATES] {
    let mut sub = [[0.0; N_STATES]; N_STATES];
    for i in 0..N_STATES {
        for j in i + 1..N_STATES {
            // one evaluation per pair keeps the table bitwise symmetric
            let v = 2.0 - tm.probs[i][j] - tm.probs[j][i];
            sub[i][j] = v;
            sub[j][i] = v;
        }
    }
    sub
}

/// Transition-rate substitution costs with a fixed indel cost.
pub fn substitution_costs(tm: &TransitionMatrix, indel: f64) -> Result<CostMatrix> {
    CostMatrix::new(substitution_table(tm), indel)
}

/// Transition-rate substitution costs with the indel cost picked by `policy`.
pub fn substitution_costs_with(tm: &TransitionMatrix, policy: IndelPolicy) -> Result<CostMatrix> {
    let sub = substitution_table(tm);
    let indel = match policy {
        IndelPolicy::Fixed(v) => v,
        IndelPolicy::FractionOfMax(f) => {
            let max = CostMatrix { sub, indel: 1.0 }.max_substitution();
            f * max
        }
    };
    CostMatrix::new(sub, indel)
}
