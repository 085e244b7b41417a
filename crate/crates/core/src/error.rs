use alloc::string::String;
use core::fmt;

use crate::grid::CellId;

/// Failures raised by the analysis kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// No cell-year carries any event, so there is no intensity scale.
    NoViolentCellYears,
    /// A point lies outside the declared grid.
    OutOfBounds {
        x: f64,
        y: f64,
    },
    /// Grid geometry is unusable (non-positive cell size, zero extent, ...).
    InvalidGrid(&'static str),
    /// Sequences in one set must share a length of at least two years.
    SequenceLength {
        expected: usize,
        found: usize,
    },
    DuplicateCell(CellId),
    /// The requested cluster has no members.
    EmptyCluster(u32),
    /// The cluster has members but none of them ever leaves NC.
    NoViolentSpell(u32),
    /// A cell carried by the weights has no cluster label.
    MissingLabel(CellId),
    InvalidArgument(String),
    /// The hitting-time system could not be solved although NC is reachable.
    SingularSystem {
        pivot: f64,
        state_count: usize,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NoViolentCellYears => write!(f, "no cell-year contains any event"),
            Error::OutOfBounds { x, y } => write!(f, "point ({x}, {y}) lies outside the grid"),
            Error::InvalidGrid(why) => write!(f, "invalid grid: {why}"),
            Error::SequenceLength { expected, found } => {
                write!(
                    f,
                    "sequence length {found} does not match expected {expected}"
                )
            }
            Error::DuplicateCell(c) => write!(f, "cell {c} appears more than once"),
            Error::EmptyCluster(c) => write!(f, "cluster {c} has no members"),
            Error::NoViolentSpell(c) => write!(f, "cluster {c} contains no violent spell"),
            Error::MissingLabel(c) => write!(f, "cell {c} has no cluster label"),
            Error::InvalidArgument(msg) => f.write_str(msg),
            Error::SingularSystem { pivot, state_count } => write!(
                f,
                "hitting-time system over {state_count} states is singular (pivot {pivot:e})"
            ),
        }
    }
}

impl core::error::Error for Error {}
