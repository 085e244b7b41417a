//! Allocation-only kernels for turning gridded conflict-state lattices into
//! trajectory types.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; IO, file formats and thread pools live in the
//! companion `conflict-seq` crate.
//!
//! Pipeline order, module by module:
//!
//! 1. [`grid`]: event records, the analysis grid and cell assignment.
//! 2. [`scdi`]: five-state classification of each cell-year.
//! 3. [`seqcore`]: per-cell sequences, pooled transition matrices and
//!    transition-derived substitution costs.
//! 4. [`om`]: Optimal Matching edit distances and the condensed matrix.
//! 5. [`cluster`]: Ward linkage and dendrogram cuts.
//! 6. [`chains`]: per-cluster Markov statistics, hitting times and summaries.
//! 7. [`spatial`]: contiguity weights and multitype join counts.
#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

pub mod chains;
pub mod cluster;
mod error;
pub mod grid;
pub mod om;
pub mod scdi;
pub mod seqcore;
pub mod spatial;
mod state;

pub use error::Error;
pub use grid::{CellId, CivilDate, EventRecord, EventSet, EventType, GridSpec};
pub use state::{StateSymbol, N_STATES, VIOLENT_STATES};

pub type Result<T> = core::result::Result<T, Error>;
