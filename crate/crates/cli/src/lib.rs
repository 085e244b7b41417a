//! File formats, synthetic scenarios and the staged command-line pipeline
//! built on `conflict_seq_core`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod formats;
pub mod ingest;
pub mod manifest;
pub mod parallel;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
