//! Structure-only entity alignment between two knowledge graphs by
//! potential isomorphism propagation.
//!
//! The pipeline takes two graphs, a handful of seed alignments and an initial
//! similarity matrix, then
//!
//! 1. builds a cross-graph propagation operator ([`operator::build_operator`]),
//! 2. spreads similarity with a truncated random-walk series or forward push,
//! 3. factorizes the thresholded log-proximity into embeddings,
//! 4. fuses local and global similarity and refines it for matched
//!    neighborhood consistency ([`refine`]),
//! 5. decodes one-to-one alignments and scores them ([`decode`], [`eval`]).
//!
//! [`pipeline::run`] wires the stages together; the `pipea` binary exposes it
//! on the command line.

pub mod cli;
pub mod config;
pub mod decode;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod io;
pub mod kg;
pub mod linalg;
pub mod operator;
pub mod pipeline;
pub mod refine;

pub use error::{Error, Result};
