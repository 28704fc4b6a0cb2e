// Vertex-indexed loops and NaN-rejecting negated comparisons are intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytics;
pub mod engine;
pub mod enumerate;
pub mod error;
pub mod exact;
pub mod generators;
pub mod graph;
pub mod stats;

pub use error::{Error, Result};
pub use graph::{Digraph, Part};
