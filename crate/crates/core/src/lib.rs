//! B-tree insertion histories, historic trees, permutation sets and leaf statistics.
//!
//! The runnable programs under `examples/` walk through each capability; the
//! `btree-histories` binary exposes the same operations from the command line.

pub mod btree;
pub mod cli;
pub mod combinatorics;
pub mod enumeration;
pub mod error;
pub mod historic;
pub mod permutations;
mod serde_num;
pub mod statistics;

pub use btree::{run_permutation, BTreeShape, History, KeyedBTree, KeyedNode, ShapeNode, SplitTrace};
pub use enumeration::{estimate_rho, history_counts, GrowthEstimate, HistoryCountTable, Method};
pub use error::{Error, Result};
pub use historic::{HistoricTree, ReducedHistoricTree, Slot};
pub use statistics::{kappa, leaf_moments, monte_carlo_leaves, KappaConstant, LeafMoments};
