//! Broadcast k-colouring model on Galton-Watson trees.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every piece of the
//! toolkit that does not touch the filesystem or spawn threads:
//!
//! - [`distributions`]: offspring distributions with exact tails.
//! - [`thresholds`]: the integer searches for `Δ₊` and `Δ₋` and the closed-form bounds.
//! - [`trees`]: truncated Galton-Watson trees, mixing and freezable roots, and the
//!   exact subtree laws used to sample structural statistics of very large trees.
//! - [`colouring`]: broadcast sampling, the disagreement coupling, exact root
//!   marginals and frozen colour sets.
//! - [`estimators`]: Monte Carlo estimators with seed-stable parallel reduction.
//! - [`oracle`]: brute-force ground truth on tiny trees.
//!
//! Colours are 0-indexed throughout: colour `c` here is colour `c + 1` in the
//! usual `{1, …, k}` notation.
#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod colouring;
pub mod distributions;
pub mod estimators;
pub mod math;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod thresholds;
pub mod trees;

pub use colouring::{AllowedSets, Boundary, Colouring, ColouringError, Marginal};
pub use distributions::{DistError, OffspringDistribution, OffspringKind, TailSide};
pub use estimators::{Executor, Sequential};
pub use trees::{NodeFlags, Tree, TreeError};
