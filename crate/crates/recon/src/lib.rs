//! Experiment runner for the broadcast colouring model on Galton-Watson
//! trees: configuration, distribution specs, file formats, a threaded
//! executor, and the experiments behind the `recon` command.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dist_spec;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod formats;

pub use config::{Experiment, ExperimentConfig, RawConfig};
pub use error::RunError;
pub use exec::Threaded;
pub use experiments::{run, RunReport};
