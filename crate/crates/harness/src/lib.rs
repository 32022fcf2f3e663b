//! Experiment harness: configuration, seeded sweeps over dataset sizes and
//! methods, aggregation and output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod stats;
pub mod sweep;

pub use config::{EnvKind, EnvSpec, ExperimentConfig, Method, Partial};
pub use stats::{aggregate, cvar, Aggregate};
pub use sweep::{run_sweep, RunError, RunRecord, SweepOutput};
