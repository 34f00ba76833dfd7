//! Experiment harness for bandit-driven antenna state selection under
//! three-user interference alignment: configuration, parallel sweeps, CSV
//! output and the `iabandit` command line.

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;
pub mod sweep;

pub use config::{ExperimentKind, ExperimentSpec, Mode, Reward};
pub use experiments::{run_experiment, ExperimentOutput, Tables};
