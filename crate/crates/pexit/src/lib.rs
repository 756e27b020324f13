//! File formats, parallel execution and the experiment runner around
//! [`pexit_core`].
//!
//! The core crate holds the models and the evaluation protocol and never
//! touches the file system. This crate reads and writes records, models,
//! configs and report tables, runs work on a thread pool, and wires the
//! whole pipeline together for the `pexit` command.

pub mod config;
pub mod error;
pub mod experiment;
pub mod models;
pub mod pool;
pub mod records;
pub mod report;
pub mod tables;

pub use config::{ExperimentConfig, GammaChoice, Source};
pub use error::{Error, Result};
pub use experiment::{run_experiment, Outcome};
pub use pexit_core;
pub use pool::Pool;
