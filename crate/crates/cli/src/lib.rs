//! Command-line driver for `excitonwit-core`: JSON run configs, CSV result
//! files, a rayon-backed executor and the `validate` invariant suite.

pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod formats;
pub mod validate;

pub use config::RunConfig;
pub use error::CliError;
pub use exec::Parallel;
