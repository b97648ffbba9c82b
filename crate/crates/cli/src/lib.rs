//! Command implementations behind the `jumpvar` binary. Each command reads
//! its settings from a [`config::RunConfig`], writes CSV files with header
//! rows into an output directory, and records its effective settings in a
//! `key = value` sidecar.

pub mod config;
pub mod error;
pub mod estimate;
pub mod inputs;
pub mod jumpscan;
pub mod output;
pub mod signature;
pub mod simulate;
pub mod table2;

pub use config::RunConfig;
pub use error::{Failure, ResultExt};
