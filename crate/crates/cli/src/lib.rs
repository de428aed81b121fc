//! Command-line front end for the discontinuous integral controller: run
//! configurations, regenerate the comparison datasets and run studies.
//!
//! The binary is `dic`; everything it does is available here so that tests
//! and other tools can drive it without spawning processes.

pub mod artifacts;
pub mod config;
mod error;
pub mod figures;
pub mod run;
pub mod study;

pub use error::CliError;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "DIC_OUTPUT_DIR";
