//! Standard-library companion to the `bottom-share` core: CSV ingestion,
//! the Monte Carlo simulation harness, report formatting, and the command
//! implementations behind the `bottom-share` binary.

pub mod commands;
pub mod csvio;
mod error;
pub mod report;
pub mod sim;

pub use error::CliError;
