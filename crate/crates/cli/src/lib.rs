//! Scenario files, solver dispatch and reports for the `clearnet` binary.

pub mod commands;
pub mod error;
pub mod generate;
pub mod report;
pub mod scenario;

pub use commands::{run_command, Command, Flags};
pub use error::{CliError, Result};
pub use report::{Format, Report};
pub use scenario::{ingest, Scenario};
