//! Pipeline stages behind the `ratcov` command.

pub mod config;
pub mod error;
pub mod pipeline;

pub use config::RunConfig;
pub use error::CliError;
