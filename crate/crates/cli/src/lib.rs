//! Declarative driver for parityforge simulations: run configurations,
//! sweeps, JSON reports and CSV outputs.

pub mod config;
pub mod error;
pub mod exec;
pub mod output;
pub mod report;

pub use config::RunConfig;
pub use error::CliError;
pub use report::ReportFile;

pub const SCHEMA_VERSION: &str = "1";
