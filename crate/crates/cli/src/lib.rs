//! Command-line campaign driver: configuration, execution and output layout.

pub mod args;
pub mod config;
pub mod run;
pub mod store;

pub use config::{CampaignConfig, Diagnostic, Kind};
pub use run::{run, Manifest, RunError, RunSummary};
