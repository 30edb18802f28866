//! Verification suites and report plumbing behind the `crlab` binary.

pub mod config;
pub mod report;
pub mod suites;

pub use config::{Config, Format, Model};
pub use report::{Check, SuiteReport, Table};
