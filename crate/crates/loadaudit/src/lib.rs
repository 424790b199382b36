//! File formats, audit orchestration and report tables for the `loadaudit` CLI.

pub mod audit;
pub mod error;
pub mod io;
pub mod tables;

pub use audit::{run_and_write, run_audit, AuditConfig, AuditOutput, AuditParams};
pub use error::{Error, Result};
