//! File formats, reports, evaluation suites and command implementations for
//! the `platerange` binary.

pub mod commands;
pub mod error;
pub mod eval;
pub mod pfm;
pub mod pnm;
pub mod profile;
pub mod report;

pub use error::{CliError, Result};
