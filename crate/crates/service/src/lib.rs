//! Command-line entry points and the HTTP API that serves computed maps to
//! the explorer UI.

pub mod cli;
pub mod compare;
pub mod config;
pub mod embedder;
pub mod frames;
pub mod server;

use std::fmt;

/// A problem with the invocation rather than the data. The binary exits
/// with status 2 for these and 1 for every other failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}
