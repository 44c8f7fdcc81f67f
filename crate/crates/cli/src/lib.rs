//! The `beziergan` command-line workflow (dataset, train, generate,
//! evaluate) and the HTTP inference service.

pub mod args;
pub mod commands;
pub mod design;
pub mod export;
pub mod service;

use std::fmt;

/// Errors caused by the invocation itself; the binary exits with 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Shorthand for returning a [`UsageError`] through `anyhow`.
pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}
