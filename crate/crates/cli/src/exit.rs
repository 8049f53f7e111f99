//! Exit-code contract.

use std::fmt;

/// Process exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    /// Success; for solve and verify, the certificate passed.
    Ok = 0,
    /// Hard failure.
    Error = 1,
    /// Finished, but the KKT certificate did not pass.
    Unverified = 2,
    /// Bad flags or flag values.
    Usage = 64,
    /// Malformed input file.
    Data = 65,
}

/// A flag failed validation.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// An input file could not be parsed or validated.
#[derive(Debug)]
pub struct DataError(pub String);

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

/// Maps an error to its exit status.
pub fn classify(err: &anyhow::Error) -> Exit {
    if err.downcast_ref::<UsageError>().is_some() {
        Exit::Usage
    } else if err.downcast_ref::<DataError>().is_some() {
        Exit::Data
    } else {
        Exit::Error
    }
}
