//! Mapping failures to process exit codes.

use std::fmt;

/// Exit status for a successful run.
pub const EXIT_OK: u8 = 0;
/// Bad flags, configuration or parameters.
pub const EXIT_USAGE: u8 = 2;
/// Unreadable, undecodable or unwritable files.
pub const EXIT_INPUT: u8 = 3;
/// The data cannot be analysed (degenerate corpus, constant channel, ...).
pub const EXIT_NUMERIC: u8 = 4;

/// A problem with how the program was invoked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Exit code for the first recognised error in the chain.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<eigencorpus::Error>() {
            return match e {
                e if e.is_numeric() => EXIT_NUMERIC,
                eigencorpus::Error::InvalidParameter(_)
                | eigencorpus::Error::IndexOutOfRange { .. } => EXIT_USAGE,
                _ => EXIT_INPUT,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_INPUT;
        }
    }
    EXIT_INPUT
}
