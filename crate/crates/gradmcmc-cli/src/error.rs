//! Error class for the binary, carrying the process exit code.
//!
//! Three classes cover every failure: bad configuration (the user can fix
//! the config file or flags), infeasible analysis (the request is coherent
//! but has no closed form or exceeds enumeration limits), and runtime
//! failures (IO, numerics). Library errors are sorted into these classes at
//! the point where they surface.

use gradmcmc::Error as LibError;

/// Failure modes of a subcommand, ordered by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The configuration or flags were invalid; exits with code 2.
    #[error("{0}")]
    Config(String),

    /// The requested analysis is not computable as posed; exits with code 3.
    #[error("{0}")]
    Infeasible(LibError),

    /// IO or numerical failure while executing a valid request; exits 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }
}

/// Sorts a library error into the exit-code class it belongs to.
///
/// Parameter and shape problems are configuration mistakes; missing closed
/// forms and blown enumeration caps are infeasibilities whose messages are
/// surfaced verbatim; everything else (numerics, reducible chains) is a
/// runtime failure.
pub fn classify(e: LibError) -> CliError {
    match e {
        LibError::InvalidParameter(_)
        | LibError::DimensionMismatch { .. }
        | LibError::InvalidEmbeddingTable(_)
        | LibError::TokenOutOfRange { .. }
        | LibError::NoLegalMove => CliError::Config(e.to_string()),
        LibError::InfeasibleIntegral { .. }
        | LibError::EnumerationCapExceeded { .. }
        | LibError::UnsupportedKernel(_)
        | LibError::UnsupportedModel(_) => CliError::Infeasible(e),
        _ => CliError::Runtime(e.to_string()),
    }
}

/// Shorthand for a configuration error built from a library error.
pub fn config_err(e: LibError) -> CliError {
    CliError::Config(e.to_string())
}
