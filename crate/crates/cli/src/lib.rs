//! Shared pieces behind the wallet, node and simulator binaries: the JSON
//! keystore, the node HTTP client, and the wallet-side transaction
//! assembly. The binaries are thin shells over these functions so tests can
//! exercise the same code paths directly.

pub mod client;
pub mod keystore;
pub mod wallet_ops;

use thiserror::Error;

/// Process exit codes shared by the binaries: 0 success, 1 usage or local
/// error, 2 transport error, 3 node rejection.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("node rejected (code {code}): {log}")]
    NodeReject { code: u32, log: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Transport(_) => 2,
            CliError::NodeReject { .. } => 3,
        }
    }

    pub fn usage(err: impl std::fmt::Display) -> CliError {
        CliError::Usage(err.to_string())
    }
}

impl From<utxo_debt_core::BuildError> for CliError {
    fn from(err: utxo_debt_core::BuildError) -> CliError {
        CliError::Usage(err.to_string())
    }
}
