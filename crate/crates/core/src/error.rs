//! Error types shared across the ledger stack.

use thiserror::Error;

use crate::tx::OutPoint;
use crate::types::Hash32;

/// Canonical wire-format encode/decode failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("list of {0} entries exceeds the 2^16 encoding limit")]
    TooManyEntries(usize),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("{0} trailing bytes after transaction")]
    TrailingBytes(usize),
    #[error("invalid kind tag byte {0}")]
    InvalidKind(u8),
}

/// Why a transaction was refused, by validation or by the mempool.
///
/// Every variant maps to exactly one stable response code; see
/// [`crate::abci::reject_code`] for the registry.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("malformed transaction: {0}")]
    Malformed(String),
    #[error("input references unknown outpoint {0}")]
    UnknownOutpoint(OutPoint),
    #[error("unlock verification failed on input {input}")]
    BadSignature { input: usize },
    #[error("value mismatch: inputs {inputs} != outputs {outputs}")]
    ValueMismatch { inputs: u64, outputs: u64 },
    #[error("outpoint {0} referenced by more than one input")]
    DuplicateInput(OutPoint),
    #[error("outpoint {0} already claimed by a pending transaction")]
    MempoolConflict(OutPoint),
    #[error("repayment of {paid} exceeds remaining debt {remaining}")]
    ExcessRepayment { remaining: u64, paid: u64 },
    #[error("transaction {0} already applied")]
    Replay(Hash32),
    #[error("issuer key is not in the genesis issuer set")]
    UnauthorizedIssuer,
    #[error("funding of {available} is insufficient for {needed}")]
    InsufficientFunding { needed: u64, available: u64 },
    #[error("no outstanding debt matches {0}")]
    UnknownDebt(Hash32),
}

/// Client-side transaction construction failures.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("no outstanding debt entry {0}")]
    UnknownDebt(Hash32),
    #[error("available funds {available} cannot cover {needed}")]
    InsufficientFunds { needed: u64, available: u64 },
    #[error("funding outpoint {0} is not owned by the payer")]
    NotOwned(OutPoint),
    #[error("funding outpoint {0} does not exist")]
    UnknownOutpoint(OutPoint),
    #[error("at least one output is required")]
    EmptyOutputs,
    #[error("loan type must be nonzero")]
    ZeroLoanType,
    #[error("amount must be positive")]
    ZeroAmount,
    #[error("amount arithmetic overflowed 64 bits")]
    AmountOverflow,
    #[error("amount equals the remaining debt of {remaining}; use a full repayment")]
    FullRepaymentRequired { remaining: u64 },
    #[error("amount does not equal the remaining debt of {remaining}; use a partial repayment")]
    PartialRepaymentRequired { remaining: u64 },
    #[error("issuer key is not in the issuer set")]
    UnauthorizedIssuer,
    #[error("input index {0} out of range")]
    InvalidInputIndex(usize),
    #[error(transparent)]
    Codec(#[from] CodecError),
}
