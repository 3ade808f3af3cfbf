//! A permissioned UTXO ledger that carries debt as well as credit.
//!
//! Credit is the usual unspent transaction output. Debt is the mirror image:
//! a transaction input that has not been funded yet. Permissioned issuers
//! mint debtor UTXOs with debt transactions; the unpaid obligation lives in
//! a replicated debt pool as an outstanding-debt entry until repayments,
//! full or partial, drain it. The aggregate of the debt pool is public while
//! individual loans stay pseudonymous, since one loan may be split across
//! any number of outputs.
//!
//! The crate provides the transaction model and wire format ([`tx`]), the
//! replicated ledger state ([`ledger`]), debt issuance and repayment
//! construction ([`debt`]), the check/deliver/commit/query application
//! boundary ([`abci`]), and a deterministic simulated replication network
//! ([`sim`]) for consensus experiments.
//!
//! Batch signature verification and Merkle hashing run data-parallel under
//! the default `parallel` feature and sequentially without it; results are
//! identical either way.

pub mod abci;
pub mod batch;
pub mod block;
pub mod debt;
pub mod error;
pub mod genesis;
pub mod ledger;
pub mod merkle;
pub mod sim;
pub mod tx;
pub mod types;

pub use abci::{reject_code, AbciResponse, App};
pub use block::Block;
pub use error::{BuildError, CodecError, Rejection};
pub use genesis::Genesis;
pub use ledger::{DebtPool, LedgerState, OutstandingDebtEntry, UtxoPool};
pub use tx::{OutPoint, Transaction, TxInput, TxKind, TxOutput};
pub use types::{Amount, Hash32, Keypair, PubKey, Signature};
