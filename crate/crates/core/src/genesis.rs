//! Genesis file: validators, issuer set and initial credit allocations.
//!
//! Allocations are minted by a single coinbase transaction inside block 0,
//! the only place coinbase transactions are allowed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::block::Block;
use crate::ledger::LedgerState;
use crate::tx::{Transaction, TxInput, TxKind, TxOutput, LockingCondition, COINBASE_INDEX};
use crate::types::{Amount, Hash32, PubKey, Signature};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub pubkey_hash: Hash32,
    pub amount: Amount,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Genesis {
    pub validators: Vec<PubKey>,
    #[serde(default)]
    pub issuers: Vec<PubKey>,
    #[serde(default)]
    pub allocations: Vec<Allocation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenesisError {
    #[error("genesis parse error: {0}")]
    Parse(String),
    #[error("genesis must name at least one validator")]
    NoValidators,
    #[error("genesis allocation of zero units")]
    ZeroAllocation,
    #[error("too many allocations for one coinbase transaction")]
    TooManyAllocations,
}

impl Genesis {
    pub fn from_json(json: &str) -> Result<Genesis, GenesisError> {
        let genesis: Genesis =
            serde_json::from_str(json).map_err(|e| GenesisError::Parse(e.to_string()))?;
        genesis.check()?;
        Ok(genesis)
    }

    pub fn check(&self) -> Result<(), GenesisError> {
        if self.validators.is_empty() {
            return Err(GenesisError::NoValidators);
        }
        if self.allocations.iter().any(|a| a.amount.0 == 0) {
            return Err(GenesisError::ZeroAllocation);
        }
        if self.allocations.len() > crate::tx::MAX_LIST_LEN {
            return Err(GenesisError::TooManyAllocations);
        }
        Ok(())
    }

    /// The coinbase minting the allocations, if there are any.
    pub fn coinbase(&self) -> Option<Transaction> {
        if self.allocations.is_empty() {
            return None;
        }
        let mut tx = Transaction::new(TxKind::Coinbase);
        tx.inputs.push(TxInput {
            prev_field: Hash32::ZERO,
            output_index: COINBASE_INDEX,
            unlock_pubkey: PubKey([0u8; 32]),
            unlock_sig: Signature::ZERO,
        });
        tx.outputs = self
            .allocations
            .iter()
            .map(|a| TxOutput {
                amount: a.amount,
                lock: LockingCondition::to_key_hash(a.pubkey_hash),
            })
            .collect();
        Some(tx)
    }

    /// Total credit minted at genesis.
    pub fn allocation_total(&self) -> u128 {
        self.allocations.iter().map(|a| a.amount.0 as u128).sum()
    }
}

/// Builds the height-0 state and the genesis block.
pub fn build_genesis(genesis: &Genesis) -> Result<(LedgerState, Block), GenesisError> {
    genesis.check()?;
    let mut state = LedgerState::new(genesis.issuers.iter().copied().collect());
    let txs = match genesis.coinbase() {
        Some(coinbase) => {
            state.install_genesis_coinbase(&coinbase);
            vec![coinbase]
        }
        None => Vec::new(),
    };
    let block = Block::assemble(0, Hash32::ZERO, 0, txs);
    Ok((state, block))
}
