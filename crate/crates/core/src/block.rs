//! Blocks: ordered transactions under a Merkle commitment.

use serde::{Deserialize, Serialize};

use crate::merkle::merkle_root;
use crate::tx::{tx_hash, Transaction};
use crate::types::{sha256, Hash32};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub height: u64,
    /// Hash of the committed block at height − 1; all zeros at genesis.
    pub prev_hash: Hash32,
    /// Ordinal of the proposing validator.
    pub proposer: u32,
    /// Merkle root over the transaction hashes; all zeros for empty blocks.
    pub merkle_root: Hash32,
    pub txs: Vec<Transaction>,
}

impl Block {
    /// Assembles a block, computing the Merkle commitment over `txs`.
    pub fn assemble(height: u64, prev_hash: Hash32, proposer: u32, txs: Vec<Transaction>) -> Block {
        let merkle_root = txs_merkle_root(&txs);
        Block {
            height,
            prev_hash,
            proposer,
            merkle_root,
            txs,
        }
    }

    /// Header hash: height, previous hash, proposer and Merkle root. The
    /// transactions are committed through the root.
    pub fn block_hash(&self) -> Hash32 {
        let mut buf = Vec::with_capacity(76);
        buf.extend_from_slice(&self.height.to_le_bytes());
        buf.extend_from_slice(&self.prev_hash.0);
        buf.extend_from_slice(&self.proposer.to_le_bytes());
        buf.extend_from_slice(&self.merkle_root.0);
        sha256(&buf)
    }

    /// True iff the carried root matches the carried transactions.
    pub fn root_matches(&self) -> bool {
        self.merkle_root == txs_merkle_root(&self.txs)
    }
}

/// Merkle root over transaction hashes; empty blocks commit to all zeros.
pub fn txs_merkle_root(txs: &[Transaction]) -> Hash32 {
    if txs.is_empty() {
        return Hash32::ZERO;
    }
    let leaves: Vec<Hash32> = txs
        .iter()
        .map(|tx| tx_hash(tx).expect("block transactions encode"))
        .collect();
    merkle_root(&leaves).expect("non-empty leaves")
}
