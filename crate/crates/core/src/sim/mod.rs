//! Simulated state-machine-replication network.
//!
//! Stands in for a real BFT stack: a deterministic discrete-tick event loop
//! drives mempool gossip, round-robin block proposals, two-phase voting with
//! a >2/3 precommit quorum, and block commitment across a set of validator
//! nodes. Message delays, drops and crash/restart faults come from a seeded
//! generator, so a (config, workload) pair always replays to the bit-same
//! trace.
//!
//! Fault model: crash faults only. Nodes never equivocate; a crashed node
//! loses its mempool and in-memory state and rebuilds by replaying its
//! durable block log, keeping its own votes (the consensus write-ahead log)
//! so it cannot contradict itself after restart.

mod config;
mod net;
mod node;
mod trace;

pub use config::{ClientCommand, ClientOp, CrashEvent, SimAllocation, SimConfig, SimGenesis, SimKeyring};
pub use net::{run_simulation, vote_and_commit, RoundOutcome, SimNetwork};
pub use node::SimNode;
pub use trace::{verify_replication, CommitRecord, SimTrace};

use thiserror::Error;

use crate::block::Block;
use crate::tx::Transaction;
use crate::types::Hash32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("validator {got} is not the proposer for height {height} (expected {expected})")]
    NotProposer { height: u64, expected: u32, got: u32 },
    #[error("validator has not committed height {0} yet")]
    NotReady(u64),
    #[error("bad simulation config: {0}")]
    Config(String),
    #[error("genesis: {0}")]
    Genesis(#[from] crate::genesis::GenesisError),
}

/// Messages exchanged between validators.
#[derive(Debug, Clone)]
pub enum Msg {
    /// Mempool gossip of a checked transaction.
    Tx(Transaction),
    Proposal(Block),
    Prevote {
        height: u64,
        /// None is a nil vote: the proposal failed validation.
        block_hash: Option<Hash32>,
        voter: u32,
    },
    Precommit {
        height: u64,
        block_hash: Option<Hash32>,
        voter: u32,
    },
    /// Catch-up: ask a peer for its committed block at a height.
    BlockRequest { height: u64 },
    BlockReply(Block),
    /// Periodic status gossip; lagging nodes learn they are behind and
    /// leading peers push the next block they need.
    Heartbeat { next_height: u64 },
}

/// Outbound traffic emitted by a node, routed by the network.
#[derive(Debug, Clone)]
pub enum Outgoing {
    Broadcast(Msg),
    Direct(u32, Msg),
}
