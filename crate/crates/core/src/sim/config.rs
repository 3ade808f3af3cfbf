//! Simulation configuration, client workload commands and deterministic
//! key derivation for named actors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SimError;
use crate::genesis::{Allocation, Genesis};
use crate::types::{Amount, Keypair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrashEvent {
    pub validator: u32,
    pub crash_tick: u64,
    /// None crashes the validator for the rest of the run.
    #[serde(default)]
    pub restart_tick: Option<u64>,
}

/// Named genesis: actors are referred to by name and their keys derived
/// deterministically from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SimGenesis {
    #[serde(default)]
    pub issuers: Vec<String>,
    #[serde(default)]
    pub allocations: Vec<SimAllocation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimAllocation {
    pub name: String,
    pub amount: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub validator_count: u32,
    pub seed: u64,
    /// Inclusive tick bounds on message latency; effective delays are at
    /// least one tick.
    pub delay_range: (u64, u64),
    /// Per-message, per-recipient drop probability in [0, 1). Liveness runs
    /// should keep the expected drop share well under a third; this is
    /// documented, not enforced.
    pub drop_probability: f64,
    #[serde(default)]
    pub crash_schedule: Vec<CrashEvent>,
    /// Minimum ticks between a validator's commit and its next proposal.
    pub block_interval: u64,
    pub max_block_txs: usize,
    /// Hard stop for the event loop.
    pub max_ticks: u64,
    /// Optional early stop once every live validator reaches this height.
    #[serde(default)]
    pub target_height: Option<u64>,
    #[serde(default)]
    pub genesis: SimGenesis,
}

impl SimConfig {
    pub fn check(&self) -> Result<(), SimError> {
        if self.validator_count == 0 {
            return Err(SimError::Config("validator_count must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.drop_probability) {
            return Err(SimError::Config("drop_probability must be in [0, 1)".into()));
        }
        if self.delay_range.0 > self.delay_range.1 {
            return Err(SimError::Config("delay_range minimum exceeds maximum".into()));
        }
        if self.max_block_txs == 0 {
            return Err(SimError::Config("max_block_txs must be at least 1".into()));
        }
        for event in &self.crash_schedule {
            if event.validator >= self.validator_count {
                return Err(SimError::Config(format!(
                    "crash schedule names validator {} of {}",
                    event.validator, self.validator_count
                )));
            }
            if matches!(event.restart_tick, Some(r) if r <= event.crash_tick) {
                return Err(SimError::Config("restart_tick must follow crash_tick".into()));
            }
        }
        Ok(())
    }

    /// Concrete genesis file content for this configuration: validator keys
    /// by ordinal plus the named issuers and allocations.
    pub fn build_genesis(&self, keyring: &mut SimKeyring) -> Genesis {
        let validators = (0..self.validator_count)
            .map(|i| keyring.validator(i).public())
            .collect();
        let issuers = self
            .genesis
            .issuers
            .iter()
            .map(|name| keyring.named(name).public())
            .collect();
        let allocations = self
            .genesis
            .allocations
            .iter()
            .map(|a| Allocation {
                pubkey_hash: keyring.named(&a.name).public_hash(),
                amount: Amount(a.amount),
            })
            .collect();
        Genesis {
            validators,
            issuers,
            allocations,
        }
    }
}

/// One client action scheduled at a tick, submitted through one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientCommand {
    pub tick: u64,
    /// Ordinal of the node the client talks to.
    #[serde(default)]
    pub node: u32,
    #[serde(flatten)]
    pub op: ClientOp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientOp {
    Transfer {
        from: String,
        to: String,
        amount: u64,
    },
    Issue {
        issuer: String,
        outputs: Vec<SimAllocation>,
        loan_type: u16,
        /// Label later repay commands use to reference this loan.
        id: String,
    },
    Repay {
        payer: String,
        debt_id: String,
        amount: u64,
    },
}

/// Deterministic keys for named actors and validator ordinals: every key is
/// a pure function of (seed, name), so traces replay bit-identically.
#[derive(Debug, Clone)]
pub struct SimKeyring {
    seed: u64,
    keys: BTreeMap<String, Keypair>,
}

impl SimKeyring {
    pub fn new(seed: u64) -> SimKeyring {
        SimKeyring {
            seed,
            keys: BTreeMap::new(),
        }
    }

    pub fn named(&mut self, name: &str) -> Keypair {
        if let Some(key) = self.keys.get(name) {
            return key.clone();
        }
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update([0u8]);
        hasher.update(name.as_bytes());
        let key = Keypair::from_seed(hasher.finalize().into());
        self.keys.insert(name.to_string(), key.clone());
        key
    }

    pub fn validator(&mut self, ordinal: u32) -> Keypair {
        self.named(&format!("validator-{ordinal}"))
    }
}
