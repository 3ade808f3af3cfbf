//! Simulation traces: one record per commit event, and the replication
//! checker over them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::Hash32;

/// One validator committing one height.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub height: u64,
    pub validator: u32,
    pub block_hash: Hash32,
    pub state_root: Hash32,
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimTrace {
    pub records: Vec<CommitRecord>,
    /// Workload commands that could not be constructed or were refused at
    /// submission; nonzero values usually mean a malformed workload.
    pub skipped_commands: u32,
}

impl SimTrace {
    /// Highest height any validator committed.
    pub fn max_height(&self) -> u64 {
        self.records.iter().map(|r| r.height).max().unwrap_or(0)
    }

    /// One JSON object per line, one line per commit record.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

/// True iff every committed height shows exactly one block hash and one
/// state root across all validators that reported it.
pub fn verify_replication(trace: &SimTrace) -> bool {
    let mut by_height: BTreeMap<u64, (Hash32, Hash32)> = BTreeMap::new();
    for record in &trace.records {
        match by_height.get(&record.height) {
            None => {
                by_height.insert(record.height, (record.block_hash, record.state_root));
            }
            Some((block_hash, state_root)) => {
                if *block_hash != record.block_hash || *state_root != record.state_root {
                    return false;
                }
            }
        }
    }
    true
}
