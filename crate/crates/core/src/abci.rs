//! Application boundary: check/deliver/commit/query entry points between
//! consensus and the ledger, plus the HTTP-facing request dispatch.
//!
//! Checking never mutates committed state; delivering applies a transition;
//! committing seals the delivered transactions into a block and re-anchors
//! the mempool. Queries answer from the last committed snapshot.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::batch::precheck_transactions;
use crate::block::Block;
use crate::error::Rejection;
use crate::genesis::{build_genesis, Genesis, GenesisError};
use crate::ledger::LedgerState;
use crate::tx::{canonical_decode, tx_hash, validate_structure, OutPoint, Transaction};
use crate::types::Hash32;

/// Stable response code registry:
///
/// | code | class |
/// |------|-------------------------------------------------------------|
/// | 0    | ok |
/// | 1    | malformed (undecodable, structural, misplaced kind) |
/// | 2    | unknown outpoint |
/// | 3    | bad signature |
/// | 4    | value mismatch, duplicate or conflicting spends, excess repayment |
/// | 5    | replay |
/// | 6    | unauthorized issuer |
/// | 7    | insufficient funding |
/// | 8    | unknown debt |
pub fn reject_code(rejection: &Rejection) -> u32 {
    match rejection {
        Rejection::Malformed(_) => 1,
        Rejection::UnknownOutpoint(_) => 2,
        Rejection::BadSignature { .. } => 3,
        Rejection::ValueMismatch { .. }
        | Rejection::DuplicateInput(_)
        | Rejection::MempoolConflict(_)
        | Rejection::ExcessRepayment { .. } => 4,
        Rejection::Replay(_) => 5,
        Rejection::UnauthorizedIssuer => 6,
        Rejection::InsufficientFunding { .. } => 7,
        Rejection::UnknownDebt(_) => 8,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AbciResponse {
    pub code: u32,
    pub payload: Value,
    pub log: String,
}

impl AbciResponse {
    pub fn ok(payload: Value) -> AbciResponse {
        AbciResponse {
            code: 0,
            payload,
            log: String::new(),
        }
    }

    pub fn error(code: u32, log: impl Into<String>) -> AbciResponse {
        AbciResponse {
            code,
            payload: Value::Null,
            log: log.into(),
        }
    }

    pub fn reject(rejection: &Rejection) -> AbciResponse {
        AbciResponse::error(reject_code(rejection), rejection.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockError {
    #[error("block height {got} does not extend height {have}")]
    WrongHeight { have: u64, got: u64 },
    #[error("block does not link to the committed chain")]
    BadLink,
    #[error("block merkle root does not match its transactions")]
    BadMerkleRoot,
    #[error("transaction {index} invalid: {reason}")]
    InvalidTx { index: usize, reason: Rejection },
}

/// Validated transactions waiting for block inclusion, in admission order.
///
/// Admission order respects dependencies by construction: a transaction
/// spending a pending output is only admitted once its parent is pending, so
/// proposals can take a prefix as-is. A pending snapshot of the ledger backs
/// conflict checks; outpoints claimed by pending transactions are tracked to
/// tell conflicts apart from unknown outpoints.
#[derive(Debug, Clone)]
pub struct Mempool {
    order: Vec<Hash32>,
    txs: BTreeMap<Hash32, Transaction>,
    claimed: BTreeSet<OutPoint>,
    pending: LedgerState,
}

impl Mempool {
    fn new(committed: &LedgerState) -> Mempool {
        Mempool {
            order: Vec::new(),
            txs: BTreeMap::new(),
            claimed: BTreeSet::new(),
            pending: committed.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn contains(&self, hash: &Hash32) -> bool {
        self.txs.contains_key(hash)
    }

    /// Committed state with all pending transactions applied.
    pub fn pending_state(&self) -> &LedgerState {
        &self.pending
    }

    fn try_admit(&mut self, tx: Transaction) -> Result<Hash32, Rejection> {
        validate_structure(&tx)?;
        if let Err(err) = self.pending.apply_transaction(&tx) {
            return Err(match err {
                Rejection::UnknownOutpoint(op) if self.claimed.contains(&op) => {
                    Rejection::MempoolConflict(op)
                }
                other => other,
            });
        }
        let hash = tx_hash(&tx).expect("applied transaction encodes");
        self.claimed
            .extend(tx.inputs.iter().filter_map(|input| input.outpoint()));
        self.order.push(hash);
        self.txs.insert(hash, tx);
        Ok(hash)
    }

    /// Re-anchors on a new committed state, evicting committed transactions
    /// and anything the new state invalidates.
    fn rebuild(&mut self, committed: &LedgerState) {
        let old_order = std::mem::take(&mut self.order);
        let mut old_txs = std::mem::take(&mut self.txs);
        self.claimed.clear();
        self.pending = committed.clone();
        for hash in old_order {
            let tx = old_txs.remove(&hash).expect("order and map agree");
            if committed.applied.contains(&hash) {
                continue;
            }
            if self.pending.apply_transaction(&tx).is_ok() {
                self.claimed
                    .extend(tx.inputs.iter().filter_map(|input| input.outpoint()));
                self.order.push(hash);
                self.txs.insert(hash, tx);
            }
        }
    }

    /// The first `max` pending transactions in admission order.
    fn proposal(&self, max: usize) -> Vec<Transaction> {
        self.order
            .iter()
            .take(max)
            .map(|hash| self.txs[hash].clone())
            .collect()
    }
}

/// One node's application: committed state, block log and mempool.
#[derive(Debug, Clone)]
pub struct App {
    genesis: Genesis,
    state: LedgerState,
    blocks: Vec<Block>,
    mempool: Mempool,
    delivered: Vec<Transaction>,
}

impl App {
    pub fn new(genesis: Genesis) -> Result<App, GenesisError> {
        let (state, genesis_block) = build_genesis(&genesis)?;
        let mempool = Mempool::new(&state);
        Ok(App {
            genesis,
            state,
            blocks: vec![genesis_block],
            mempool,
            delivered: Vec::new(),
        })
    }

    /// Replays a committed block log from genesis; the durable log is the
    /// source of truth after a restart, memory pools are not.
    pub fn replay(genesis: Genesis, blocks: &[Block]) -> Result<App, GenesisError> {
        let mut app = App::new(genesis)?;
        for block in blocks.iter().skip(1) {
            app.apply_block(block)
                .unwrap_or_else(|e| panic!("committed log replays cleanly: {e}"));
        }
        Ok(app)
    }

    pub fn genesis(&self) -> &Genesis {
        &self.genesis
    }

    pub fn committed(&self) -> &LedgerState {
        &self.state
    }

    pub fn pending_state(&self) -> &LedgerState {
        self.mempool.pending_state()
    }

    pub fn mempool(&self) -> &Mempool {
        &self.mempool
    }

    pub fn height(&self) -> u64 {
        self.state.height
    }

    pub fn next_height(&self) -> u64 {
        self.blocks.len() as u64
    }

    pub fn block(&self, height: u64) -> Option<&Block> {
        self.blocks.get(height as usize)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn last_block_hash(&self) -> Hash32 {
        self.blocks.last().expect("genesis block present").block_hash()
    }

    /// Validates a transaction and admits it to the mempool. Never touches
    /// committed state.
    pub fn check_tx(&mut self, bytes: &[u8]) -> AbciResponse {
        let tx = match canonical_decode(bytes) {
            Ok(tx) => tx,
            Err(err) => return AbciResponse::error(1, err.to_string()),
        };
        match self.check_tx_decoded(tx) {
            Ok(hash) => AbciResponse::ok(json!({ "tx_hash": hash.to_hex() })),
            Err(rejection) => AbciResponse::reject(&rejection),
        }
    }

    pub fn check_tx_decoded(&mut self, tx: Transaction) -> Result<Hash32, Rejection> {
        self.mempool.try_admit(tx)
    }

    /// Applies a transition; called only in block order between commits.
    pub fn deliver_tx(&mut self, bytes: &[u8]) -> AbciResponse {
        let tx = match canonical_decode(bytes) {
            Ok(tx) => tx,
            Err(err) => return AbciResponse::error(1, err.to_string()),
        };
        match self.deliver_tx_decoded(tx) {
            Ok(hash) => AbciResponse::ok(json!({ "tx_hash": hash.to_hex() })),
            Err(rejection) => AbciResponse::reject(&rejection),
        }
    }

    /// Invalid transactions leave the state untouched and report why.
    pub fn deliver_tx_decoded(&mut self, tx: Transaction) -> Result<Hash32, Rejection> {
        validate_structure(&tx)?;
        self.state.apply_transaction(&tx)?;
        let hash = tx_hash(&tx).expect("applied transaction encodes");
        self.delivered.push(tx);
        Ok(hash)
    }

    /// Seals delivered transactions into the next block, bumps the height,
    /// evicts committed and conflicting mempool entries, and returns the new
    /// state root.
    pub fn commit(&mut self, proposer: u32) -> Hash32 {
        let height = self.next_height();
        let block = Block::assemble(
            height,
            self.last_block_hash(),
            proposer,
            std::mem::take(&mut self.delivered),
        );
        self.state.height = height;
        self.blocks.push(block);
        self.mempool.rebuild(&self.state);
        self.state.state_root()
    }

    /// Block proposal from the mempool prefix.
    pub fn propose(&self, proposer: u32, max_txs: usize) -> Block {
        Block::assemble(
            self.next_height(),
            self.last_block_hash(),
            proposer,
            self.mempool.proposal(max_txs),
        )
    }

    /// Full block validation: linkage, Merkle commitment, then every
    /// transaction against this node's own state, sequentially on a scratch
    /// copy. Signature checks run batched up front.
    pub fn validate_block(&self, block: &Block) -> Result<(), BlockError> {
        if block.height != self.next_height() {
            return Err(BlockError::WrongHeight {
                have: self.height(),
                got: block.height,
            });
        }
        if block.prev_hash != self.last_block_hash() {
            return Err(BlockError::BadLink);
        }
        if !block.root_matches() {
            return Err(BlockError::BadMerkleRoot);
        }
        precheck_transactions(&block.txs)
            .map_err(|(index, reason)| BlockError::InvalidTx { index, reason })?;
        let mut scratch = self.state.clone();
        for (index, tx) in block.txs.iter().enumerate() {
            scratch
                .apply_assuming_signatures(tx)
                .map_err(|reason| BlockError::InvalidTx { index, reason })?;
        }
        Ok(())
    }

    /// Validates and commits a foreign block; returns the new state root.
    pub fn apply_block(&mut self, block: &Block) -> Result<Hash32, BlockError> {
        self.validate_block(block)?;
        for tx in &block.txs {
            self.state
                .apply_assuming_signatures(tx)
                .expect("block validated");
            self.delivered.push(tx.clone());
        }
        let root = self.commit(block.proposer);
        debug_assert_eq!(
            self.blocks.last().expect("just pushed").block_hash(),
            block.block_hash(),
            "rebuilt block must equal the committed one",
        );
        Ok(root)
    }

    /// Drains the whole mempool into one immediately committed block; the
    /// single-node HTTP server runs on this.
    pub fn commit_pending(&mut self, proposer: u32) -> Hash32 {
        for tx in self.mempool.proposal(usize::MAX) {
            self.deliver_tx_decoded(tx)
                .expect("pending transactions replay against committed state in order");
        }
        self.commit(proposer)
    }

    /// Read-only queries over the last committed snapshot.
    pub fn query(&self, path: &str) -> AbciResponse {
        let parts: Vec<&str> = path.trim_matches('/').split('/').collect();
        match parts.as_slice() {
            ["status"] => AbciResponse::ok(json!({
                "height": self.height(),
                "state_root": self.state.state_root().to_hex(),
            })),
            ["balance", owner] => match Hash32::from_hex(owner) {
                Some(owner) => {
                    let utxos: Vec<Value> = self
                        .state
                        .utxos_of(&owner)
                        .into_iter()
                        .map(|(op, amount)| {
                            json!({
                                "tx_hash": op.tx_hash.to_hex(),
                                "index": op.index,
                                "amount": amount.0,
                            })
                        })
                        .collect();
                    AbciResponse::ok(json!({
                        "balance": self.state.balance_of(&owner).0,
                        "utxos": utxos,
                    }))
                }
                None => AbciResponse::error(1, "malformed owner hash"),
            },
            ["debt", "aggregate"] => AbciResponse::ok(json!(self.state.aggregate_debt().0)),
            ["debt", "creditor", creditor] => match Hash32::from_hex(creditor) {
                Some(creditor) => {
                    let entries = self.state.debts_of_creditor(&creditor);
                    AbciResponse::ok(serde_json::to_value(entries).expect("entries serialize"))
                }
                None => AbciResponse::error(1, "malformed creditor hash"),
            },
            ["debt", "entry", odt_hash] => match Hash32::from_hex(odt_hash) {
                Some(hash) => match self.state.debts.get(&hash) {
                    Some(entry) => {
                        AbciResponse::ok(serde_json::to_value(entry).expect("entry serializes"))
                    }
                    None => AbciResponse::reject(&Rejection::UnknownDebt(hash)),
                },
                None => AbciResponse::error(1, "malformed debt hash"),
            },
            ["block", height] => match height.parse::<u64>() {
                Ok(height) => match self.block(height) {
                    Some(block) => {
                        AbciResponse::ok(serde_json::to_value(block).expect("block serializes"))
                    }
                    None => AbciResponse::error(1, format!("no block at height {height}")),
                },
                Err(_) => AbciResponse::error(1, "malformed height"),
            },
            _ => AbciResponse::error(1, format!("unknown path {path}")),
        }
    }

    /// HTTP-style dispatch: `POST /tx` with a hex body feeds the mempool,
    /// everything else is a read-only query.
    pub fn handle_http(&mut self, method: &str, path: &str, body: &str) -> AbciResponse {
        match (method, path.trim_end_matches('/')) {
            ("POST", "/tx") => match hex::decode(body.trim()) {
                Ok(bytes) => self.check_tx(&bytes),
                Err(_) => AbciResponse::error(1, "transaction body must be hex"),
            },
            ("GET", _) => self.query(path),
            _ => AbciResponse::error(1, format!("unsupported request {method} {path}")),
        }
    }
}
