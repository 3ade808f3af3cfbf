//! One simulated validator: application state plus consensus bookkeeping.
//!
//! Per height the node expects a proposal from the round-robin proposer,
//! prevotes once (nil if the block fails its own validation), precommits
//! once a >2/3 prevote quorum forms behind its own prevote, and commits once
//! a >2/3 precommit quorum forms and it holds the block. Lagging nodes fetch
//! committed blocks from peers. All timers retransmit, so dropped messages
//! only delay progress.

use std::collections::{BTreeMap, BTreeSet};

use super::{Msg, Outgoing, SimError};
use crate::abci::App;
use crate::block::Block;
use crate::sim::trace::CommitRecord;
use crate::tx::Transaction;
use crate::types::Hash32;

/// A vote target: Some(block hash) or nil.
type VoteTarget = Option<Hash32>;

pub struct SimNode {
    pub ordinal: u32,
    validator_count: u32,
    block_interval: u64,
    max_block_txs: usize,
    pub app: App,
    pub alive: bool,

    /// Blocks seen as proposals, by height. Retained across restarts as part
    /// of the consensus write-ahead log.
    proposals: BTreeMap<u64, Block>,
    /// Committed blocks fetched from peers, waiting to be applied in order.
    fetched: BTreeMap<u64, Block>,
    prevotes: BTreeMap<u64, BTreeMap<VoteTarget, BTreeSet<u32>>>,
    precommits: BTreeMap<u64, BTreeMap<VoteTarget, BTreeSet<u32>>>,
    /// Own votes per height; never recast, surviving restarts.
    my_prevote: BTreeMap<u64, VoteTarget>,
    my_precommit: BTreeMap<u64, VoteTarget>,
    proposed: BTreeSet<u64>,

    /// Highest height known to be committed somewhere in the network.
    known_committed: u64,
    last_commit_tick: u64,
    last_retransmit_tick: u64,
    last_request_tick: u64,
    request_rr: u32,

    /// Outbound messages drained by the network each step.
    pub out: Vec<Outgoing>,
    /// Commit events drained by the trace collector.
    pub events: Vec<CommitRecord>,
}

impl SimNode {
    pub fn new(ordinal: u32, validator_count: u32, block_interval: u64, max_block_txs: usize, app: App) -> SimNode {
        SimNode {
            ordinal,
            validator_count,
            block_interval,
            max_block_txs,
            app,
            alive: true,
            proposals: BTreeMap::new(),
            fetched: BTreeMap::new(),
            prevotes: BTreeMap::new(),
            precommits: BTreeMap::new(),
            my_prevote: BTreeMap::new(),
            my_precommit: BTreeMap::new(),
            proposed: BTreeSet::new(),
            known_committed: 0,
            last_commit_tick: 0,
            last_retransmit_tick: 0,
            last_request_tick: 0,
            request_rr: 0,
            out: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn proposer_for(&self, height: u64) -> u32 {
        (height % self.validator_count as u64) as u32
    }

    fn quorum(&self, count: usize) -> bool {
        3 * count > 2 * self.validator_count as usize
    }

    pub fn height(&self) -> u64 {
        self.app.height()
    }

    fn next_height(&self) -> u64 {
        self.app.next_height()
    }

    /// Crash: drop all in-memory application state. The block log and own
    /// votes survive as durable records.
    pub fn crash(&mut self) {
        self.alive = false;
        self.out.clear();
    }

    /// Restart: replay the durable block log from genesis; the mempool and
    /// anything delivered but uncommitted is gone.
    pub fn restart(&mut self, now: u64) {
        let blocks = self.app.blocks().to_vec();
        self.app = App::replay(self.app.genesis().clone(), &blocks)
            .expect("own committed log replays");
        self.alive = true;
        self.last_commit_tick = now;
        self.last_retransmit_tick = now;
        self.last_request_tick = now;
    }

    /// Builds this node's proposal for `height` from its mempool prefix.
    /// Refuses when the rotation says someone else proposes, or when this
    /// node has not committed the previous height.
    pub fn propose_block(&mut self, height: u64) -> Result<Block, SimError> {
        let expected = self.proposer_for(height);
        if expected != self.ordinal {
            return Err(SimError::NotProposer {
                height,
                expected,
                got: self.ordinal,
            });
        }
        if self.next_height() != height {
            return Err(SimError::NotReady(height));
        }
        Ok(self.app.propose(self.ordinal, self.max_block_txs))
    }

    pub fn on_msg(&mut self, from: u32, msg: Msg, now: u64) {
        if !self.alive {
            return;
        }
        match msg {
            Msg::Tx(tx) => self.on_tx(tx),
            Msg::Proposal(block) => self.on_proposal(block, now),
            Msg::Prevote {
                height,
                block_hash,
                voter,
            } => {
                self.note_height_evidence(height.saturating_sub(1));
                if height < self.next_height() {
                    return;
                }
                self.prevotes
                    .entry(height)
                    .or_default()
                    .entry(block_hash)
                    .or_default()
                    .insert(voter);
                self.try_advance(now);
            }
            Msg::Precommit {
                height,
                block_hash,
                voter,
            } => {
                self.note_height_evidence(height.saturating_sub(1));
                if height < self.next_height() {
                    return;
                }
                self.precommits
                    .entry(height)
                    .or_default()
                    .entry(block_hash)
                    .or_default()
                    .insert(voter);
                self.try_advance(now);
            }
            Msg::BlockRequest { height } => {
                if height < self.next_height() {
                    if let Some(block) = self.app.block(height) {
                        self.out.push(Outgoing::Direct(from, Msg::BlockReply(block.clone())));
                    }
                }
            }
            Msg::BlockReply(block) => {
                self.note_height_evidence(block.height);
                if block.height >= self.next_height() {
                    self.fetched.insert(block.height, block);
                    self.try_advance(now);
                }
                // Still behind: chain the next fetch immediately instead of
                // waiting out the request timer.
                if self.known_committed >= self.next_height() {
                    let height = self.next_height();
                    self.out
                        .push(Outgoing::Direct(from, Msg::BlockRequest { height }));
                }
            }
            Msg::Heartbeat { next_height } => {
                self.note_height_evidence(next_height.saturating_sub(1));
                if next_height < self.next_height() {
                    if let Some(block) = self.app.block(next_height) {
                        self.out
                            .push(Outgoing::Direct(from, Msg::BlockReply(block.clone())));
                    }
                }
            }
        }
    }

    fn on_tx(&mut self, tx: Transaction) {
        // Gossip admission; duplicates and anything stale simply drop.
        let _ = self.app.check_tx_decoded(tx);
    }

    fn on_proposal(&mut self, block: Block, now: u64) {
        if block.proposer != self.proposer_for(block.height) {
            return;
        }
        self.note_height_evidence(block.height.saturating_sub(1));
        if block.height < self.next_height() {
            return;
        }
        self.proposals.entry(block.height).or_insert(block);
        self.try_advance(now);
    }

    fn note_height_evidence(&mut self, committed_height: u64) {
        self.known_committed = self.known_committed.max(committed_height);
    }

    fn broadcast_prevote(&mut self, height: u64, target: VoteTarget) {
        self.my_prevote.insert(height, target);
        self.prevotes
            .entry(height)
            .or_default()
            .entry(target)
            .or_default()
            .insert(self.ordinal);
        self.out.push(Outgoing::Broadcast(Msg::Prevote {
            height,
            block_hash: target,
            voter: self.ordinal,
        }));
    }

    fn broadcast_precommit(&mut self, height: u64, target: VoteTarget) {
        self.my_precommit.insert(height, target);
        self.precommits
            .entry(height)
            .or_default()
            .entry(target)
            .or_default()
            .insert(self.ordinal);
        self.out.push(Outgoing::Broadcast(Msg::Precommit {
            height,
            block_hash: target,
            voter: self.ordinal,
        }));
    }

    /// Quorum target among `votes[height]`, if any non-nil one exists.
    fn quorum_target(
        &self,
        votes: &BTreeMap<u64, BTreeMap<VoteTarget, BTreeSet<u32>>>,
        height: u64,
    ) -> Option<Hash32> {
        votes.get(&height)?.iter().find_map(|(target, voters)| {
            match (target, self.quorum(voters.len())) {
                (Some(hash), true) => Some(*hash),
                _ => None,
            }
        })
    }

    /// The block for `height` with the given hash, from proposals or fetches.
    fn block_at(&self, height: u64, hash: Hash32) -> Option<Block> {
        [self.proposals.get(&height), self.fetched.get(&height)]
            .into_iter()
            .flatten()
            .find(|b| b.block_hash() == hash)
            .cloned()
    }

    /// Drives every enabled transition to quiescence: prevote on a pending
    /// proposal, precommit behind a prevote quorum, commit behind a
    /// precommit quorum or a fetched committed block.
    fn try_advance(&mut self, now: u64) {
        loop {
            let height = self.next_height();

            if let Some(hash) = self.quorum_target(&self.precommits, height) {
                if let Some(block) = self.block_at(height, hash) {
                    self.commit_block(&block, now);
                    continue;
                }
                // Quorum without the block: it is committed out there.
                self.note_height_evidence(height);
            }

            if let Some(block) = self.fetched.get(&height).cloned() {
                // Served from a peer's committed log; apply directly.
                self.commit_block(&block, now);
                continue;
            }

            if !self.my_prevote.contains_key(&height) {
                if let Some(block) = self.proposals.get(&height).cloned() {
                    let target = match self.app.validate_block(&block) {
                        Ok(()) => Some(block.block_hash()),
                        Err(_) => None,
                    };
                    self.broadcast_prevote(height, target);
                    continue;
                }
            }

            if !self.my_precommit.contains_key(&height) {
                if let Some(Some(my_target)) = self.my_prevote.get(&height) {
                    let my_target = *my_target;
                    let backed = self
                        .prevotes
                        .get(&height)
                        .and_then(|tallies| tallies.get(&Some(my_target)))
                        .is_some_and(|voters| self.quorum(voters.len()));
                    if backed {
                        self.broadcast_precommit(height, Some(my_target));
                        continue;
                    }
                }
            }

            break;
        }
    }

    fn commit_block(&mut self, block: &Block, now: u64) {
        let root = self
            .app
            .apply_block(block)
            .unwrap_or_else(|e| panic!("validator {} commit of height {}: {e}", self.ordinal, block.height));
        self.events.push(CommitRecord {
            height: block.height,
            validator: self.ordinal,
            block_hash: block.block_hash(),
            state_root: root,
            tick: now,
        });
        self.last_commit_tick = now;
        let next = self.next_height();
        self.proposals.retain(|h, _| *h >= next);
        self.fetched.retain(|h, _| *h >= next);
        self.prevotes.retain(|h, _| *h >= next);
        self.precommits.retain(|h, _| *h >= next);
        self.my_prevote.retain(|h, _| *h >= next);
        self.my_precommit.retain(|h, _| *h >= next);
    }

    /// Timer-driven work: catch-up requests, the paced proposal when this
    /// node is the proposer, and retransmission of round messages.
    pub fn on_tick(&mut self, now: u64) {
        if !self.alive {
            return;
        }
        let height = self.next_height();

        if self.known_committed >= height
            && now >= self.last_request_tick + self.block_interval
        {
            let peer = self.pick_peer();
            self.out
                .push(Outgoing::Direct(peer, Msg::BlockRequest { height }));
            self.last_request_tick = now;
        }

        if self.proposer_for(height) == self.ordinal
            && !self.proposed.contains(&height)
            && now >= self.last_commit_tick + self.block_interval
        {
            let block = self
                .propose_block(height)
                .expect("proposer checks precede proposal");
            self.proposed.insert(height);
            self.out.push(Outgoing::Broadcast(Msg::Proposal(block.clone())));
            self.on_proposal(block, now);
        }

        if now >= self.last_retransmit_tick + self.block_interval {
            self.retransmit(height);
            self.last_retransmit_tick = now;
        }
    }

    fn retransmit(&mut self, height: u64) {
        self.out.push(Outgoing::Broadcast(Msg::Heartbeat {
            next_height: height,
        }));
        if self.proposed.contains(&height) {
            if let Some(block) = self.proposals.get(&height) {
                self.out.push(Outgoing::Broadcast(Msg::Proposal(block.clone())));
            }
        }
        if let Some(target) = self.my_prevote.get(&height) {
            self.out.push(Outgoing::Broadcast(Msg::Prevote {
                height,
                block_hash: *target,
                voter: self.ordinal,
            }));
        }
        if let Some(target) = self.my_precommit.get(&height) {
            self.out.push(Outgoing::Broadcast(Msg::Precommit {
                height,
                block_hash: *target,
                voter: self.ordinal,
            }));
        }
    }

    fn pick_peer(&mut self) -> u32 {
        let n = self.validator_count;
        debug_assert!(n > 1, "catch-up needs a peer");
        let mut peer = self.request_rr % n;
        if peer == self.ordinal {
            peer = (peer + 1) % n;
        }
        self.request_rr = (peer + 1) % n;
        peer
    }
}
