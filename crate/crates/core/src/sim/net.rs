//! The deterministic event loop: seeded delays and drops, crash schedule,
//! client workload execution and trace collection.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::config::{ClientCommand, ClientOp, SimConfig, SimKeyring};
use super::node::SimNode;
use super::trace::SimTrace;
use super::{Msg, Outgoing, SimError};
use crate::abci::App;
use crate::block::Block;
use crate::debt::{build_issuance, build_repayment, build_transfer, select_from};
use crate::error::BuildError;
use crate::tx::{tx_hash, LockingCondition, OutPoint, Transaction};
use crate::types::{Amount, Hash32};

struct Envelope {
    deliver_at: u64,
    seq: u64,
    from: u32,
    to: u32,
    msg: Msg,
}

// Min-heap order on (deliver_at, seq); seq is unique so the order is total.
impl PartialEq for Envelope {
    fn eq(&self, other: &Self) -> bool {
        (self.deliver_at, self.seq) == (other.deliver_at, other.seq)
    }
}
impl Eq for Envelope {}
impl PartialOrd for Envelope {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Envelope {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.deliver_at, other.seq).cmp(&(self.deliver_at, self.seq))
    }
}

pub struct SimNetwork {
    pub cfg: SimConfig,
    pub nodes: Vec<SimNode>,
    keyring: SimKeyring,
    rng: ChaCha20Rng,
    queue: BinaryHeap<Envelope>,
    seq: u64,
    /// Issuance labels to originating debt transaction hashes, so workload
    /// repay commands can reference loans symbolically.
    debt_registry: BTreeMap<String, Hash32>,
    skipped: u32,
}

impl SimNetwork {
    pub fn new(cfg: SimConfig) -> Result<SimNetwork, SimError> {
        cfg.check()?;
        let mut keyring = SimKeyring::new(cfg.seed);
        let genesis = cfg.build_genesis(&mut keyring);
        let mut nodes = Vec::with_capacity(cfg.validator_count as usize);
        for ordinal in 0..cfg.validator_count {
            let app = App::new(genesis.clone())?;
            nodes.push(SimNode::new(
                ordinal,
                cfg.validator_count,
                cfg.block_interval,
                cfg.max_block_txs,
                app,
            ));
        }
        let rng = ChaCha20Rng::seed_from_u64(cfg.seed);
        Ok(SimNetwork {
            cfg,
            nodes,
            keyring,
            rng,
            queue: BinaryHeap::new(),
            seq: 0,
            debt_registry: BTreeMap::new(),
            skipped: 0,
        })
    }

    fn send(&mut self, from: u32, to: u32, msg: Msg, now: u64) {
        if self.cfg.drop_probability > 0.0 && self.rng.gen_bool(self.cfg.drop_probability) {
            return;
        }
        let (lo, hi) = self.cfg.delay_range;
        let sampled = if lo == hi { lo } else { self.rng.gen_range(lo..=hi) };
        let delay = sampled.max(1);
        self.queue.push(Envelope {
            deliver_at: now + delay,
            seq: self.seq,
            from,
            to,
            msg,
        });
        self.seq += 1;
    }

    fn route(&mut self, from: u32, outgoing: Vec<Outgoing>, now: u64) {
        for out in outgoing {
            match out {
                Outgoing::Broadcast(msg) => {
                    for to in 0..self.cfg.validator_count {
                        if to != from {
                            self.send(from, to, msg.clone(), now);
                        }
                    }
                }
                Outgoing::Direct(to, msg) => self.send(from, to, msg, now),
            }
        }
    }

    fn drain_outbox(&mut self, idx: usize, now: u64) {
        let outgoing = std::mem::take(&mut self.nodes[idx].out);
        self.route(idx as u32, outgoing, now);
    }

    fn deliver_due(&mut self, now: u64) {
        while self
            .queue
            .peek()
            .is_some_and(|env| env.deliver_at <= now)
        {
            let env = self.queue.pop().expect("peeked");
            let to = env.to as usize;
            if !self.nodes[to].alive {
                continue;
            }
            self.nodes[to].on_msg(env.from, env.msg, now);
            self.drain_outbox(to, now);
        }
    }

    /// Builds a chain transaction for a client command against the pending
    /// view of the node it is submitted through.
    fn build_command_tx(
        &mut self,
        node_idx: usize,
        op: &ClientOp,
    ) -> Result<Transaction, BuildError> {
        match op {
            ClientOp::Transfer { from, to, amount } => {
                let from_key = self.keyring.named(from);
                let to_lock =
                    LockingCondition::to_key_hash(self.keyring.named(to).public_hash());
                let view = self.nodes[node_idx].app.pending_state();
                build_transfer(view, &from_key, to_lock, Amount(*amount))
            }
            ClientOp::Issue {
                issuer,
                outputs,
                loan_type,
                id,
            } => {
                let issuer_key = self.keyring.named(issuer);
                let outs: Vec<(Hash32, Amount)> = outputs
                    .iter()
                    .map(|a| (self.keyring.named(&a.name).public_hash(), Amount(a.amount)))
                    .collect();
                let debt_tx = build_issuance(&issuer_key, &outs, *loan_type)?;
                self.debt_registry.insert(id.clone(), tx_hash(&debt_tx)?);
                Ok(debt_tx)
            }
            ClientOp::Repay {
                payer,
                debt_id,
                amount,
            } => {
                let payer_key = self.keyring.named(payer);
                let origin = *self
                    .debt_registry
                    .get(debt_id)
                    .ok_or(BuildError::UnknownDebt(Hash32::ZERO))?;
                let view = self.nodes[node_idx].app.pending_state();
                let entry = view
                    .debts
                    .by_origin(&origin)
                    .ok_or(BuildError::UnknownDebt(origin))?
                    .clone();
                let candidates = view.utxos_of(&payer_key.public_hash());
                let picked = select_from(&candidates, Amount(*amount))?;
                let inputs: Vec<(OutPoint, Amount)> = candidates
                    .into_iter()
                    .filter(|(outpoint, _)| picked.contains(outpoint))
                    .collect();
                let (payment, _successor) =
                    build_repayment(&payer_key, &entry, Amount(*amount), &inputs)?;
                Ok(payment)
            }
        }
    }

    fn execute_command(&mut self, cmd: &ClientCommand, now: u64) {
        let node_idx = (cmd.node % self.cfg.validator_count) as usize;
        if !self.nodes[node_idx].alive {
            self.skipped += 1;
            return;
        }
        let tx = match self.build_command_tx(node_idx, &cmd.op) {
            Ok(tx) => tx,
            Err(_) => {
                self.skipped += 1;
                return;
            }
        };
        match self.nodes[node_idx].app.check_tx_decoded(tx.clone()) {
            Ok(_) => {
                self.nodes[node_idx].out.push(Outgoing::Broadcast(Msg::Tx(tx)));
                self.drain_outbox(node_idx, now);
            }
            Err(_) => self.skipped += 1,
        }
    }

    fn apply_fault_schedule(&mut self, now: u64) {
        let schedule = self.cfg.crash_schedule.clone();
        for event in schedule {
            let node = &mut self.nodes[event.validator as usize];
            if event.crash_tick == now {
                node.crash();
            }
            if event.restart_tick == Some(now) {
                node.restart(now);
            }
        }
    }

    /// Drives the discrete-tick loop to `max_ticks` (or to `target_height`
    /// on every live validator), executing the workload along the way.
    /// Identical (config, workload) inputs produce identical traces.
    pub fn run(&mut self, workload: &[ClientCommand]) -> SimTrace {
        let mut commands: Vec<ClientCommand> = workload.to_vec();
        commands.sort_by_key(|cmd| cmd.tick);
        let mut cursor = 0;
        let mut records = Vec::new();

        for now in 0..=self.cfg.max_ticks {
            self.apply_fault_schedule(now);
            self.deliver_due(now);
            while cursor < commands.len() && commands[cursor].tick <= now {
                let cmd = commands[cursor].clone();
                cursor += 1;
                self.execute_command(&cmd, now);
            }
            for idx in 0..self.nodes.len() {
                if self.nodes[idx].alive {
                    self.nodes[idx].on_tick(now);
                    self.drain_outbox(idx, now);
                }
            }
            for node in &mut self.nodes {
                records.append(&mut node.events);
            }
            if let Some(target) = self.cfg.target_height {
                let live_reached = self
                    .nodes
                    .iter()
                    .filter(|n| n.alive)
                    .all(|n| n.height() >= target);
                if live_reached && self.nodes.iter().any(|n| n.alive) {
                    break;
                }
            }
        }
        SimTrace {
            records,
            skipped_commands: self.skipped,
        }
    }
}

/// Outcome of a single synchronous consensus round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundOutcome {
    Committed { precommits: usize },
    Rejected,
}

/// Runs one round on `block` to quiescence with instant, lossless delivery:
/// every live validator validates the block against its own state, prevotes,
/// precommits behind a prevote quorum, and commits on a precommit quorum.
pub fn vote_and_commit(net: &mut SimNetwork, block: Block) -> RoundOutcome {
    let height = block.height;
    let hash = block.block_hash();
    assert_eq!(
        block.proposer,
        net.nodes[0].proposer_for(height),
        "block must come from the rotation proposer for its height",
    );

    let mut worklist: VecDeque<(u32, u32, Msg)> = VecDeque::new();
    for node in net.nodes.iter().filter(|n| n.alive) {
        worklist.push_back((block.proposer, node.ordinal, Msg::Proposal(block.clone())));
    }

    let mut precommitters = std::collections::BTreeSet::new();
    while let Some((from, to, msg)) = worklist.pop_front() {
        if let Msg::Precommit {
            height: h,
            block_hash: Some(voted),
            voter,
        } = &msg
        {
            if *h == height && *voted == hash {
                precommitters.insert(*voter);
            }
        }
        let node = &mut net.nodes[to as usize];
        if !node.alive {
            continue;
        }
        node.on_msg(from, msg, 0);
        for out in std::mem::take(&mut node.out) {
            match out {
                Outgoing::Broadcast(msg) => {
                    // Count the sender's own vote too; tallies include it
                    // even though no self-message is queued.
                    if let Msg::Precommit {
                        height: h,
                        block_hash: Some(voted),
                        voter,
                    } = &msg
                    {
                        if *h == height && *voted == hash {
                            precommitters.insert(*voter);
                        }
                    }
                    for peer in 0..net.cfg.validator_count {
                        if peer != to {
                            worklist.push_back((to, peer, msg.clone()));
                        }
                    }
                }
                Outgoing::Direct(peer, msg) => worklist.push_back((to, peer, msg)),
            }
        }
    }

    let committed = net
        .nodes
        .iter()
        .any(|n| n.alive && n.height() >= height);
    if committed {
        RoundOutcome::Committed {
            precommits: precommitters.len(),
        }
    } else {
        RoundOutcome::Rejected
    }
}

/// Builds the network for `cfg` and replays `workload` through it.
pub fn run_simulation(cfg: &SimConfig, workload: &[ClientCommand]) -> Result<SimTrace, SimError> {
    let mut net = SimNetwork::new(cfg.clone())?;
    Ok(net.run(workload))
}
