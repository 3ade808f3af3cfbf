//! Replicated application state: UTXO pool, debt pool, issuer set and the
//! applied-transaction index, with deterministic transitions and a state-root
//! commitment.
//!
//! Credit lives in the UTXO pool. Debt lives in the debt pool as
//! outstanding-debt entries, one live entry per issuance lineage, derived
//! deterministically from committed transactions: a committed debt
//! transaction inserts its entry, a committed repayment shrinks or removes
//! it. Outstanding-debt transactions themselves never enter blocks.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::Rejection;
use crate::tx::{
    classify, sighash, verify_unlock, OutPoint, Transaction, TxKind, TxOutput,
};
use crate::types::{sha256, Amount, Hash32, PubKey};

/// Live unspent outputs keyed by outpoint.
pub type UtxoPool = BTreeMap<OutPoint, TxOutput>;

/// One unpaid obligation: the debt-pool record mirroring an
/// outstanding-debt transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutstandingDebtEntry {
    /// Hash of the outstanding-debt transaction this entry mirrors.
    pub odt_hash: Hash32,
    /// Lock the repayments must pay (the creditor's key hash).
    pub creditor_lock: Hash32,
    pub remaining: Amount,
    /// Hash of the originating debt transaction; constant across the
    /// lifetime of a loan, including partial-repayment successors.
    pub debt_origin: Hash32,
    pub loan_type: u16,
}

impl OutstandingDebtEntry {
    /// Reads an entry out of an outstanding-debt transaction.
    pub fn from_odt(odt: &Transaction) -> OutstandingDebtEntry {
        debug_assert_eq!(odt.kind, TxKind::OutstandingDebt);
        OutstandingDebtEntry {
            odt_hash: crate::tx::tx_hash(odt).expect("well-formed odt encodes"),
            creditor_lock: odt.outputs[0].lock.pubkey_hash,
            remaining: odt.outputs[0].amount,
            debt_origin: odt.debt_ref,
            loan_type: odt.loan_type,
        }
    }
}

/// Outstanding debt entries keyed by the outstanding transaction hash, with
/// a lineage index so repayments can resolve their target in one lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DebtPool {
    entries: BTreeMap<Hash32, OutstandingDebtEntry>,
    by_origin: BTreeMap<Hash32, Hash32>,
}

impl DebtPool {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, odt_hash: &Hash32) -> Option<&OutstandingDebtEntry> {
        self.entries.get(odt_hash)
    }

    /// The live entry of an issuance lineage, if any.
    pub fn by_origin(&self, origin: &Hash32) -> Option<&OutstandingDebtEntry> {
        self.by_origin.get(origin).and_then(|h| self.entries.get(h))
    }

    pub fn iter(&self) -> impl Iterator<Item = &OutstandingDebtEntry> {
        self.entries.values()
    }

    fn insert(&mut self, entry: OutstandingDebtEntry) {
        debug_assert!(entry.remaining.0 > 0, "zero-remaining entries are removed");
        self.by_origin.insert(entry.debt_origin, entry.odt_hash);
        self.entries.insert(entry.odt_hash, entry);
    }

    fn remove_origin(&mut self, origin: &Hash32) -> Option<OutstandingDebtEntry> {
        let odt_hash = self.by_origin.remove(origin)?;
        self.entries.remove(&odt_hash)
    }
}

/// The full replicated state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerState {
    pub utxos: UtxoPool,
    pub debts: DebtPool,
    /// Keys permitted to issue debt; fixed at genesis.
    pub issuers: BTreeSet<PubKey>,
    pub height: u64,
    /// Hashes of every committed transaction, for replay rejection.
    pub applied: BTreeSet<Hash32>,
}

impl LedgerState {
    pub fn new(issuers: BTreeSet<PubKey>) -> LedgerState {
        LedgerState {
            utxos: UtxoPool::new(),
            debts: DebtPool::default(),
            issuers,
            height: 0,
            applied: BTreeSet::new(),
        }
    }

    /// Sum of all live outputs locked to `owner`.
    pub fn balance_of(&self, owner: &Hash32) -> Amount {
        let total: u128 = self
            .utxos
            .values()
            .filter(|out| out.lock.pubkey_hash == *owner)
            .map(|out| out.amount.0 as u128)
            .sum();
        Amount(u64::try_from(total).expect("pool total exceeds 64 bits"))
    }

    /// Live outpoints locked to `owner`, in outpoint order.
    pub fn utxos_of(&self, owner: &Hash32) -> Vec<(OutPoint, Amount)> {
        self.utxos
            .iter()
            .filter(|(_, out)| out.lock.pubkey_hash == *owner)
            .map(|(op, out)| (*op, out.amount))
            .collect()
    }

    /// Total outstanding debt across all entries.
    pub fn aggregate_debt(&self) -> Amount {
        let total: u128 = self.debts.iter().map(|e| e.remaining.0 as u128).sum();
        Amount(u64::try_from(total).expect("debt total exceeds 64 bits"))
    }

    /// Entries owed to `creditor`, ordered by outstanding transaction hash.
    pub fn debts_of_creditor(&self, creditor: &Hash32) -> Vec<OutstandingDebtEntry> {
        self.debts
            .iter()
            .filter(|e| e.creditor_lock == *creditor)
            .cloned()
            .collect()
    }

    /// Commitment over the whole state: sorted UTXO entries, then sorted
    /// debt entries, then the height, hashed with SHA-256.
    pub fn state_root(&self) -> Hash32 {
        let mut buf = Vec::with_capacity(16 + self.utxos.len() * 76 + self.debts.len() * 106);
        buf.extend_from_slice(&(self.utxos.len() as u64).to_le_bytes());
        for (outpoint, output) in &self.utxos {
            buf.extend_from_slice(&outpoint.tx_hash.0);
            buf.extend_from_slice(&outpoint.index.to_le_bytes());
            buf.extend_from_slice(&output.amount.0.to_le_bytes());
            buf.extend_from_slice(&output.lock.pubkey_hash.0);
        }
        buf.extend_from_slice(&(self.debts.len() as u64).to_le_bytes());
        for entry in self.debts.iter() {
            buf.extend_from_slice(&entry.odt_hash.0);
            buf.extend_from_slice(&entry.creditor_lock.0);
            buf.extend_from_slice(&entry.remaining.0.to_le_bytes());
            buf.extend_from_slice(&entry.debt_origin.0);
            buf.extend_from_slice(&entry.loan_type.to_le_bytes());
        }
        buf.extend_from_slice(&self.height.to_le_bytes());
        sha256(&buf)
    }

    /// Full stateful validation of a structurally valid transaction.
    pub fn validate_against_state(&self, tx: &Transaction) -> Result<(), Rejection> {
        self.validate_inner(tx, true)
    }

    fn validate_inner(&self, tx: &Transaction, verify_sigs: bool) -> Result<(), Rejection> {
        let hash = crate::tx::tx_hash(tx).map_err(|e| Rejection::Malformed(e.to_string()))?;
        if self.applied.contains(&hash) {
            return Err(Rejection::Replay(hash));
        }
        match classify(tx)? {
            TxKind::Coinbase => Err(Rejection::Malformed(
                "coinbase transactions are confined to genesis".into(),
            )),
            TxKind::OutstandingDebt => Err(Rejection::Malformed(
                "outstanding-debt transactions are derived state, not chain transactions".into(),
            )),
            TxKind::Debt => self.validate_debt(tx, verify_sigs),
            TxKind::Normal => self.validate_normal(tx, verify_sigs),
        }
    }

    fn validate_debt(&self, tx: &Transaction, verify_sigs: bool) -> Result<(), Rejection> {
        let input = &tx.inputs[0];
        if !self.issuers.contains(&input.unlock_pubkey) {
            return Err(Rejection::UnauthorizedIssuer);
        }
        if verify_sigs {
            let digest = sighash(tx).map_err(|e| Rejection::Malformed(e.to_string()))?;
            if !input.unlock_pubkey.verify_digest(&digest, &input.unlock_sig) {
                return Err(Rejection::BadSignature { input: 0 });
            }
        }
        Ok(())
    }

    fn validate_normal(&self, tx: &Transaction, verify_sigs: bool) -> Result<(), Rejection> {
        let digest = sighash(tx).map_err(|e| Rejection::Malformed(e.to_string()))?;
        let mut seen = BTreeSet::new();
        let mut input_total: u128 = 0;
        for (index, input) in tx.inputs.iter().enumerate() {
            let outpoint = input.outpoint().expect("classified normal");
            if !seen.insert(outpoint) {
                return Err(Rejection::DuplicateInput(outpoint));
            }
            let utxo = self
                .utxos
                .get(&outpoint)
                .ok_or(Rejection::UnknownOutpoint(outpoint))?;
            let key_matches = input.unlock_pubkey.key_hash() == utxo.lock.pubkey_hash;
            let ok = if verify_sigs {
                verify_unlock(&utxo.lock, input, &digest)
            } else {
                key_matches
            };
            if !ok {
                return Err(Rejection::BadSignature { input: index });
            }
            input_total += utxo.amount.0 as u128;
        }
        let output_total: u128 = tx.outputs.iter().map(|o| o.amount.0 as u128).sum();
        if input_total != output_total {
            return Err(Rejection::ValueMismatch {
                inputs: u64::try_from(input_total).unwrap_or(u64::MAX),
                outputs: u64::try_from(output_total).unwrap_or(u64::MAX),
            });
        }
        if !tx.debt_ref.is_zero() {
            self.validate_repayment(tx)?;
        }
        Ok(())
    }

    /// A normal transaction with a nonzero debt reference is a repayment:
    /// its first output must pay the creditor of the referenced lineage's
    /// live entry, for no more than the remaining amount.
    fn validate_repayment(&self, tx: &Transaction) -> Result<(), Rejection> {
        let entry = self
            .debts
            .by_origin(&tx.debt_ref)
            .ok_or(Rejection::UnknownDebt(tx.debt_ref))?;
        let payment = &tx.outputs[0];
        if payment.lock.pubkey_hash != entry.creditor_lock {
            return Err(Rejection::Malformed(
                "repayment output 0 must pay the creditor".into(),
            ));
        }
        if payment.amount > entry.remaining {
            return Err(Rejection::ExcessRepayment {
                remaining: entry.remaining.0,
                paid: payment.amount.0,
            });
        }
        Ok(())
    }

    /// Applies a transaction that already passed [`Self::validate_against_state`].
    ///
    /// Validates again defensively: an invalid transaction returns the
    /// rejection and leaves the state untouched.
    pub fn apply_transaction(&mut self, tx: &Transaction) -> Result<(), Rejection> {
        self.apply_inner(tx, true)
    }

    pub(crate) fn apply_assuming_signatures(&mut self, tx: &Transaction) -> Result<(), Rejection> {
        self.apply_inner(tx, false)
    }

    fn apply_inner(&mut self, tx: &Transaction, verify_sigs: bool) -> Result<(), Rejection> {
        self.validate_inner(tx, verify_sigs)?;
        let hash = crate::tx::tx_hash(tx).expect("validated transaction encodes");
        match tx.kind {
            TxKind::Debt => {
                self.insert_outputs(hash, &tx.outputs);
                let odt = crate::debt::derive_outstanding_tx_for(tx)
                    .expect("validated debt transaction derives its outstanding pair");
                self.debts.insert(OutstandingDebtEntry::from_odt(&odt));
            }
            TxKind::Normal => {
                for input in &tx.inputs {
                    let outpoint = input.outpoint().expect("classified normal");
                    let removed = self.utxos.remove(&outpoint);
                    debug_assert!(removed.is_some(), "validated input resolves");
                }
                self.insert_outputs(hash, &tx.outputs);
                if !tx.debt_ref.is_zero() {
                    self.settle_repayment(tx);
                }
            }
            TxKind::Coinbase | TxKind::OutstandingDebt => {
                unreachable!("rejected by validation")
            }
        }
        self.applied.insert(hash);
        Ok(())
    }

    fn settle_repayment(&mut self, tx: &Transaction) {
        let entry = self
            .debts
            .remove_origin(&tx.debt_ref)
            .expect("validated repayment targets a live entry");
        let paid = tx.outputs[0].amount;
        if paid < entry.remaining {
            let successor = crate::debt::derive_outstanding_tx(
                entry.debt_origin,
                entry.creditor_lock,
                Amount(entry.remaining.0 - paid.0),
                entry.loan_type,
            );
            self.debts.insert(OutstandingDebtEntry::from_odt(&successor));
        }
    }

    fn insert_outputs(&mut self, tx_hash: Hash32, outputs: &[TxOutput]) {
        for (index, output) in outputs.iter().enumerate() {
            let outpoint = OutPoint {
                tx_hash,
                index: index as u32,
            };
            debug_assert!(
                !self.utxos.contains_key(&outpoint),
                "outpoints never re-enter the pool"
            );
            self.utxos.insert(outpoint, *output);
        }
    }

    /// Installs genesis coinbase outputs directly; used only while building
    /// the height-0 state.
    pub(crate) fn install_genesis_coinbase(&mut self, coinbase: &Transaction) {
        debug_assert_eq!(coinbase.kind, TxKind::Coinbase);
        let hash = crate::tx::tx_hash(coinbase).expect("genesis coinbase encodes");
        self.insert_outputs(hash, &coinbase.outputs);
        self.applied.insert(hash);
    }
}
