//! Transaction model: four kinds on one wire format.
//!
//! Credit moves through matched inputs and outputs as usual. Debt rides the
//! same structure with sentinel input indexes: `-1` mints genesis credit
//! (coinbase), `-2` issues debt (the input's hash field carries the creditor
//! public key instead of a transaction hash), and `-3` marks the unmatched
//! input of an outstanding-debt transaction awaiting repayment.
//!
//! The canonical encoding is fixed-width little-endian with 32-bit count
//! prefixes on the input and output lists, in field declaration order:
//! version, kind, inputs, outputs, locktime, loan type, debt reference.
//! Hashing and signing are SHA-256 over this encoding.

use serde::{Deserialize, Serialize};

use crate::error::{BuildError, CodecError, Rejection};
use crate::types::{sha256, Amount, Hash32, Keypair, PubKey, Signature};

/// Input index sentinel for the genesis coinbase input.
pub const COINBASE_INDEX: i32 = -1;
/// Input index sentinel for a debt-issuance input.
pub const DEBT_INDEX: i32 = -2;
/// Input index sentinel for an outstanding-debt (unmatched) input.
pub const OUTSTANDING_INDEX: i32 = -3;

/// Largest input or output list the wire format will carry.
pub const MAX_LIST_LEN: usize = 1 << 16;

/// Spend predicate on an output: pay-to-pubkey-hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LockingCondition {
    pub pubkey_hash: Hash32,
}

impl LockingCondition {
    pub fn to_key_hash(hash: Hash32) -> LockingCondition {
        LockingCondition { pubkey_hash: hash }
    }

    pub fn to_key(key: &PubKey) -> LockingCondition {
        LockingCondition {
            pubkey_hash: key.key_hash(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxOutput {
    pub amount: Amount,
    pub lock: LockingCondition,
}

/// A transaction input.
///
/// `prev_field` holds the referenced transaction hash for normal inputs.
/// For debt inputs it is repurposed to carry the creditor public key; for
/// outstanding-debt inputs it names the originating debt transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxInput {
    pub prev_field: Hash32,
    pub output_index: i32,
    pub unlock_pubkey: PubKey,
    pub unlock_sig: Signature,
}

impl TxInput {
    /// A spend of a committed output, unlock fields to be filled by signing.
    pub fn spend(outpoint: OutPoint) -> TxInput {
        TxInput {
            prev_field: outpoint.tx_hash,
            output_index: outpoint.index as i32,
            unlock_pubkey: PubKey([0u8; 32]),
            unlock_sig: Signature::ZERO,
        }
    }

    /// The outpoint named by a normal input. None for sentinel indexes.
    pub fn outpoint(&self) -> Option<OutPoint> {
        if self.output_index < 0 {
            return None;
        }
        Some(OutPoint {
            tx_hash: self.prev_field,
            index: self.output_index as u32,
        })
    }
}

/// Names one output of a committed transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OutPoint {
    pub tx_hash: Hash32,
    pub index: u32,
}

impl std::fmt::Display for OutPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.tx_hash, self.index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxKind {
    Normal,
    Coinbase,
    Debt,
    OutstandingDebt,
}

impl TxKind {
    pub fn as_byte(self) -> u8 {
        match self {
            TxKind::Normal => 0,
            TxKind::Coinbase => 1,
            TxKind::Debt => 2,
            TxKind::OutstandingDebt => 3,
        }
    }

    pub fn from_byte(b: u8) -> Result<TxKind, CodecError> {
        match b {
            0 => Ok(TxKind::Normal),
            1 => Ok(TxKind::Coinbase),
            2 => Ok(TxKind::Debt),
            3 => Ok(TxKind::OutstandingDebt),
            other => Err(CodecError::InvalidKind(other)),
        }
    }
}

/// Fixed transaction version carried on the wire.
pub const TX_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub version: u16,
    pub kind: TxKind,
    pub inputs: Vec<TxInput>,
    pub outputs: Vec<TxOutput>,
    pub locktime: u32,
    /// Loan-type metadata; zero means not a loan.
    pub loan_type: u16,
    /// Hash of the originating debt transaction for outstanding-debt
    /// transactions and repayments; all zeros otherwise.
    pub debt_ref: Hash32,
}

impl Transaction {
    pub fn new(kind: TxKind) -> Transaction {
        Transaction {
            version: TX_VERSION,
            kind,
            inputs: Vec::new(),
            outputs: Vec::new(),
            locktime: 0,
            loan_type: 0,
            debt_ref: Hash32::ZERO,
        }
    }

    pub fn output_sum(&self) -> Result<Amount, BuildError> {
        Amount::checked_sum(self.outputs.iter().map(|o| o.amount))
    }
}

/// Deterministic wire encoding; injective over well-formed transactions.
pub fn canonical_encode(tx: &Transaction) -> Result<Vec<u8>, CodecError> {
    if tx.inputs.len() > MAX_LIST_LEN {
        return Err(CodecError::TooManyEntries(tx.inputs.len()));
    }
    if tx.outputs.len() > MAX_LIST_LEN {
        return Err(CodecError::TooManyEntries(tx.outputs.len()));
    }
    let mut buf =
        Vec::with_capacity(13 + tx.inputs.len() * 132 + tx.outputs.len() * 40 + 38);
    buf.extend_from_slice(&tx.version.to_le_bytes());
    buf.push(tx.kind.as_byte());
    buf.extend_from_slice(&(tx.inputs.len() as u32).to_le_bytes());
    for input in &tx.inputs {
        buf.extend_from_slice(&input.prev_field.0);
        buf.extend_from_slice(&input.output_index.to_le_bytes());
        buf.extend_from_slice(&input.unlock_pubkey.0);
        buf.extend_from_slice(&input.unlock_sig.0);
    }
    buf.extend_from_slice(&(tx.outputs.len() as u32).to_le_bytes());
    for output in &tx.outputs {
        buf.extend_from_slice(&output.amount.0.to_le_bytes());
        buf.extend_from_slice(&output.lock.pubkey_hash.0);
    }
    buf.extend_from_slice(&tx.locktime.to_le_bytes());
    buf.extend_from_slice(&tx.loan_type.to_le_bytes());
    buf.extend_from_slice(&tx.debt_ref.0);
    Ok(buf)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos.checked_add(n).ok_or(CodecError::UnexpectedEnd)?;
        if end > self.bytes.len() {
            return Err(CodecError::UnexpectedEnd);
        }
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn take_array<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_le_bytes(self.take_array()?))
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take_array()?))
    }

    fn i32(&mut self) -> Result<i32, CodecError> {
        Ok(i32::from_le_bytes(self.take_array()?))
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take_array()?))
    }
}

/// Strict inverse of [`canonical_encode`]; trailing bytes are an error.
pub fn canonical_decode(bytes: &[u8]) -> Result<Transaction, CodecError> {
    let mut r = Reader { bytes, pos: 0 };
    let version = r.u16()?;
    let kind = TxKind::from_byte(r.take_array::<1>()?[0])?;
    let input_count = r.u32()? as usize;
    if input_count > MAX_LIST_LEN {
        return Err(CodecError::TooManyEntries(input_count));
    }
    let mut inputs = Vec::with_capacity(input_count.min(1024));
    for _ in 0..input_count {
        inputs.push(TxInput {
            prev_field: Hash32(r.take_array()?),
            output_index: r.i32()?,
            unlock_pubkey: PubKey(r.take_array()?),
            unlock_sig: Signature(r.take_array()?),
        });
    }
    let output_count = r.u32()? as usize;
    if output_count > MAX_LIST_LEN {
        return Err(CodecError::TooManyEntries(output_count));
    }
    let mut outputs = Vec::with_capacity(output_count.min(1024));
    for _ in 0..output_count {
        outputs.push(TxOutput {
            amount: Amount(r.u64()?),
            lock: LockingCondition {
                pubkey_hash: Hash32(r.take_array()?),
            },
        });
    }
    let locktime = r.u32()?;
    let loan_type = r.u16()?;
    let debt_ref = Hash32(r.take_array()?);
    if r.pos != bytes.len() {
        return Err(CodecError::TrailingBytes(bytes.len() - r.pos));
    }
    Ok(Transaction {
        version,
        kind,
        inputs,
        outputs,
        locktime,
        loan_type,
        debt_ref,
    })
}

/// SHA-256 of the canonical encoding.
pub fn tx_hash(tx: &Transaction) -> Result<Hash32, CodecError> {
    Ok(sha256(&canonical_encode(tx)?))
}

/// Digest signatures commit to: the canonical encoding with every input's
/// unlock public key and signature zeroed, so one signature covers the whole
/// transaction body and adding signatures never invalidates earlier ones.
pub fn sighash(tx: &Transaction) -> Result<Hash32, CodecError> {
    let mut blanked = tx.clone();
    for input in &mut blanked.inputs {
        input.unlock_pubkey = PubKey([0u8; 32]);
        input.unlock_sig = Signature::ZERO;
    }
    tx_hash(&blanked)
}

/// Returns `tx` with the indexed input's unlock fields filled by `key`.
pub fn sign_input(
    mut tx: Transaction,
    input_index: usize,
    key: &Keypair,
) -> Result<Transaction, BuildError> {
    if input_index >= tx.inputs.len() {
        return Err(BuildError::InvalidInputIndex(input_index));
    }
    let digest = sighash(&tx)?;
    tx.inputs[input_index].unlock_pubkey = key.public();
    tx.inputs[input_index].unlock_sig = key.sign_digest(&digest);
    Ok(tx)
}

/// True iff the input's key hashes to the lock and its signature verifies
/// over `digest`. Never traps on malformed material.
pub fn verify_unlock(lock: &LockingCondition, input: &TxInput, digest: &Hash32) -> bool {
    input.unlock_pubkey.key_hash() == lock.pubkey_hash
        && input.unlock_pubkey.verify_digest(digest, &input.unlock_sig)
}

/// Classifies a transaction from its input sentinels alone.
///
/// Sentinel inputs must be the sole input of their transaction; mixtures of
/// sentinel and normal inputs, unknown sentinels, and empty input lists are
/// malformed.
pub fn classify(tx: &Transaction) -> Result<TxKind, Rejection> {
    if tx.inputs.is_empty() {
        return Err(Rejection::Malformed("transaction has no inputs".into()));
    }
    if tx.inputs.iter().all(|i| i.output_index >= 0) {
        return Ok(TxKind::Normal);
    }
    if tx.inputs.len() != 1 {
        return Err(Rejection::Malformed(
            "sentinel input mixed with other inputs".into(),
        ));
    }
    match tx.inputs[0].output_index {
        COINBASE_INDEX => Ok(TxKind::Coinbase),
        DEBT_INDEX => Ok(TxKind::Debt),
        OUTSTANDING_INDEX => Ok(TxKind::OutstandingDebt),
        other => Err(Rejection::Malformed(format!(
            "unknown sentinel input index {other}"
        ))),
    }
}

/// Stateless well-formedness: field constraints, classification consistency
/// and the per-kind shape rules. State-dependent checks live in the ledger.
pub fn validate_structure(tx: &Transaction) -> Result<(), Rejection> {
    if tx.version != TX_VERSION {
        return Err(Rejection::Malformed(format!(
            "unsupported version {}",
            tx.version
        )));
    }
    if tx.locktime != 0 {
        return Err(Rejection::Malformed("locktime must be zero".into()));
    }
    if tx.outputs.is_empty() {
        return Err(Rejection::Malformed("transaction has no outputs".into()));
    }
    if tx.inputs.len() > MAX_LIST_LEN || tx.outputs.len() > MAX_LIST_LEN {
        return Err(Rejection::Malformed("list exceeds encoding limit".into()));
    }
    if tx.outputs.iter().any(|o| o.amount.0 == 0) {
        return Err(Rejection::Malformed("zero-value output".into()));
    }
    if tx.output_sum().is_err() {
        return Err(Rejection::Malformed("output sum overflows".into()));
    }
    let derived = classify(tx)?;
    if derived != tx.kind {
        return Err(Rejection::Malformed(format!(
            "kind tag {:?} disagrees with input structure {:?}",
            tx.kind, derived
        )));
    }
    match derived {
        TxKind::Normal => {
            if tx.loan_type != 0 {
                return Err(Rejection::Malformed(
                    "loan type on a non-debt transaction".into(),
                ));
            }
        }
        TxKind::Coinbase => {
            if tx.loan_type != 0 || !tx.debt_ref.is_zero() {
                return Err(Rejection::Malformed(
                    "coinbase carries debt metadata".into(),
                ));
            }
        }
        TxKind::Debt => {
            let input = &tx.inputs[0];
            if input.unlock_pubkey.0 != input.prev_field.0 {
                return Err(Rejection::Malformed(
                    "debt input unlock key must equal the creditor key field".into(),
                ));
            }
            if tx.loan_type == 0 {
                return Err(Rejection::Malformed("debt transaction with loan type 0".into()));
            }
            if !tx.debt_ref.is_zero() {
                return Err(Rejection::Malformed(
                    "debt transaction carries a debt reference".into(),
                ));
            }
        }
        TxKind::OutstandingDebt => {
            if tx.outputs.len() != 1 {
                return Err(Rejection::Malformed(
                    "outstanding-debt transaction must pay the creditor in one output".into(),
                ));
            }
            if tx.debt_ref.is_zero() {
                return Err(Rejection::Malformed(
                    "outstanding-debt transaction without a debt reference".into(),
                ));
            }
            if tx.loan_type == 0 {
                return Err(Rejection::Malformed(
                    "outstanding-debt transaction with loan type 0".into(),
                ));
            }
        }
    }
    Ok(())
}
