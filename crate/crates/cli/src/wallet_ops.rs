//! Wallet-side transaction assembly over fetched UTXO views.
//!
//! These wrap the core builders without adding any fields of their own, so
//! a wallet-built transaction is byte-identical to one constructed through
//! the core API with the same inputs.

use utxo_debt_core::debt::{build_payment_from, build_repayment, select_from};
use utxo_debt_core::ledger::OutstandingDebtEntry;
use utxo_debt_core::tx::{LockingCondition, OutPoint};
use utxo_debt_core::{Amount, BuildError, Hash32, Keypair, Transaction};

/// Transfer funded greedily from the given UTXO view.
pub fn make_transfer(
    key: &Keypair,
    utxos: &[(OutPoint, Amount)],
    to: Hash32,
    amount: Amount,
) -> Result<Transaction, BuildError> {
    let picked = select_from(utxos, amount)?;
    let inputs: Vec<(OutPoint, Amount)> = utxos
        .iter()
        .filter(|(outpoint, _)| picked.contains(outpoint))
        .copied()
        .collect();
    build_payment_from(
        key,
        &inputs,
        LockingCondition::to_key_hash(to),
        amount,
        Hash32::ZERO,
    )
}

/// Repayment funded greedily from the given UTXO view; returns the payment
/// and, for partial repayments, the successor outstanding-debt transaction
/// whose hash keys the replacement pool entry.
pub fn make_repayment(
    key: &Keypair,
    entry: &OutstandingDebtEntry,
    utxos: &[(OutPoint, Amount)],
    amount: Amount,
) -> Result<(Transaction, Option<Transaction>), BuildError> {
    let picked = select_from(utxos, amount)?;
    let inputs: Vec<(OutPoint, Amount)> = utxos
        .iter()
        .filter(|(outpoint, _)| picked.contains(outpoint))
        .copied()
        .collect();
    build_repayment(key, entry, amount, &inputs)
}

/// Parses `hash:amount[,hash:amount...]` recipient lists.
pub fn parse_recipients(spec: &str) -> Result<Vec<(Hash32, Amount)>, String> {
    spec.split(',')
        .map(|part| {
            let (hash, amount) = part
                .split_once(':')
                .ok_or_else(|| format!("'{part}' is not hash:amount"))?;
            let hash = Hash32::from_hex(hash.trim())
                .ok_or_else(|| format!("'{hash}' is not a 32-byte hex hash"))?;
            let amount: u64 = amount
                .trim()
                .parse()
                .map_err(|e| format!("bad amount '{amount}': {e}"))?;
            Ok((hash, Amount(amount)))
        })
        .collect()
}
