//! Batch stateless checks over block transactions.
//!
//! Structural validation and Ed25519 signature verification are independent
//! per transaction, so block validation runs them data-parallel under the
//! `parallel` feature and falls back to a plain loop without it. The
//! remaining stateful pass is sequential either way. Results are identical
//! across both paths.

use crate::error::Rejection;
use crate::tx::{sighash, validate_structure, Transaction, TxKind};

/// Below this many transactions the thread fan-out costs more than it saves.
#[cfg(feature = "parallel")]
const PARALLEL_THRESHOLD: usize = 16;

fn precheck_one(tx: &Transaction) -> Result<(), Rejection> {
    validate_structure(tx)?;
    match tx.kind {
        TxKind::Normal | TxKind::Debt => {
            let digest = sighash(tx).map_err(|e| Rejection::Malformed(e.to_string()))?;
            for (index, input) in tx.inputs.iter().enumerate() {
                if !input.unlock_pubkey.verify_digest(&digest, &input.unlock_sig) {
                    return Err(Rejection::BadSignature { input: index });
                }
            }
        }
        // Unsigned kinds; the stateful pass refuses them in blocks.
        TxKind::Coinbase | TxKind::OutstandingDebt => {}
    }
    Ok(())
}

/// Structural and signature checks for every transaction; on failure returns
/// the offending position and reason.
pub fn precheck_transactions(txs: &[Transaction]) -> Result<(), (usize, Rejection)> {
    #[cfg(feature = "parallel")]
    if txs.len() >= PARALLEL_THRESHOLD {
        return precheck_transactions_par(txs);
    }
    precheck_transactions_seq(txs)
}

/// Sequential reference path; always available for comparison benches.
pub fn precheck_transactions_seq(txs: &[Transaction]) -> Result<(), (usize, Rejection)> {
    for (index, tx) in txs.iter().enumerate() {
        precheck_one(tx).map_err(|r| (index, r))?;
    }
    Ok(())
}

/// Rayon path; reports the earliest failing position, matching the
/// sequential path exactly.
#[cfg(feature = "parallel")]
pub fn precheck_transactions_par(txs: &[Transaction]) -> Result<(), (usize, Rejection)> {
    use rayon::prelude::*;
    let failure = txs
        .par_iter()
        .enumerate()
        .filter_map(|(index, tx)| precheck_one(tx).err().map(|r| (index, r)))
        .min_by_key(|(index, _)| *index);
    match failure {
        Some(err) => Err(err),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tx::{sign_input, LockingCondition, OutPoint, TxInput, TxOutput};
    use crate::types::{Amount, Hash32, Keypair};

    fn signed_tx(i: u64, key: &Keypair) -> Transaction {
        let mut tx = Transaction::new(TxKind::Normal);
        tx.inputs.push(TxInput::spend(OutPoint {
            tx_hash: crate::types::sha256(&i.to_le_bytes()),
            index: 0,
        }));
        tx.outputs.push(TxOutput {
            amount: Amount(i + 1),
            lock: LockingCondition::to_key(&key.public()),
        });
        sign_input(tx, 0, key).unwrap()
    }

    #[test]
    fn accepts_valid_batch_rejects_earliest_failure() {
        let key = Keypair::from_seed([1; 32]);
        let mut txs: Vec<_> = (0..40).map(|i| signed_tx(i, &key)).collect();
        assert_eq!(precheck_transactions(&txs), Ok(()));

        txs[7].outputs[0].amount = Amount(1234); // breaks the signature
        txs[21].outputs[0].amount = Amount(0); // structurally invalid
        let err = precheck_transactions(&txs).unwrap_err();
        assert_eq!(err.0, 7);
        assert!(matches!(err.1, Rejection::BadSignature { input: 0 }));
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential() {
        let key = Keypair::from_seed([2; 32]);
        let mut txs: Vec<_> = (0..64).map(|i| signed_tx(i, &key)).collect();
        txs[50].debt_ref = Hash32([1; 32]);
        txs[50] = sign_input(txs[50].clone(), 0, &key).unwrap();
        assert_eq!(
            precheck_transactions_par(&txs),
            precheck_transactions_seq(&txs)
        );
        txs[3].outputs[0].amount = Amount(0);
        assert_eq!(
            precheck_transactions_par(&txs),
            precheck_transactions_seq(&txs)
        );
    }
}
