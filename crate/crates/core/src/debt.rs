//! Debt lifecycle: issuance pairs, full and partial repayment, and the
//! coin selection and payment builders shared by wallet and simulator.
//!
//! Issuing a loan creates two transactions at once: the debt transaction,
//! which mints the debtor's UTXOs and goes on chain, and its outstanding-debt
//! mirror, which never enters a block and instead seeds the replicated debt
//! pool. A partial repayment settles on chain as a normal transfer to the
//! creditor and replaces the pool entry with a smaller successor; the final
//! repayment removes the entry.

use std::collections::BTreeSet;

use crate::error::BuildError;
use crate::ledger::{LedgerState, OutstandingDebtEntry};
use crate::tx::{
    sign_input, tx_hash, LockingCondition, OutPoint, Transaction, TxInput, TxKind, TxOutput,
    DEBT_INDEX, OUTSTANDING_INDEX,
};
use crate::types::{Amount, Hash32, Keypair, PubKey, Signature};

/// A request to issue a loan to one or more debtor outputs.
#[derive(Debug, Clone)]
pub struct IssuanceRequest {
    pub issuer: Keypair,
    /// Recipient lock hashes and amounts; splitting a loan across several
    /// outputs obscures recipients without changing the aggregate.
    pub debtor_outputs: Vec<(Hash32, Amount)>,
    pub loan_type: u16,
}

/// A request to repay (part of) an outstanding debt entry.
#[derive(Debug, Clone)]
pub struct RepaymentRequest {
    pub odt_hash: Hash32,
    pub payer: Keypair,
    pub amount: Amount,
    /// Outpoints funding the repayment, owned by the payer.
    pub funding: Vec<OutPoint>,
}

/// Builds the signed debt transaction and its outstanding-debt mirror.
///
/// The pair is atomic by construction: committing the debt transaction
/// deterministically yields the same outstanding-debt transaction on every
/// validator via [`derive_outstanding_tx_for`].
pub fn issue_debt(
    issuers: &BTreeSet<PubKey>,
    req: &IssuanceRequest,
) -> Result<(Transaction, Transaction), BuildError> {
    if !issuers.contains(&req.issuer.public()) {
        return Err(BuildError::UnauthorizedIssuer);
    }
    let debt_tx = build_issuance(&req.issuer, &req.debtor_outputs, req.loan_type)?;
    let odt = derive_outstanding_tx_for(&debt_tx)?;
    Ok((debt_tx, odt))
}

/// Signed debt transaction without the issuer-set check; the network
/// enforces permissioning, so clients may construct and let the node refuse.
pub fn build_issuance(
    issuer: &Keypair,
    debtor_outputs: &[(Hash32, Amount)],
    loan_type: u16,
) -> Result<Transaction, BuildError> {
    if debtor_outputs.is_empty() {
        return Err(BuildError::EmptyOutputs);
    }
    if loan_type == 0 {
        return Err(BuildError::ZeroLoanType);
    }
    if debtor_outputs.iter().any(|(_, amount)| amount.0 == 0) {
        return Err(BuildError::ZeroAmount);
    }
    Amount::checked_sum(debtor_outputs.iter().map(|(_, a)| *a))?;
    let mut tx = Transaction::new(TxKind::Debt);
    tx.loan_type = loan_type;
    // The input's hash field carries the creditor public key.
    tx.inputs.push(TxInput {
        prev_field: Hash32(issuer.public().0),
        output_index: DEBT_INDEX,
        unlock_pubkey: PubKey([0u8; 32]),
        unlock_sig: Signature::ZERO,
    });
    tx.outputs = debtor_outputs
        .iter()
        .map(|(hash, amount)| TxOutput {
            amount: *amount,
            lock: LockingCondition::to_key_hash(*hash),
        })
        .collect();
    sign_input(tx, 0, issuer)
}

/// The outstanding-debt transaction for a given lineage state: one unmatched
/// input naming the originating debt transaction, one output owed to the
/// creditor. System-generated and unsigned; never enters a block.
pub fn derive_outstanding_tx(
    debt_origin: Hash32,
    creditor_lock: Hash32,
    remaining: Amount,
    loan_type: u16,
) -> Transaction {
    debug_assert!(remaining.0 > 0);
    let mut odt = Transaction::new(TxKind::OutstandingDebt);
    odt.loan_type = loan_type;
    odt.debt_ref = debt_origin;
    odt.inputs.push(TxInput {
        prev_field: debt_origin,
        output_index: OUTSTANDING_INDEX,
        unlock_pubkey: PubKey([0u8; 32]),
        unlock_sig: Signature::ZERO,
    });
    odt.outputs.push(TxOutput {
        amount: remaining,
        lock: LockingCondition::to_key_hash(creditor_lock),
    });
    odt
}

/// The outstanding-debt mirror of a debt transaction, derived from the
/// committed transaction alone so every validator computes the same pair.
pub fn derive_outstanding_tx_for(debt_tx: &Transaction) -> Result<Transaction, BuildError> {
    debug_assert_eq!(debt_tx.kind, TxKind::Debt);
    let creditor = PubKey(debt_tx.inputs[0].prev_field.0);
    let total = debt_tx.output_sum()?;
    Ok(derive_outstanding_tx(
        tx_hash(debt_tx)?,
        creditor.key_hash(),
        total,
        debt_tx.loan_type,
    ))
}

/// Greedy largest-first selection from an explicit candidate list, ties
/// broken by outpoint order. Candidates are whatever view the caller has:
/// the committed pool, a pending snapshot, or a node's balance payload.
pub fn select_from(
    candidates: &[(OutPoint, Amount)],
    target: Amount,
) -> Result<Vec<OutPoint>, BuildError> {
    let mut sorted: Vec<&(OutPoint, Amount)> = candidates.iter().collect();
    sorted.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut picked = Vec::new();
    let mut sum: u128 = 0;
    for (outpoint, amount) in sorted {
        if sum >= target.0 as u128 {
            break;
        }
        picked.push(*outpoint);
        sum += amount.0 as u128;
    }
    if sum < target.0 as u128 {
        return Err(BuildError::InsufficientFunds {
            needed: target.0,
            available: u64::try_from(sum).unwrap_or(u64::MAX),
        });
    }
    Ok(picked)
}

/// Greedy largest-first selection of the owner's UTXOs covering `target`.
pub fn select_utxos(
    state: &LedgerState,
    owner: &Hash32,
    target: Amount,
) -> Result<Vec<OutPoint>, BuildError> {
    select_from(&state.utxos_of(owner), target)
}

fn resolve_funding(
    state: &LedgerState,
    payer_lock: &Hash32,
    funding: &[OutPoint],
) -> Result<Vec<(OutPoint, Amount)>, BuildError> {
    funding
        .iter()
        .map(|outpoint| {
            let utxo = state
                .utxos
                .get(outpoint)
                .ok_or(BuildError::UnknownOutpoint(*outpoint))?;
            if utxo.lock.pubkey_hash != *payer_lock {
                return Err(BuildError::NotOwned(*outpoint));
            }
            Ok((*outpoint, utxo.amount))
        })
        .collect()
}

/// Signed normal transaction paying `amount` to `to` out of explicit inputs,
/// with change back to the payer. Output 0 is the payment.
pub fn build_payment_from(
    payer: &Keypair,
    inputs: &[(OutPoint, Amount)],
    to: LockingCondition,
    amount: Amount,
    debt_ref: Hash32,
) -> Result<Transaction, BuildError> {
    if amount.0 == 0 {
        return Err(BuildError::ZeroAmount);
    }
    let total = Amount::checked_sum(inputs.iter().map(|(_, a)| *a))?;
    if total < amount {
        return Err(BuildError::InsufficientFunds {
            needed: amount.0,
            available: total.0,
        });
    }
    let mut tx = Transaction::new(TxKind::Normal);
    tx.debt_ref = debt_ref;
    for (outpoint, _) in inputs {
        tx.inputs.push(TxInput::spend(*outpoint));
    }
    tx.outputs.push(TxOutput { amount, lock: to });
    let change = total.0 - amount.0;
    if change > 0 {
        tx.outputs.push(TxOutput {
            amount: Amount(change),
            lock: LockingCondition::to_key(&payer.public()),
        });
    }
    for index in 0..tx.inputs.len() {
        tx = sign_input(tx, index, payer)?;
    }
    Ok(tx)
}

/// Plain transfer funded by greedy selection over the given state view.
pub fn build_transfer(
    state: &LedgerState,
    from: &Keypair,
    to: LockingCondition,
    amount: Amount,
) -> Result<Transaction, BuildError> {
    let owner = from.public_hash();
    let picked = select_utxos(state, &owner, amount)?;
    let inputs = resolve_funding(state, &owner, &picked)?;
    build_payment_from(from, &inputs, to, amount, Hash32::ZERO)
}

/// Repayment pair from an explicit debt entry and funding list: the signed
/// payment transaction and, for partial repayments, the successor
/// outstanding-debt transaction the network will derive on commit.
pub fn build_repayment(
    payer: &Keypair,
    entry: &OutstandingDebtEntry,
    amount: Amount,
    funding: &[(OutPoint, Amount)],
) -> Result<(Transaction, Option<Transaction>), BuildError> {
    if amount.0 == 0 {
        return Err(BuildError::ZeroAmount);
    }
    if amount > entry.remaining {
        return Err(BuildError::FullRepaymentRequired {
            remaining: entry.remaining.0,
        });
    }
    let payment = build_payment_from(
        payer,
        funding,
        LockingCondition::to_key_hash(entry.creditor_lock),
        amount,
        entry.debt_origin,
    )?;
    let successor = if amount < entry.remaining {
        Some(derive_outstanding_tx(
            entry.debt_origin,
            entry.creditor_lock,
            Amount(entry.remaining.0 - amount.0),
            entry.loan_type,
        ))
    } else {
        None
    };
    Ok((payment, successor))
}

/// Repays the entire remaining amount of an entry; the committed result
/// removes the entry from the debt pool.
pub fn repay_full(state: &LedgerState, req: &RepaymentRequest) -> Result<Transaction, BuildError> {
    let entry = state
        .debts
        .get(&req.odt_hash)
        .ok_or(BuildError::UnknownDebt(req.odt_hash))?;
    if req.amount != entry.remaining {
        return Err(BuildError::PartialRepaymentRequired {
            remaining: entry.remaining.0,
        });
    }
    let inputs = resolve_funding(state, &req.payer.public_hash(), &req.funding)?;
    let (payment, successor) = build_repayment(&req.payer, entry, req.amount, &inputs)?;
    debug_assert!(successor.is_none());
    Ok(payment)
}

/// Repays part of an entry; the committed result replaces the entry with a
/// successor carrying the strictly smaller remainder.
pub fn repay_partial(
    state: &LedgerState,
    req: &RepaymentRequest,
) -> Result<(Transaction, Transaction), BuildError> {
    let entry = state
        .debts
        .get(&req.odt_hash)
        .ok_or(BuildError::UnknownDebt(req.odt_hash))?;
    if req.amount.0 == 0 {
        return Err(BuildError::ZeroAmount);
    }
    if req.amount >= entry.remaining {
        return Err(BuildError::FullRepaymentRequired {
            remaining: entry.remaining.0,
        });
    }
    let inputs = resolve_funding(state, &req.payer.public_hash(), &req.funding)?;
    let (payment, successor) = build_repayment(&req.payer, entry, req.amount, &inputs)?;
    Ok((payment, successor.expect("partial repayment has a successor")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genesis::{build_genesis, Allocation, Genesis};
    use crate::types::sha256;

    fn key(byte: u8) -> Keypair {
        Keypair::from_seed([byte; 32])
    }

    fn state_with(allocs: &[(&Keypair, u64)], issuer: &Keypair) -> LedgerState {
        let genesis = Genesis {
            validators: vec![issuer.public()],
            issuers: vec![issuer.public()],
            allocations: allocs
                .iter()
                .map(|(k, amount)| Allocation {
                    pubkey_hash: k.public_hash(),
                    amount: Amount(*amount),
                })
                .collect(),
        };
        build_genesis(&genesis).unwrap().0
    }

    /// Issues `outputs` to the debtor and applies the result.
    fn issue(state: &mut LedgerState, issuer: &Keypair, outputs: &[(Hash32, u64)]) -> (Hash32, Hash32) {
        let (debt_tx, odt) = issue_debt(
            &state.issuers,
            &IssuanceRequest {
                issuer: issuer.clone(),
                debtor_outputs: outputs.iter().map(|(h, a)| (*h, Amount(*a))).collect(),
                loan_type: 1,
            },
        )
        .unwrap();
        state.apply_transaction(&debt_tx).unwrap();
        (tx_hash(&debt_tx).unwrap(), tx_hash(&odt).unwrap())
    }

    #[test]
    fn issuance_split_matches_single_aggregate() {
        let (issuer, debtor) = (key(1), key(2));
        let mut split = state_with(&[], &issuer);
        issue(
            &mut split,
            &issuer,
            &[(debtor.public_hash(), 60), (debtor.public_hash(), 40)],
        );
        let mut single = state_with(&[], &issuer);
        issue(&mut single, &issuer, &[(debtor.public_hash(), 100)]);
        assert_eq!(split.aggregate_debt(), single.aggregate_debt());
        assert_eq!(split.aggregate_debt(), Amount(100));
    }

    #[test]
    fn issuance_rejects_bad_requests() {
        let issuer = key(1);
        let issuers = BTreeSet::from([issuer.public()]);
        let outsider = key(9);
        let req = IssuanceRequest {
            issuer: outsider,
            debtor_outputs: vec![(Hash32([1; 32]), Amount(10))],
            loan_type: 1,
        };
        assert_eq!(issue_debt(&issuers, &req), Err(BuildError::UnauthorizedIssuer));

        let req = IssuanceRequest {
            issuer: issuer.clone(),
            debtor_outputs: vec![],
            loan_type: 1,
        };
        assert_eq!(issue_debt(&issuers, &req), Err(BuildError::EmptyOutputs));

        let req = IssuanceRequest {
            issuer: issuer.clone(),
            debtor_outputs: vec![(Hash32([1; 32]), Amount(10))],
            loan_type: 0,
        };
        assert_eq!(issue_debt(&issuers, &req), Err(BuildError::ZeroLoanType));
    }

    #[test]
    fn full_repayment_exact_and_with_change() {
        let (issuer, debtor) = (key(1), key(2));
        // Exact: 70 owed, funded by one 70-unit issuance UTXO.
        let mut state = state_with(&[], &issuer);
        let (_, odt_hash) = issue(&mut state, &issuer, &[(debtor.public_hash(), 70)]);
        let funding = select_utxos(&state, &debtor.public_hash(), Amount(70)).unwrap();
        let payment = repay_full(
            &state,
            &RepaymentRequest {
                odt_hash,
                payer: debtor.clone(),
                amount: Amount(70),
                funding,
            },
        )
        .unwrap();
        assert_eq!(payment.outputs.len(), 1);
        state.apply_transaction(&payment).unwrap();
        assert!(state.debts.is_empty());
        assert_eq!(state.balance_of(&issuer.public_hash()), Amount(70));

        // With change: 70 owed, funded by a 100-unit genesis UTXO.
        let mut state = state_with(&[(&debtor, 100)], &issuer);
        let (_, odt_hash) = issue(&mut state, &issuer, &[(key(5).public_hash(), 70)]);
        let funding = select_utxos(&state, &debtor.public_hash(), Amount(70)).unwrap();
        let payment = repay_full(
            &state,
            &RepaymentRequest {
                odt_hash,
                payer: debtor.clone(),
                amount: Amount(70),
                funding,
            },
        )
        .unwrap();
        assert_eq!(payment.outputs.len(), 2);
        assert_eq!(payment.outputs[0].amount, Amount(70));
        assert_eq!(payment.outputs[1].amount, Amount(30));
        assert_eq!(
            payment.outputs[1].lock.pubkey_hash,
            debtor.public_hash()
        );
    }

    #[test]
    fn repayment_insufficient_funding() {
        let (issuer, debtor) = (key(1), key(2));
        let mut state = state_with(&[(&debtor, 50)], &issuer);
        let (_, odt_hash) = issue(&mut state, &issuer, &[(key(5).public_hash(), 70)]);
        let funding = state
            .utxos_of(&debtor.public_hash())
            .iter()
            .map(|(op, _)| *op)
            .collect();
        let err = repay_full(
            &state,
            &RepaymentRequest {
                odt_hash,
                payer: debtor.clone(),
                amount: Amount(70),
                funding,
            },
        )
        .unwrap_err();
        assert_eq!(
            err,
            BuildError::InsufficientFunds {
                needed: 70,
                available: 50
            }
        );
    }

    #[test]
    fn partial_repayment_produces_smaller_successor() {
        let (issuer, debtor) = (key(1), key(2));
        let mut state = state_with(&[], &issuer);
        let (origin, odt_hash) = issue(&mut state, &issuer, &[(debtor.public_hash(), 100)]);
        let funding = select_utxos(&state, &debtor.public_hash(), Amount(30)).unwrap();
        let (payment, successor) = repay_partial(
            &state,
            &RepaymentRequest {
                odt_hash,
                payer: debtor.clone(),
                amount: Amount(30),
                funding,
            },
        )
        .unwrap();
        assert_eq!(payment.debt_ref, origin);
        assert_eq!(successor.outputs[0].amount, Amount(70));
        assert_eq!(successor.debt_ref, origin);
        state.apply_transaction(&payment).unwrap();
        assert_eq!(state.aggregate_debt(), Amount(70));
        let entry = state.debts.by_origin(&origin).unwrap();
        assert_eq!(entry.odt_hash, tx_hash(&successor).unwrap());
        assert_eq!(state.balance_of(&issuer.public_hash()), Amount(30));
    }

    #[test]
    fn partial_with_full_amount_is_redirected() {
        let (issuer, debtor) = (key(1), key(2));
        let mut state = state_with(&[], &issuer);
        let (_, odt_hash) = issue(&mut state, &issuer, &[(debtor.public_hash(), 100)]);
        let funding = select_utxos(&state, &debtor.public_hash(), Amount(100)).unwrap();
        let err = repay_partial(
            &state,
            &RepaymentRequest {
                odt_hash,
                payer: debtor.clone(),
                amount: Amount(100),
                funding,
            },
        )
        .unwrap_err();
        assert_eq!(err, BuildError::FullRepaymentRequired { remaining: 100 });
    }

    #[test]
    fn unknown_entry_is_an_error() {
        let (issuer, debtor) = (key(1), key(2));
        let state = state_with(&[(&debtor, 10)], &issuer);
        let err = repay_full(
            &state,
            &RepaymentRequest {
                odt_hash: sha256(b"nope"),
                payer: debtor,
                amount: Amount(1),
                funding: vec![],
            },
        )
        .unwrap_err();
        assert!(matches!(err, BuildError::UnknownDebt(_)));
    }

    #[test]
    fn two_partials_equal_one_full() {
        let (issuer, debtor) = (key(1), key(2));

        let run = |repayments: &[u64]| -> (Amount, Amount) {
            let mut state = state_with(&[], &issuer);
            let (origin, _) = issue(&mut state, &issuer, &[(debtor.public_hash(), 100)]);
            for chunk in repayments {
                let entry = state.debts.by_origin(&origin).unwrap().clone();
                let funding =
                    select_utxos(&state, &debtor.public_hash(), Amount(*chunk)).unwrap();
                let req = RepaymentRequest {
                    odt_hash: entry.odt_hash,
                    payer: debtor.clone(),
                    amount: Amount(*chunk),
                    funding,
                };
                let payment = if Amount(*chunk) == entry.remaining {
                    repay_full(&state, &req).unwrap()
                } else {
                    repay_partial(&state, &req).unwrap().0
                };
                state.apply_transaction(&payment).unwrap();
            }
            (
                state.balance_of(&issuer.public_hash()),
                state.aggregate_debt(),
            )
        };

        assert_eq!(run(&[100]), run(&[30, 70]));
        assert_eq!(run(&[100]), (Amount(100), Amount(0)));
    }

    #[test]
    fn selection_is_greedy_largest_first() {
        let candidates: Vec<(OutPoint, Amount)> = [50u64, 30, 20]
            .iter()
            .enumerate()
            .map(|(i, a)| {
                (
                    OutPoint {
                        tx_hash: Hash32([i as u8; 32]),
                        index: 0,
                    },
                    Amount(*a),
                )
            })
            .collect();
        let picked = select_from(&candidates, Amount(60)).unwrap();
        assert_eq!(picked, vec![candidates[0].0, candidates[1].0]);

        let single = vec![(candidates[0].0, Amount(50))];
        assert_eq!(select_from(&single, Amount(50)).unwrap(), vec![candidates[0].0]);

        let small: Vec<_> = candidates.iter().map(|(op, _)| (*op, Amount(10))).take(2).collect();
        assert_eq!(
            select_from(&small, Amount(30)),
            Err(BuildError::InsufficientFunds {
                needed: 30,
                available: 20
            })
        );
    }

    // Random repayment sequences always drain the entry, payments sum to the
    // issuance, and each successor is strictly smaller.
    #[test]
    fn random_partitions_terminate_and_conserve() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(42);
        let (issuer, debtor) = (key(1), key(2));
        for _ in 0..50 {
            let total: u64 = rng.gen_range(1..500);
            let mut state = state_with(&[], &issuer);
            let (origin, _) = issue(&mut state, &issuer, &[(debtor.public_hash(), total)]);
            let mut paid = 0u64;
            let mut last_remaining = total;
            while let Some(entry) = state.debts.by_origin(&origin).cloned() {
                assert!(entry.remaining.0 <= last_remaining);
                let chunk = rng.gen_range(1..=entry.remaining.0);
                let funding =
                    select_utxos(&state, &debtor.public_hash(), Amount(chunk)).unwrap();
                let req = RepaymentRequest {
                    odt_hash: entry.odt_hash,
                    payer: debtor.clone(),
                    amount: Amount(chunk),
                    funding,
                };
                let payment = if chunk == entry.remaining.0 {
                    repay_full(&state, &req).unwrap()
                } else {
                    let (payment, successor) = repay_partial(&state, &req).unwrap();
                    assert!(successor.outputs[0].amount.0 < entry.remaining.0);
                    payment
                };
                state.apply_transaction(&payment).unwrap();
                paid += chunk;
                last_remaining = entry.remaining.0 - chunk.min(entry.remaining.0);
                if let Some(next) = state.debts.by_origin(&origin) {
                    assert_eq!(next.remaining.0, entry.remaining.0 - chunk);
                }
            }
            assert_eq!(paid, total);
            assert_eq!(state.aggregate_debt(), Amount(0));
            assert_eq!(state.balance_of(&issuer.public_hash()), Amount(total));
        }
    }
}
