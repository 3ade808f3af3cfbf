//! Command-line wallet: key management, transfers, loan issuance and
//! repayment against a running node.
//!
//! Every command prints one JSON object on stdout. Exit codes: 0 success,
//! 1 usage or local error, 2 transport error, 3 node rejection.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::RngCore;
use serde_json::json;

use utxo_debt_cli::client::NodeClient;
use utxo_debt_cli::keystore::Keystore;
use utxo_debt_cli::wallet_ops::{make_repayment, make_transfer, parse_recipients};
use utxo_debt_cli::CliError;
use utxo_debt_core::debt::{build_issuance, derive_outstanding_tx_for};
use utxo_debt_core::ledger::OutstandingDebtEntry;
use utxo_debt_core::tx::{canonical_encode, tx_hash};
use utxo_debt_core::{Amount, Hash32, Keypair};

#[derive(Parser)]
#[command(name = "wallet", about = "Client for the debt-carrying UTXO ledger")]
struct Cli {
    /// Node base URL.
    #[arg(long, global = true, default_value = "http://127.0.0.1:26659")]
    node: String,
    /// Keystore file path.
    #[arg(long, global = true, default_value = "wallet.keys.json")]
    keystore: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a named key pair and store it.
    Keygen { name: String },
    /// Pay an amount to a recipient (keystore name or 64-hex key hash).
    Transfer {
        from: String,
        to: String,
        amount: u64,
    },
    /// Issue a loan to one or more recipients: hash:amount[,hash:amount...]
    /// (names from the keystore also work in place of hashes).
    Issue {
        issuer: String,
        recipients: String,
        #[arg(long)]
        loan_type: u16,
    },
    /// Repay an outstanding debt entry by its hash. The exact remaining
    /// amount settles the loan; anything smaller is a partial repayment.
    Repay {
        payer: String,
        odt_hash: String,
        amount: u64,
    },
    /// Read-only queries.
    Query {
        #[command(subcommand)]
        what: QueryCmd,
    },
}

#[derive(Subcommand)]
enum QueryCmd {
    /// Balance and spendable outputs of a key hash or keystore name.
    Balance { owner: String },
    /// Total outstanding debt across the ledger.
    Aggregate,
    /// Outstanding debt entries owed to a creditor.
    Debts { creditor: String },
    /// Chain height and state root.
    Status,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

/// Resolves a recipient argument: a keystore name or a 64-hex key hash.
fn resolve_owner(keystore: &Keystore, arg: &str) -> Result<Hash32, CliError> {
    if let Ok(key) = keystore.get(arg) {
        return Ok(key.public_hash());
    }
    Hash32::from_hex(arg).ok_or_else(|| {
        CliError::Usage(format!("'{arg}' is neither a keystore name nor 64 hex chars"))
    })
}

fn fetch_entry(client: &NodeClient, odt_hash: &Hash32) -> Result<OutstandingDebtEntry, CliError> {
    let response = client
        .get(&format!("/debt/entry/{}", odt_hash.to_hex()))?
        .into_ok()?;
    serde_json::from_value(response.payload)
        .map_err(|e| CliError::Transport(format!("malformed debt entry payload: {e}")))
}

fn submit(client: &NodeClient, tx: &utxo_debt_core::Transaction) -> Result<Hash32, CliError> {
    let bytes = canonical_encode(tx).map_err(CliError::usage)?;
    let response = client.post_tx(&hex::encode(bytes))?.into_ok()?;
    response.payload["tx_hash"]
        .as_str()
        .and_then(Hash32::from_hex)
        .ok_or_else(|| CliError::Transport("node response lacks tx_hash".into()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let client = NodeClient::new(&cli.node);
    match cli.command {
        Command::Keygen { name } => {
            let mut keystore = Keystore::load(&cli.keystore)?;
            let mut seed = [0u8; 32];
            rand::rngs::OsRng.fill_bytes(&mut seed);
            let key = Keypair::from_seed(seed);
            keystore.add(&name, &key)?;
            keystore.save(&cli.keystore)?;
            println!(
                "{}",
                json!({
                    "name": name,
                    "pubkey": key.public().to_hex(),
                    "pubkey_hash": key.public_hash().to_hex(),
                })
            );
            Ok(())
        }
        Command::Transfer { from, to, amount } => {
            let keystore = Keystore::load(&cli.keystore)?;
            let key = keystore.get(&from)?;
            let to_hash = resolve_owner(&keystore, &to)?;
            let utxos = client.utxos_of(&key.public_hash())?;
            let tx = make_transfer(&key, &utxos, to_hash, Amount(amount))?;
            let hash = submit(&client, &tx)?;
            println!("{}", json!({ "tx_hash": hash.to_hex(), "code": 0 }));
            Ok(())
        }
        Command::Issue {
            issuer,
            recipients,
            loan_type,
        } => {
            let keystore = Keystore::load(&cli.keystore)?;
            let key = keystore.get(&issuer)?;
            let outputs = match parse_recipients(&recipients) {
                Ok(outputs) => outputs,
                // Fall back to resolving names through the keystore.
                Err(_) => recipients
                    .split(',')
                    .map(|part| {
                        let (who, amount) = part.split_once(':').ok_or_else(|| {
                            CliError::Usage(format!("'{part}' is not recipient:amount"))
                        })?;
                        let hash = resolve_owner(&keystore, who.trim())?;
                        let amount: u64 = amount
                            .trim()
                            .parse()
                            .map_err(|e| CliError::Usage(format!("bad amount '{amount}': {e}")))?;
                        Ok((hash, Amount(amount)))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?,
            };
            let debt_tx = build_issuance(&key, &outputs, loan_type)?;
            let odt = derive_outstanding_tx_for(&debt_tx)?;
            let odt_hash = tx_hash(&odt).map_err(CliError::usage)?;
            let hash = submit(&client, &debt_tx)?;
            println!(
                "{}",
                json!({
                    "tx_hash": hash.to_hex(),
                    "odt_hash": odt_hash.to_hex(),
                    "code": 0,
                })
            );
            Ok(())
        }
        Command::Repay {
            payer,
            odt_hash,
            amount,
        } => {
            let keystore = Keystore::load(&cli.keystore)?;
            let key = keystore.get(&payer)?;
            let odt_hash = Hash32::from_hex(&odt_hash)
                .ok_or_else(|| CliError::Usage("odt_hash must be 64 hex chars".into()))?;
            let entry = fetch_entry(&client, &odt_hash)?;
            if amount > entry.remaining.0 {
                return Err(CliError::Usage(format!(
                    "amount {amount} exceeds the remaining debt {}; a full repayment must pay exactly the remainder",
                    entry.remaining.0
                )));
            }
            let utxos = client.utxos_of(&key.public_hash())?;
            let (payment, successor) = make_repayment(&key, &entry, &utxos, Amount(amount))?;
            let next_odt = successor
                .map(|odt| tx_hash(&odt).map_err(CliError::usage))
                .transpose()?;
            let hash = submit(&client, &payment)?;
            println!(
                "{}",
                json!({
                    "tx_hash": hash.to_hex(),
                    "code": 0,
                    "next_odt_hash": next_odt.map(|h| h.to_hex()),
                    "remaining_after": entry.remaining.0 - amount,
                })
            );
            Ok(())
        }
        Command::Query { what } => {
            let keystore = Keystore::load(&cli.keystore)?;
            let path = match what {
                QueryCmd::Balance { owner } => {
                    format!("/balance/{}", resolve_owner(&keystore, &owner)?.to_hex())
                }
                QueryCmd::Aggregate => "/debt/aggregate".to_string(),
                QueryCmd::Debts { creditor } => format!(
                    "/debt/creditor/{}",
                    resolve_owner(&keystore, &creditor)?.to_hex()
                ),
                QueryCmd::Status => "/status".to_string(),
            };
            let response = client.get(&path)?.into_ok()?;
            println!(
                "{}",
                serde_json::to_string_pretty(&response.payload).expect("payload serializes")
            );
            Ok(())
        }
    }
}
