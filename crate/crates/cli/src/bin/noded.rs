//! Single-validator node daemon serving the JSON HTTP surface.
//!
//! POST /tx admits a hex-encoded transaction; on acceptance the node seals
//! it into a block immediately, so queries right after a successful submit
//! already reflect it. GET endpoints: /balance/{hash}, /debt/aggregate,
//! /debt/creditor/{hash}, /debt/entry/{odt_hash}, /block/{n}, /status.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use utxo_debt_core::abci::App;
use utxo_debt_core::genesis::Genesis;

#[derive(Parser)]
#[command(name = "noded", about = "Debt-carrying UTXO ledger node")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Start a node from a genesis file.
    Run {
        /// Genesis JSON: {"validators": [..], "issuers": [..],
        /// "allocations": [{"pubkey_hash": .., "amount": ..}]}.
        #[arg(long)]
        genesis: PathBuf,
        /// Listen address; port 0 picks a free one (printed on startup).
        #[arg(long, default_value = "127.0.0.1:26659")]
        listen: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return ExitCode::from(1);
        }
    };
    let Command::Run { genesis, listen } = cli.command;
    match serve(&genesis, &listen) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn serve(genesis_path: &PathBuf, listen: &str) -> Result<(), String> {
    let raw = std::fs::read_to_string(genesis_path)
        .map_err(|e| format!("cannot read genesis {}: {e}", genesis_path.display()))?;
    let genesis = Genesis::from_json(&raw).map_err(|e| e.to_string())?;
    let mut app = App::new(genesis).map_err(|e| e.to_string())?;

    use std::io::Write;

    let server = tiny_http::Server::http(listen).map_err(|e| format!("cannot bind {listen}: {e}"))?;
    let addr = server.server_addr();
    println!("listening on http://{addr}");
    // Make the address visible to whoever spawned us before blocking.
    let _ = std::io::stdout().flush();

    for mut request in server.incoming_requests() {
        let method = request.method().to_string();
        let path = request.url().to_string();
        let mut body = String::new();
        if request.as_reader().read_to_string(&mut body).is_err() {
            body.clear();
        }

        let response = app.handle_http(&method, &path, &body);
        if method == "POST" && path.trim_end_matches('/') == "/tx" && response.code == 0 {
            app.commit_pending(0);
        }

        let json = serde_json::to_string(&response).expect("response serializes");
        let header = tiny_http::Header::from_bytes(
            &b"Content-Type"[..],
            &b"application/json"[..],
        )
        .expect("static header");
        let _ = request.respond(tiny_http::Response::from_string(json).with_header(header));
    }
    Ok(())
}
