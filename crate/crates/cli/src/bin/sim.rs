//! Replication simulator driver: runs a seeded multi-validator network over
//! a client workload and emits the commit trace as JSON lines.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use utxo_debt_core::sim::{run_simulation, verify_replication, ClientCommand, SimConfig};

#[derive(Parser)]
#[command(name = "sim", about = "Deterministic replication simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and print one JSON commit record per line.
    Run {
        /// SimConfig JSON file.
        #[arg(long)]
        config: PathBuf,
        /// Workload JSON file: a list of client commands.
        #[arg(long)]
        workload: PathBuf,
        /// Write the trace here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Verify replication agreement; exit 2 on divergence.
        #[arg(long)]
        check: bool,
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
    let Command::Run {
        config,
        workload,
        out,
        check,
    } = cli.command;
    match run(&config, &workload, out.as_ref(), check) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(
    config_path: &PathBuf,
    workload_path: &PathBuf,
    out: Option<&PathBuf>,
    check: bool,
) -> Result<ExitCode, String> {
    let config: SimConfig = serde_json::from_str(
        &std::fs::read_to_string(config_path)
            .map_err(|e| format!("cannot read {}: {e}", config_path.display()))?,
    )
    .map_err(|e| format!("bad config: {e}"))?;
    let workload: Vec<ClientCommand> = serde_json::from_str(
        &std::fs::read_to_string(workload_path)
            .map_err(|e| format!("cannot read {}: {e}", workload_path.display()))?,
    )
    .map_err(|e| format!("bad workload: {e}"))?;

    let trace = run_simulation(&config, &workload).map_err(|e| e.to_string())?;
    let jsonl = trace.to_jsonl();
    match out {
        Some(path) => {
            std::fs::write(path, &jsonl).map_err(|e| format!("cannot write trace: {e}"))?
        }
        None => print!("{jsonl}"),
    }
    eprintln!(
        "commits: {}, max height: {}, skipped commands: {}",
        trace.records.len(),
        trace.max_height(),
        trace.skipped_commands
    );

    if check && !verify_replication(&trace) {
        eprintln!("replication check FAILED: validators diverged");
        return Ok(ExitCode::from(2));
    }
    if check {
        eprintln!("replication check passed");
    }
    Ok(ExitCode::SUCCESS)
}
