//! Stub `chadpod-scorer/1` server over stdio or TCP.

use std::collections::HashMap;
use std::io::{self, BufReader};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;
use std::thread;

use clap::{Parser, ValueEnum};

use chadpod::dataset::read_examples;
use chadpod::dataset::Label;
use chadpod::scorer::stub::{serve, StubConfig, StubMode};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Misbehave {
    Garbage,
    Silent,
    Error,
    RefuseHandshake,
}

#[derive(Debug, Parser)]
#[command(name = "chadpod-stub-scorer", version, about = "Stub scorer speaking chadpod-scorer/1")]
struct Args {
    /// Answer every request with this probability (not range-checked).
    #[arg(long, conflicts_with_all = ["oracle", "mode"])]
    constant: Option<f64>,
    /// Answer with the gold label from a dataset JSONL (branch = 1, no_branch = 0).
    #[arg(long, conflicts_with = "mode")]
    oracle: Option<PathBuf>,
    /// Probability for ids missing from the oracle file.
    #[arg(long, default_value_t = 0.5, requires = "oracle")]
    oracle_default: f64,
    #[arg(long, value_enum)]
    mode: Option<Misbehave>,
    #[arg(long, default_value = "chadpod-stub")]
    name: String,
    /// Listen on this address instead of stdio.
    #[arg(long)]
    listen: Option<String>,
}

fn build_mode(args: &Args) -> Result<StubMode, String> {
    if let Some(path) = &args.oracle {
        let examples = read_examples(path).map_err(|e| e.to_string())?;
        let table: HashMap<String, f64> = examples
            .into_iter()
            .map(|e| (e.id, if e.label == Label::Branch { 1.0 } else { 0.0 }))
            .collect();
        return Ok(StubMode::Oracle { table, default: args.oracle_default });
    }
    Ok(match args.mode {
        Some(Misbehave::Garbage) => StubMode::Garbage,
        Some(Misbehave::Silent) => StubMode::Silent,
        Some(Misbehave::Error) => StubMode::Error,
        Some(Misbehave::RefuseHandshake) => StubMode::RefuseHandshake,
        None => StubMode::Constant(args.constant.unwrap_or(0.5)),
    })
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let mode = match build_mode(&args) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cfg = StubConfig { name: args.name.clone(), mode };

    let Some(addr) = &args.listen else {
        let stdin = io::stdin().lock();
        let stdout = io::stdout().lock();
        return match serve(stdin, stdout, &cfg) {
            Ok(_) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(4)
            }
        };
    };
    let listener = match TcpListener::bind(addr) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot listen on {addr}: {e}");
            return ExitCode::from(4);
        }
    };
    if let Ok(local) = listener.local_addr() {
        eprintln!("listening on {local}");
    }
    for stream in listener.incoming() {
        let Ok(stream) = stream else { continue };
        let cfg = cfg.clone();
        thread::spawn(move || {
            let Ok(read_half) = stream.try_clone() else { return };
            if let Err(e) = serve(BufReader::new(read_half), stream, &cfg) {
                eprintln!("connection error: {e}");
            }
        });
    }
    ExitCode::SUCCESS
}
