//! Protocol stub server used for conformance testing and as a stand-in for
//! real external scorers. Misbehaving modes exist to exercise each client
//! error path.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use serde_json::Value;

use super::protocol::{write_line, ErrorResponse, Hello, HelloReply, ScoreResponse, PROTOCOL_VERSION};
use super::ScoreRequest;

#[derive(Debug, Clone, PartialEq)]
pub enum StubMode {
    /// Same `p` for every request; may be out of range on purpose.
    Constant(f64),
    /// `p` looked up by request id, `default` otherwise.
    Oracle { table: HashMap<String, f64>, default: f64 },
    /// Answers every request with a non-JSON line.
    Garbage,
    /// Reads requests but never answers.
    Silent,
    /// Answers every request with an error line.
    Error,
    /// Rejects the handshake.
    RefuseHandshake,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StubConfig {
    pub name: String,
    pub mode: StubMode,
}

impl Default for StubConfig {
    fn default() -> Self {
        StubConfig {
            name: "chadpod-stub".into(),
            mode: StubMode::Constant(0.5),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StubStats {
    pub answered: usize,
    pub malformed: usize,
}

/// Serves one connection until the input ends.
pub fn serve<R: BufRead, W: Write>(input: R, mut output: W, cfg: &StubConfig) -> io::Result<StubStats> {
    let mut stats = StubStats::default();
    let mut lines = input.lines();
    let first = loop {
        match lines.next() {
            None => return Ok(stats),
            Some(line) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
        }
    };
    let hello_ok = matches!(serde_json::from_str::<Hello>(&first), Ok(h) if h.hello == PROTOCOL_VERSION);
    if !hello_ok || cfg.mode == StubMode::RefuseHandshake {
        let error = if hello_ok {
            "handshake refused".to_string()
        } else {
            format!("expected {{\"hello\": \"{PROTOCOL_VERSION}\"}}")
        };
        write_line(&mut output, &HelloReply { ok: false, name: None, error: Some(error) })?;
        return Ok(stats);
    }
    write_line(&mut output, &HelloReply { ok: true, name: Some(cfg.name.clone()), error: None })?;

    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let req = match serde_json::from_str::<ScoreRequest>(&line) {
            Ok(req) => req,
            Err(e) => {
                stats.malformed += 1;
                let id = serde_json::from_str::<Value>(&line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(Value::as_str).map(str::to_string));
                write_line(&mut output, &ErrorResponse { id, error: format!("malformed request: {e}") })?;
                continue;
            }
        };
        match &cfg.mode {
            StubMode::Constant(p) => write_line(&mut output, &ScoreResponse { id: req.id, p: *p })?,
            StubMode::Oracle { table, default } => {
                let p = table.get(&req.id).copied().unwrap_or(*default);
                write_line(&mut output, &ScoreResponse { id: req.id, p })?
            }
            StubMode::Garbage => {
                output.write_all(b"this is not json\n")?;
                output.flush()?;
            }
            StubMode::Silent => continue,
            StubMode::Error => write_line(&mut output, &ErrorResponse { id: Some(req.id), error: "stub error".into() })?,
            StubMode::RefuseHandshake => unreachable!("handshake already refused"),
        }
        stats.answered += 1;
    }
    Ok(stats)
}
