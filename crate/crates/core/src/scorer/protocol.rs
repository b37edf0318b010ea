//! The `chadpod-scorer/1` newline-delimited JSON protocol.
//!
//! ```text
//! client: {"hello": "chadpod-scorer/1"}
//! server: {"ok": true, "name": "..."}
//! client: {"id": "...", "prefix": "...", "postfix": "..."}
//! server: {"id": "...", "p": 0.42}
//! server: {"id": "..." | null, "error": "..."}     (per-line failure)
//! ```
//!
//! Responses may arrive in any order; clients match them by id.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const PROTOCOL_VERSION: &str = "chadpod-scorer/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hello {
    pub hello: String,
}

impl Hello {
    pub fn current() -> Self {
        Hello {
            hello: PROTOCOL_VERSION.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HelloReply {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub id: String,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub id: Option<String>,
    pub error: String,
}

/// A server line as seen by the client. `p` is kept raw so a non-numeric
/// value can be reported against its id.
#[derive(Debug, Clone, PartialEq)]
pub enum Reply {
    Score { id: String, p: Value },
    Error { id: Option<String>, message: String },
}

pub fn parse_reply(line: &str) -> Result<Reply, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("not JSON ({e}): {}", preview(line)))?;
    let Value::Object(map) = value else {
        return Err(format!("expected a JSON object: {}", preview(line)));
    };
    let id = match map.get("id") {
        Some(Value::String(s)) => Some(s.clone()),
        None | Some(Value::Null) => None,
        Some(other) => return Err(format!("id must be a string, got {other}")),
    };
    if let Some(err) = map.get("error") {
        let message = err.as_str().map(str::to_string).unwrap_or_else(|| err.to_string());
        return Ok(Reply::Error { id, message });
    }
    match (id, map.get("p")) {
        (Some(id), Some(p)) => Ok(Reply::Score { id, p: p.clone() }),
        (Some(id), None) => Ok(Reply::Score { id, p: Value::Null }),
        (None, _) => Err(format!("response without id: {}", preview(line))),
    }
}

fn preview(line: &str) -> String {
    let mut s: String = line.chars().take(80).collect();
    if line.chars().count() > 80 {
        s.push('…');
    }
    s
}

/// Writes one JSON value followed by `\n` and flushes.
pub fn write_line<W: Write + ?Sized, T: Serialize>(w: &mut W, value: &T) -> io::Result<()> {
    let mut buf = serde_json::to_vec(value).map_err(io::Error::other)?;
    buf.push(b'\n');
    w.write_all(&buf)?;
    w.flush()
}
