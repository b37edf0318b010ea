//! Client for out-of-process scorers speaking `chadpod-scorer/1`.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::Duration;

use serde_json::Value;

use super::protocol::{parse_reply, write_line, Hello, HelloReply, Reply};
use super::{validate_requests, Probability, ScoreRequest, Scorer, ScorerError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

/// Where the scorer lives.
///
/// `exec:<program> [args...]` spawns a child and talks over its stdio
/// (arguments are split on whitespace, no shell). `tcp:<host>:<port>`
/// connects to a listening server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Exec { program: String, args: Vec<String> },
    Tcp(String),
}

impl FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("exec:") {
            let mut parts = rest.split_whitespace().map(str::to_string);
            let program = parts.next().ok_or("exec endpoint needs a program")?;
            Ok(Endpoint::Exec { program, args: parts.collect() })
        } else if let Some(rest) = s.strip_prefix("tcp:") {
            let addr = rest.trim_start_matches("//");
            match addr.rsplit_once(':') {
                Some((host, port)) if !host.is_empty() && port.parse::<u16>().is_ok() => Ok(Endpoint::Tcp(addr.to_string())),
                _ => Err(format!("tcp endpoint must be tcp:<host>:<port>, got `{s}`")),
            }
        } else {
            Err(format!("unknown endpoint `{s}`; expected exec:<program> or tcp:<host>:<port>"))
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Exec { program, args } => {
                write!(f, "exec:{program}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                Ok(())
            }
            Endpoint::Tcp(addr) => write!(f, "tcp:{addr}"),
        }
    }
}

type Line = Result<String, String>;

pub struct ExternalScorer {
    endpoint: Endpoint,
    server_name: String,
    outgoing: Option<Sender<String>>,
    incoming: Receiver<Line>,
    child: Option<Child>,
    timeout: Duration,
    broken: Option<String>,
}

fn spawn_reader<R: Read + Send + 'static>(reader: R) -> Receiver<Line> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(reader).lines() {
            let item = line.map_err(|e| e.to_string());
            let stop = item.is_err();
            if tx.send(item).is_err() || stop {
                break;
            }
        }
    });
    rx
}

fn spawn_writer<W: Write + Send + 'static>(mut writer: W) -> Sender<String> {
    let (tx, rx) = mpsc::channel::<String>();
    thread::spawn(move || {
        for line in rx {
            if writer.write_all(line.as_bytes()).and_then(|_| writer.flush()).is_err() {
                break;
            }
        }
    });
    tx
}

impl fmt::Debug for ExternalScorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExternalScorer")
            .field("endpoint", &self.endpoint)
            .field("server_name", &self.server_name)
            .field("timeout", &self.timeout)
            .field("broken", &self.broken)
            .finish_non_exhaustive()
    }
}

impl ExternalScorer {
    pub fn connect(endpoint: &Endpoint, timeout: Duration) -> Result<Self, ScorerError> {
        let conn = |e: std::io::Error| ScorerError::Connection(format!("{endpoint}: {e}"));
        let (outgoing, incoming, child) = match endpoint {
            Endpoint::Exec { program, args } => {
                let mut child = Command::new(program)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(conn)?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                (spawn_writer(stdin), spawn_reader(stdout), Some(child))
            }
            Endpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(conn)?;
                let read_half = stream.try_clone().map_err(conn)?;
                (spawn_writer(stream), spawn_reader(read_half), None)
            }
        };
        let mut scorer = ExternalScorer {
            endpoint: endpoint.clone(),
            server_name: String::new(),
            outgoing: Some(outgoing),
            incoming,
            child,
            timeout,
            broken: None,
        };
        scorer.handshake()?;
        Ok(scorer)
    }

    fn send(&self, value: &impl serde::Serialize) -> Result<(), ScorerError> {
        let mut buf = Vec::new();
        write_line(&mut buf, value).map_err(|e| ScorerError::Connection(e.to_string()))?;
        let line = String::from_utf8(buf).expect("serde_json emits UTF-8");
        self.outgoing
            .as_ref()
            .and_then(|tx| tx.send(line).ok())
            .ok_or_else(|| ScorerError::Connection("scorer input closed".into()))
    }

    fn handshake(&mut self) -> Result<(), ScorerError> {
        self.send(&Hello::current())?;
        let line = loop {
            match self.incoming.recv_timeout(self.timeout) {
                Ok(Ok(line)) if line.trim().is_empty() => continue,
                Ok(Ok(line)) => break line,
                Ok(Err(e)) => return Err(ScorerError::Handshake(e)),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(ScorerError::Handshake(format!("no reply within {:?}", self.timeout)))
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(ScorerError::Handshake("scorer closed the stream".into()))
                }
            }
        };
        let reply: HelloReply = serde_json::from_str(&line)
            .map_err(|e| ScorerError::Handshake(format!("unreadable reply `{line}`: {e}")))?;
        if !reply.ok {
            return Err(ScorerError::Handshake(reply.error.unwrap_or_else(|| "rejected".into())));
        }
        self.server_name = reply.name.unwrap_or_else(|| "unnamed".into());
        Ok(())
    }

    pub fn server_name(&self) -> &str {
        &self.server_name
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    /// Scores a batch, reporting per-request failures individually.
    ///
    /// The outer error covers failures that cannot be attributed to one
    /// request. After a timeout the connection is left unusable.
    pub fn score_each(&mut self, requests: &[ScoreRequest]) -> Result<Vec<Result<Probability, ScorerError>>, ScorerError> {
        if let Some(reason) = &self.broken {
            return Err(ScorerError::Connection(reason.clone()));
        }
        validate_requests(requests)?;
        for r in requests {
            self.send(r)?;
        }
        let mut pending: HashMap<&str, usize> = requests.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
        let mut results: Vec<Option<Result<Probability, ScorerError>>> = vec![None; requests.len()];

        while !pending.is_empty() {
            let line = match self.incoming.recv_timeout(self.timeout) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => {
                    self.broken = Some(format!("read failed: {e}"));
                    return Err(ScorerError::Connection(e));
                }
                Err(RecvTimeoutError::Timeout) => {
                    for (&id, &i) in &pending {
                        results[i] = Some(Err(ScorerError::Timeout { id: id.to_string() }));
                    }
                    self.broken = Some("scorer unusable after a timeout".into());
                    break;
                }
                Err(RecvTimeoutError::Disconnected) => {
                    self.broken = Some("scorer closed the stream".into());
                    return Err(ScorerError::Connection(format!(
                        "scorer closed the stream with {} requests unanswered",
                        pending.len()
                    )));
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            let reply = parse_reply(&line).map_err(|message| ScorerError::Malformed { id: None, message })?;
            let (id, outcome) = match reply {
                Reply::Score { id, p } => {
                    let outcome = match p {
                        Value::Number(n) => {
                            let p = n.as_f64().unwrap_or(f64::NAN);
                            Probability::new(p).ok_or(ScorerError::OutOfRange { id: id.clone(), p })
                        }
                        other => Err(ScorerError::Malformed {
                            id: Some(id.clone()),
                            message: format!("`p` must be a number, got {other}"),
                        }),
                    };
                    (id, outcome)
                }
                Reply::Error { id: Some(id), message } => {
                    let outcome = Err(ScorerError::Remote { id: id.clone(), message });
                    (id, outcome)
                }
                Reply::Error { id: None, message } => {
                    return Err(ScorerError::Malformed {
                        id: None,
                        message: format!("scorer rejected a request line: {message}"),
                    })
                }
            };
            let Some(i) = pending.remove(id.as_str()) else {
                return Err(ScorerError::Malformed {
                    id: Some(id),
                    message: "response for an unknown or already answered id".into(),
                });
            };
            results[i] = Some(outcome);
        }
        Ok(results.into_iter().map(|r| r.expect("every request resolved")).collect())
    }
}

impl Scorer for ExternalScorer {
    fn name(&self) -> String {
        format!("external:{} ({})", self.endpoint, self.server_name)
    }

    fn score_batch(&mut self, requests: &[ScoreRequest]) -> Result<Vec<Probability>, ScorerError> {
        self.score_each(requests)?.into_iter().collect()
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        self.outgoing.take();
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
