//! Line-delimited JSON bridge to an external scorer process.
//!
//! Request: `{"id": "<n>", "kind": "score" | "wsd" | "type", "items": [...]}`.
//! Response: `{"id": "<n>", "scores": [...]}`, optionally with `"max_batch"`
//! to shrink later batches, or `{"id": "<n>", "error": "..."}`.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::scorer::{Capabilities, Scorer, ScoringItem};
use crate::error::{Error, Result};
use crate::lexicon::{Disambiguator, Synset};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BridgeTarget {
    /// Spawned child speaking the protocol on stdin/stdout.
    Command { program: String, args: Vec<String> },
    /// `host:port` of a listening scorer.
    Tcp(String),
}

impl std::str::FromStr for BridgeTarget {
    type Err = Error;

    /// `tcp://host:port`, or a shell-free command line split on whitespace.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(addr) = s.strip_prefix("tcp://") {
            return Ok(BridgeTarget::Tcp(addr.to_string()));
        }
        let mut parts = s.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty bridge command".into()))?;
        Ok(BridgeTarget::Command {
            program,
            args: parts.collect(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct BridgeOptions {
    pub timeout: Duration,
    /// Extra attempts after the first.
    pub retries: u32,
    pub max_batch: usize,
}

impl Default for BridgeOptions {
    fn default() -> Self {
        BridgeOptions {
            timeout: Duration::from_secs(60),
            retries: 2,
            max_batch: 64,
        }
    }
}

struct Connection {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    child: Option<Child>,
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

fn spawn_reader<R: std::io::Read + Send + 'static>(r: R) -> Receiver<std::io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(r).lines() {
            let stop = line.is_err();
            if tx.send(line).is_err() || stop {
                break;
            }
        }
    });
    rx
}

fn connect(target: &BridgeTarget) -> Result<Connection> {
    match target {
        BridgeTarget::Command { program, args } => {
            let mut child = Command::new(program)
                .args(args)
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::inherit())
                .spawn()
                .map_err(|e| Error::Bridge(format!("cannot start `{program}`: {e}")))?;
            let stdin = child.stdin.take().expect("piped stdin");
            let stdout = child.stdout.take().expect("piped stdout");
            Ok(Connection {
                writer: Box::new(stdin),
                lines: spawn_reader(stdout),
                child: Some(child),
            })
        }
        BridgeTarget::Tcp(addr) => {
            let stream =
                TcpStream::connect(addr).map_err(|e| Error::Bridge(format!("cannot connect to {addr}: {e}")))?;
            let reader = stream.try_clone().map_err(|e| Error::Bridge(format!("{addr}: {e}")))?;
            Ok(Connection {
                writer: Box::new(stream),
                lines: spawn_reader(reader),
                child: None,
            })
        }
    }
}

enum Failure {
    /// Worth another attempt on the same connection.
    Soft(String),
    /// The connection is unusable; reconnect before retrying.
    Broken(String),
    /// The scorer reported an error; not retried.
    Remote(String),
}

/// One connection, one request in flight. Thread-safe; concurrent callers
/// queue on an internal lock and replies are matched by request id.
pub struct BridgeClient {
    target: BridgeTarget,
    options: BridgeOptions,
    conn: Mutex<Option<Connection>>,
    next_id: AtomicU64,
    negotiated_batch: AtomicUsize,
}

impl std::fmt::Debug for BridgeClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BridgeClient")
            .field("target", &self.target)
            .field("options", &self.options)
            .finish()
    }
}

impl BridgeClient {
    /// Connects eagerly so a bad target fails fast.
    pub fn connect(target: BridgeTarget, options: BridgeOptions) -> Result<BridgeClient> {
        let conn = connect(&target)?;
        Ok(BridgeClient {
            negotiated_batch: AtomicUsize::new(options.max_batch.max(1)),
            target,
            options,
            conn: Mutex::new(Some(conn)),
            next_id: AtomicU64::new(1),
        })
    }

    pub fn max_batch(&self) -> usize {
        self.negotiated_batch.load(Ordering::Relaxed)
    }

    fn attempt(
        &self,
        slot: &mut Option<Connection>,
        kind: &str,
        items: &[Value],
    ) -> std::result::Result<Vec<Value>, Failure> {
        if slot.is_none() {
            *slot = Some(connect(&self.target).map_err(|e| Failure::Broken(e.to_string()))?);
        }
        let conn = slot.as_mut().expect("connected");
        let id = self.next_id.fetch_add(1, Ordering::Relaxed).to_string();
        let mut line = json!({"id": id, "kind": kind, "items": items}).to_string();
        line.push('\n');
        conn.writer
            .write_all(line.as_bytes())
            .and_then(|_| conn.writer.flush())
            .map_err(|e| Failure::Broken(format!("write: {e}")))?;

        let deadline = Instant::now() + self.options.timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            let raw = match conn.lines.recv_timeout(left) {
                Ok(Ok(raw)) => raw,
                Ok(Err(e)) => return Err(Failure::Broken(format!("read: {e}"))),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(Failure::Soft(format!("no reply to request {id} in time")))
                }
                Err(RecvTimeoutError::Disconnected) => return Err(Failure::Broken("scorer closed the stream".into())),
            };
            if raw.trim().is_empty() {
                continue;
            }
            let reply: Value = match serde_json::from_str(&raw) {
                Ok(v) => v,
                Err(e) => return Err(Failure::Soft(format!("malformed reply: {e}"))),
            };
            let reply_id = match reply.get("id") {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Number(n)) => n.to_string(),
                _ => return Err(Failure::Soft("reply without id".into())),
            };
            if reply_id != id {
                log::debug!("dropping stale reply {reply_id} while waiting for {id}");
                continue;
            }
            if let Some(err) = reply.get("error") {
                return Err(Failure::Remote(err.to_string()));
            }
            if let Some(n) = reply.get("max_batch").and_then(Value::as_u64) {
                if n >= 1 {
                    self.negotiated_batch.fetch_min(n as usize, Ordering::Relaxed);
                }
            }
            return match reply.get("scores") {
                Some(Value::Array(scores)) if scores.len() == items.len() => Ok(scores.clone()),
                Some(Value::Array(scores)) => Err(Failure::Soft(format!(
                    "reply carries {} scores for {} items",
                    scores.len(),
                    items.len()
                ))),
                _ => Err(Failure::Soft("reply without a scores array".into())),
            };
        }
    }

    /// Sends one request and returns its `scores` array, order-preserved.
    /// Timeouts and malformed replies are retried up to the configured
    /// bound, reconnecting when the stream broke.
    pub fn call(&self, kind: &str, items: &[Value]) -> Result<Vec<Value>> {
        let mut slot = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        let mut last = String::new();
        for attempt in 0..=self.options.retries {
            match self.attempt(&mut slot, kind, items) {
                Ok(scores) => return Ok(scores),
                Err(Failure::Remote(msg)) => return Err(Error::Bridge(format!("scorer error: {msg}"))),
                Err(Failure::Soft(msg)) => {
                    log::warn!("bridge attempt {} failed: {msg}", attempt + 1);
                    last = msg;
                }
                Err(Failure::Broken(msg)) => {
                    log::warn!("bridge attempt {} failed: {msg}; reconnecting", attempt + 1);
                    *slot = None;
                    last = msg;
                }
            }
        }
        Err(Error::Bridge(format!(
            "giving up after {} attempts: {last}",
            self.options.retries + 1
        )))
    }

    /// Splits `items` into negotiated batches and concatenates the replies.
    pub fn call_batched(&self, kind: &str, items: &[Value]) -> Result<Vec<Value>> {
        let mut out = Vec::with_capacity(items.len());
        let mut rest = items;
        while !rest.is_empty() {
            let n = self.max_batch().min(rest.len());
            out.extend(self.call(kind, &rest[..n])?);
            rest = &rest[n..];
        }
        Ok(out)
    }
}

fn as_score(v: &Value) -> Result<Option<f64>> {
    match v {
        Value::Null => Ok(None),
        Value::Number(n) => n
            .as_f64()
            .filter(|x| x.is_finite())
            .map(Some)
            .ok_or_else(|| Error::Bridge(format!("non-finite score {n}"))),
        other => Err(Error::Bridge(format!("score is not a number: {other}"))),
    }
}

/// `score` requests with premise and hypothesis rendered as text. A `null`
/// score is an abstention.
#[derive(Debug, Clone)]
pub struct BridgeScorer {
    client: Arc<BridgeClient>,
    id: String,
    symmetric: bool,
}

impl BridgeScorer {
    pub fn new(client: Arc<BridgeClient>, id: impl Into<String>, symmetric: bool) -> Self {
        BridgeScorer {
            client,
            id: id.into(),
            symmetric,
        }
    }
}

impl Scorer for BridgeScorer {
    fn id(&self) -> &str {
        &self.id
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            max_batch: self.client.max_batch(),
            symmetric: self.symmetric,
        }
    }

    fn score_batch(&self, items: &[ScoringItem<'_>]) -> Result<Vec<Option<f64>>> {
        let payload: Vec<Value> = items
            .iter()
            .map(|i| json!({"premise": i.premise.text(), "hypothesis": i.hypothesis.render()}))
            .collect();
        self.client
            .call_batched("score", &payload)?
            .iter()
            .map(as_score)
            .collect()
    }
}

/// `wsd` requests: one item per span with its candidate synsets; the reply
/// per item is an array of candidate scores and the highest wins (earliest
/// on ties).
#[derive(Debug, Clone)]
pub struct BridgeDisambiguator {
    client: Arc<BridgeClient>,
}

impl BridgeDisambiguator {
    pub fn new(client: Arc<BridgeClient>) -> Self {
        BridgeDisambiguator { client }
    }
}

impl Disambiguator for BridgeDisambiguator {
    fn choose(&self, span: &str, context: &str, candidates: &[&Synset]) -> Result<String> {
        let item = json!({
            "span": span,
            "context": context,
            "candidates": candidates
                .iter()
                .map(|s| json!({"id": s.id, "lemmas": s.lemmas}))
                .collect::<Vec<_>>(),
        });
        let reply = self.client.call("wsd", &[item])?;
        let scores = reply[0]
            .as_array()
            .filter(|a| a.len() == candidates.len())
            .ok_or_else(|| Error::Bridge("wsd reply must hold one score per candidate".into()))?;
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in scores.iter().enumerate() {
            if let Some(s) = as_score(v)? {
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((i, s));
                }
            }
        }
        let (i, _) = best.ok_or_else(|| Error::Bridge("wsd reply scored no candidate".into()))?;
        Ok(candidates[i].id.clone())
    }

    fn concurrency_safe(&self) -> bool {
        true
    }
}
