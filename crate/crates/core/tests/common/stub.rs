//! In-process line-JSON scorer for bridge tests.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use serde_json::{json, Value};

/// What to send back for the `n`-th request (0-based, across connections).
/// `None` closes the connection without replying.
pub type Handler = dyn Fn(usize, &Value) -> Option<Vec<String>> + Send + Sync;

pub struct Stub {
    pub addr: String,
    pub requests: Arc<Mutex<Vec<Value>>>,
    pub connections: Arc<AtomicUsize>,
}

pub fn spawn_stub(handler: Box<Handler>) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let requests = Arc::new(Mutex::new(Vec::new()));
    let connections = Arc::new(AtomicUsize::new(0));
    let handler: Arc<Handler> = Arc::from(handler);
    let (reqs, conns) = (requests.clone(), connections.clone());
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            conns.fetch_add(1, Ordering::SeqCst);
            let (handler, reqs) = (handler.clone(), reqs.clone());
            thread::spawn(move || {
                let mut writer = stream.try_clone().unwrap();
                for line in BufReader::new(stream).lines() {
                    let Ok(line) = line else { break };
                    let req: Value = serde_json::from_str(&line).unwrap();
                    let n = {
                        let mut r = reqs.lock().unwrap();
                        r.push(req.clone());
                        r.len() - 1
                    };
                    match handler(n, &req) {
                        Some(lines) => {
                            for l in lines {
                                writer.write_all(l.as_bytes()).unwrap();
                                writer.write_all(b"\n").unwrap();
                            }
                        }
                        None => {
                            let _ = writer.shutdown(std::net::Shutdown::Both);
                            break;
                        }
                    }
                }
            });
        }
    });
    Stub {
        addr,
        requests,
        connections,
    }
}

/// Replies with `value` for every item.
pub fn constant_reply(req: &Value, value: Value) -> String {
    let n = req["items"].as_array().map_or(0, Vec::len);
    json!({"id": req["id"], "scores": vec![value; n]}).to_string()
}

/// 0.5 for every `score` item, `null` when the premise mentions "abstain".
pub fn echo_handler() -> Box<Handler> {
    Box::new(|_, req| {
        let scores: Vec<Value> = req["items"]
            .as_array()
            .unwrap()
            .iter()
            .map(|it| {
                if it["premise"].as_str().is_some_and(|p| p.contains("abstain")) {
                    Value::Null
                } else {
                    json!(0.5)
                }
            })
            .collect();
        Some(vec![json!({"id": req["id"], "scores": scores}).to_string()])
    })
}
