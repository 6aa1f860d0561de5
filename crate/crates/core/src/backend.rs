// SPDX-License-Identifier: Apache-2.0
//! Line-delimited JSON protocol to external caption / code-summary models.
//!
//! The backend is a child process. Each request and reply is one JSON object
//! per line on its stdin/stdout:
//!
//! ```text
//! -> {"kind":"hello"}
//! <- {"name":"...","version":"...","kinds":["caption","code"]}
//! -> {"id":1,"kind":"caption","image_path":"op_001/widget.png"}
//! -> {"id":2,"kind":"code","paths":["save|note,Name↑MethodCall↓Name,db"]}
//! <- {"id":2,"text":"persist the note"}
//! <- {"id":1,"error":"cannot read image"}
//! ```
//!
//! Requests are pipelined; replies may arrive in any order and are routed to
//! their caller by id.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::code::AstPath;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("cannot start backend: {0}")]
    SpawnFailure(String),
    #[error("backend did not answer the handshake in time")]
    HandshakeTimeout,
    #[error("backend protocol error: {0}")]
    ProtocolError(String),
    #[error("backend error: {0}")]
    BackendFailure(String),
    #[error("backend request timed out")]
    Timeout,
    #[error("backend does not provide {0}")]
    UnsupportedKind(BackendKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Caption,
    Code,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Caption => "caption",
            BackendKind::Code => "code",
        })
    }
}

/// Captions a widget image.
pub trait CaptionBackend: Sync {
    fn caption(&self, image_path: &Path) -> Result<String, BackendError>;
}

/// Summarizes a response method from its AST paths.
pub trait CodeBackend: Sync {
    fn code_intent(&self, paths: &[AstPath]) -> Result<String, BackendError>;
}

/// Program and arguments of a backend process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendCommand {
    pub program: String,
    pub args: Vec<String>,
}

impl BackendCommand {
    pub fn new(program: impl Into<String>) -> Self {
        BackendCommand { program: program.into(), args: Vec::new() }
    }

    pub fn arg(mut self, a: impl Into<String>) -> Self {
        self.args.push(a.into());
        self
    }

    /// Split a command line on whitespace. No shell quoting is interpreted.
    pub fn parse(line: &str) -> Option<Self> {
        let mut parts = line.split_whitespace().map(str::to_string);
        let program = parts.next()?;
        Some(BackendCommand { program, args: parts.collect() })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BackendOptions {
    pub handshake_timeout: Duration,
    pub request_timeout: Duration,
}

impl Default for BackendOptions {
    fn default() -> Self {
        BackendOptions {
            handshake_timeout: Duration::from_secs(10),
            request_timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Deserialize)]
struct Hello {
    name: String,
    version: String,
    kinds: Vec<BackendKind>,
}

#[derive(Serialize)]
struct CaptionRequest<'a> {
    id: u64,
    kind: &'static str,
    image_path: &'a str,
}

#[derive(Serialize)]
struct CodeRequest {
    id: u64,
    kind: &'static str,
    paths: Vec<String>,
}

type Reply = Result<String, BackendError>;
/// Outstanding requests, plus ids whose callers gave up waiting so their
/// late replies are dropped instead of treated as unknown.
#[derive(Default)]
struct PendingTable {
    waiting: HashMap<u64, Sender<Reply>>,
    abandoned: HashSet<u64>,
}

type Pending = Arc<Mutex<PendingTable>>;

/// A running backend that completed the handshake.
pub struct BackendHandle {
    pub name: String,
    pub version: String,
    pub kinds: BTreeSet<BackendKind>,
    child: Mutex<Child>,
    stdin: Mutex<Option<ChildStdin>>,
    pending: Pending,
    failure: Arc<Mutex<Option<BackendError>>>,
    next_id: AtomicU64,
    request_timeout: Duration,
    reader: Option<JoinHandle<()>>,
}

impl fmt::Debug for BackendHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BackendHandle")
            .field("name", &self.name)
            .field("version", &self.version)
            .field("kinds", &self.kinds)
            .finish_non_exhaustive()
    }
}

pub fn handshake(cmd: &BackendCommand) -> Result<BackendHandle, BackendError> {
    BackendHandle::spawn(cmd, BackendOptions::default())
}

impl BackendHandle {
    pub fn spawn(cmd: &BackendCommand, opts: BackendOptions) -> Result<BackendHandle, BackendError> {
        let mut child = Command::new(&cmd.program)
            .args(&cmd.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| BackendError::SpawnFailure(format!("{}: {e}", cmd.program)))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");

        let pending: Pending = Arc::default();
        let failure: Arc<Mutex<Option<BackendError>>> = Arc::default();
        let (hello_tx, hello_rx) = mpsc::channel::<Option<String>>();
        let reader = {
            let pending = Arc::clone(&pending);
            let failure = Arc::clone(&failure);
            thread::spawn(move || read_loop(BufReader::new(stdout), hello_tx, pending, failure))
        };

        let fail = |child: &mut Child, e: BackendError| {
            let _ = child.kill();
            let _ = child.wait();
            Err(e)
        };
        if writeln!(stdin, r#"{{"kind":"hello"}}"#).and_then(|_| stdin.flush()).is_err() {
            // The reader still reports what happened on stdout.
            log::debug!("backend closed stdin before the handshake");
        }
        let line = match hello_rx.recv_timeout(opts.handshake_timeout) {
            Ok(Some(line)) => line,
            Ok(None) | Err(RecvTimeoutError::Disconnected) => {
                let status = child.wait().map(|s| s.to_string()).unwrap_or_default();
                return fail(&mut child, BackendError::SpawnFailure(format!("backend exited before handshake ({status})")));
            }
            Err(RecvTimeoutError::Timeout) => return fail(&mut child, BackendError::HandshakeTimeout),
        };
        let hello: Hello = match serde_json::from_str(&line) {
            Ok(h) => h,
            Err(e) => return fail(&mut child, BackendError::ProtocolError(format!("bad handshake reply: {e}"))),
        };
        Ok(BackendHandle {
            name: hello.name,
            version: hello.version,
            kinds: hello.kinds.into_iter().collect(),
            child: Mutex::new(child),
            stdin: Mutex::new(Some(stdin)),
            pending,
            failure,
            next_id: AtomicU64::new(1),
            request_timeout: opts.request_timeout,
            reader: Some(reader),
        })
    }

    fn require(&self, kind: BackendKind) -> Result<(), BackendError> {
        if self.kinds.contains(&kind) {
            Ok(())
        } else {
            Err(BackendError::UnsupportedKind(kind))
        }
    }

    fn call(&self, build: impl FnOnce(u64) -> String) -> Result<String, BackendError> {
        if let Some(e) = self.failure.lock().unwrap().clone() {
            return Err(e);
        }
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let (tx, rx) = mpsc::channel();
        {
            // checked under the table lock so a concurrent shutdown cannot miss this entry
            let mut table = self.pending.lock().unwrap();
            if let Some(e) = self.failure.lock().unwrap().clone() {
                return Err(e);
            }
            table.waiting.insert(id, tx);
        }
        let line = build(id);
        {
            let mut guard = self.stdin.lock().unwrap();
            let written = match guard.as_mut() {
                Some(w) => writeln!(w, "{line}").and_then(|_| w.flush()),
                None => Err(std::io::Error::other("backend stdin closed")),
            };
            if let Err(e) = written {
                self.pending.lock().unwrap().waiting.remove(&id);
                return Err(BackendError::BackendFailure(format!("write failed: {e}")));
            }
        }
        match rx.recv_timeout(self.request_timeout) {
            Ok(reply) => reply,
            Err(RecvTimeoutError::Timeout) => {
                let mut table = self.pending.lock().unwrap();
                if table.waiting.remove(&id).is_some() {
                    table.abandoned.insert(id);
                }
                Err(BackendError::Timeout)
            }
            Err(RecvTimeoutError::Disconnected) => Err(self
                .failure
                .lock()
                .unwrap()
                .clone()
                .unwrap_or_else(|| BackendError::BackendFailure("backend exited".into()))),
        }
    }

    pub fn request_caption(&self, image_path: &Path) -> Result<String, BackendError> {
        self.require(BackendKind::Caption)?;
        let path = image_path.to_string_lossy();
        self.call(|id| {
            serde_json::to_string(&CaptionRequest { id, kind: "caption", image_path: &path })
                .expect("request serializes")
        })
    }

    pub fn request_code_intent(&self, paths: &[AstPath]) -> Result<String, BackendError> {
        self.require(BackendKind::Code)?;
        let paths: Vec<String> = paths.iter().map(ToString::to_string).collect();
        self.call(|id| {
            serde_json::to_string(&CodeRequest { id, kind: "code", paths }).expect("request serializes")
        })
    }
}

impl CaptionBackend for BackendHandle {
    fn caption(&self, image_path: &Path) -> Result<String, BackendError> {
        self.request_caption(image_path)
    }
}

impl CodeBackend for BackendHandle {
    fn code_intent(&self, paths: &[AstPath]) -> Result<String, BackendError> {
        self.request_code_intent(paths)
    }
}

impl Drop for BackendHandle {
    fn drop(&mut self) {
        self.stdin.lock().unwrap().take();
        if let Ok(mut child) = self.child.lock() {
            let _ = child.kill();
            let _ = child.wait();
        }
        if let Some(r) = self.reader.take() {
            let _ = r.join();
        }
    }
}

fn read_loop(
    stdout: impl BufRead,
    hello: Sender<Option<String>>,
    pending: Pending,
    failure: Arc<Mutex<Option<BackendError>>>,
) {
    let mut lines = stdout.lines();
    match lines.next() {
        Some(Ok(line)) => {
            let _ = hello.send(Some(line));
        }
        _ => {
            let _ = hello.send(None);
            return;
        }
    }
    drop(hello);
    let fail_all = |err: BackendError| {
        failure.lock().unwrap().get_or_insert(err.clone());
        for (_, tx) in pending.lock().unwrap().waiting.drain() {
            let _ = tx.send(Err(err.clone()));
        }
    };
    for line in lines {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        match parse_reply(&line) {
            Ok((id, reply)) => {
                let mut table = pending.lock().unwrap();
                let tx = table.waiting.remove(&id);
                let late = tx.is_none() && table.abandoned.remove(&id);
                drop(table);
                match tx {
                    Some(tx) => {
                        let _ = tx.send(reply);
                    }
                    None if late => log::debug!("dropping late reply for id {id}"),
                    None => {
                        fail_all(BackendError::ProtocolError(format!("reply for unknown id {id}")));
                        return;
                    }
                }
            }
            Err(e) => {
                fail_all(e);
                return;
            }
        }
    }
    fail_all(BackendError::BackendFailure("backend exited".into()));
}

fn parse_reply(line: &str) -> Result<(u64, Reply), BackendError> {
    let protocol = |m: &str| BackendError::ProtocolError(format!("{m}: {line}"));
    let v: Value = serde_json::from_str(line).map_err(|_| protocol("reply is not JSON"))?;
    let id = v.get("id").and_then(Value::as_u64).ok_or_else(|| protocol("reply without integer id"))?;
    if let Some(err) = v.get("error") {
        let msg = err.as_str().map_or_else(|| err.to_string(), str::to_string);
        return Ok((id, Err(BackendError::BackendFailure(msg))));
    }
    let text = v.get("text").and_then(Value::as_str).ok_or_else(|| protocol("reply without text"))?;
    let text = text.trim();
    if text.is_empty() {
        return Ok((id, Err(BackendError::BackendFailure("empty text".into()))));
    }
    Ok((id, Ok(text.to_string())))
}
