// SPDX-License-Identifier: Apache-2.0
//! Scripted model backend speaking the line-delimited JSON protocol.
//!
//! Used by tests and for trying the `--backend` option without a trained
//! model. Captions are the configured text, or the image file stem split
//! into words; code intents are the first subtoken of the first path.

use std::io::{self, BufRead, Write};
use std::path::Path;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Answer every request in order.
    Echo,
    /// Answer batches of requests in reverse arrival order.
    Shuffle,
    /// Reply with empty text.
    Empty,
    /// Reply with a line that is not JSON.
    Invalid,
    /// Exit on the first request.
    Exit,
    /// Exit before the handshake.
    ExitEarly,
    /// Reply to the handshake with the wrong structure.
    BadHello,
    /// Never answer the handshake.
    Silent,
    /// Reply with an error field.
    Error,
    /// Reply with an id nobody asked for.
    UnknownId,
    /// Wait `--delay-ms` before each reply.
    Slow,
}

#[derive(Debug, Parser)]
#[command(name = "intent-stub-backend", version)]
struct Args {
    #[arg(long, value_enum, default_value = "echo")]
    mode: Mode,
    /// Fixed caption text.
    #[arg(long)]
    caption: Option<String>,
    /// Comma-separated kinds announced in the handshake.
    #[arg(long, default_value = "caption,code")]
    kinds: String,
    #[arg(long, default_value_t = 200)]
    delay_ms: u64,
}

fn caption_for(args: &Args, image_path: &str) -> String {
    if let Some(c) = &args.caption {
        return c.clone();
    }
    let stem = Path::new(image_path).file_stem().and_then(|s| s.to_str()).unwrap_or("widget");
    stem.split(|c: char| !c.is_alphanumeric()).filter(|s| !s.is_empty()).collect::<Vec<_>>().join(" ")
}

fn code_for(req: &Value) -> String {
    let first = req["paths"].as_array().and_then(|p| p.first()).and_then(Value::as_str).unwrap_or("");
    let start = first.split(',').next().unwrap_or("");
    start.split('|').next().unwrap_or("").to_string()
}

fn reply(args: &Args, req: &Value) -> String {
    let id = req["id"].as_u64().unwrap_or(0);
    let text = match req["kind"].as_str() {
        Some("caption") => caption_for(args, req["image_path"].as_str().unwrap_or("")),
        Some("code") => code_for(req),
        other => return json!({"id": id, "error": format!("unsupported kind {other:?}")}).to_string(),
    };
    match args.mode {
        Mode::Empty => json!({"id": id, "text": ""}).to_string(),
        Mode::Invalid => "this is not json".to_string(),
        Mode::Error => json!({"id": id, "error": "model failed"}).to_string(),
        Mode::UnknownId => json!({"id": id + 1000, "text": text}).to_string(),
        _ => json!({"id": id, "text": text}).to_string(),
    }
}

fn main() {
    let args = Args::parse();
    if args.mode == Mode::ExitEarly {
        return;
    }
    let (tx, rx) = mpsc::channel::<String>();
    thread::spawn(move || {
        for line in io::stdin().lock().lines() {
            let Ok(line) = line else { break };
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    let mut out = io::stdout().lock();
    let Ok(_hello) = rx.recv() else { return };
    match args.mode {
        Mode::Silent => {
            thread::sleep(Duration::from_secs(3600));
            return;
        }
        Mode::BadHello => {
            let _ = writeln!(out, "{}", json!({"greeting": "hi"}));
            let _ = out.flush();
        }
        _ => {
            let kinds: Vec<&str> = args.kinds.split(',').map(str::trim).filter(|k| !k.is_empty()).collect();
            let _ = writeln!(out, "{}", json!({"name": "stub", "version": env!("CARGO_PKG_VERSION"), "kinds": kinds}));
            let _ = out.flush();
        }
    }
    while let Ok(line) = rx.recv() {
        if args.mode == Mode::Exit {
            return;
        }
        let mut batch = vec![line];
        if args.mode == Mode::Shuffle {
            while let Ok(more) = rx.recv_timeout(Duration::from_millis(50)) {
                batch.push(more);
            }
            batch.reverse();
        }
        for line in batch {
            let Ok(req) = serde_json::from_str::<Value>(&line) else { continue };
            if args.mode == Mode::Slow {
                thread::sleep(Duration::from_millis(args.delay_ms));
            }
            if writeln!(out, "{}", reply(&args, &req)).and_then(|_| out.flush()).is_err() {
                return;
            }
        }
    }
}
