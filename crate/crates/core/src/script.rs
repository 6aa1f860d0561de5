// SPDX-License-Identifier: Apache-2.0
//! Operation-sequence model of Appium-style test scripts.
//!
//! A script is reduced to an ordered list of `(locator, selector, action,
//! payload)` tuples by lexical matching of the two driver lookup calls and
//! the action invoked on the element they return, either chained directly or
//! through a local variable.

use std::fmt;
use std::path::{Path, PathBuf};

use globset::{Glob, GlobMatcher};
use serde::{Serialize, Serializer};
use thiserror::Error;
use walkdir::WalkDir;

use crate::lex::{self, LexError, Token, TokenKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScriptError {
    #[error("unbalanced quote at line {line}")]
    UnbalancedQuote { line: usize },
    #[error("unterminated call at line {line}")]
    UnterminatedCall { line: usize },
    #[error("unterminated block comment starting at line {line}")]
    UnterminatedComment { line: usize },
    #[error("corpus contains no scripts")]
    EmptyCorpus,
    #[error("invalid glob pattern {0:?}")]
    BadGlob(String),
}

impl From<LexError> for ScriptError {
    fn from(e: LexError) -> Self {
        match e {
            LexError::UnbalancedQuote { line } => ScriptError::UnbalancedQuote { line },
            LexError::UnterminatedComment { line } => ScriptError::UnterminatedComment { line },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum LocatorKind {
    #[serde(rename = "ID")]
    Id,
    #[serde(rename = "XPATH")]
    XPath,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Click,
    SendKeys,
    LongPress,
    Clear,
    Other(String),
}

impl Action {
    pub fn from_method(name: &str) -> Action {
        match name {
            "click" => Action::Click,
            "sendKeys" => Action::SendKeys,
            "longPress" | "longClick" => Action::LongPress,
            "clear" => Action::Clear,
            other => Action::Other(other.to_string()),
        }
    }

    fn takes_payload(&self) -> bool {
        matches!(self, Action::SendKeys | Action::Other(_))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Click => f.write_str("CLICK"),
            Action::SendKeys => f.write_str("SEND_KEYS"),
            Action::LongPress => f.write_str("LONG_PRESS"),
            Action::Clear => f.write_str("CLEAR"),
            Action::Other(name) => write!(f, "OTHER({name})"),
        }
    }
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// One widget lookup and the action performed on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Operation {
    pub index: usize,
    pub locator_kind: LocatorKind,
    pub selector: String,
    pub action: Action,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
    /// Byte offset of the lookup call in the script source.
    #[serde(skip)]
    pub offset: usize,
    #[serde(skip)]
    pub line: usize,
}

impl Operation {
    /// Resource id with any `package:id/` prefix stripped.
    pub fn simple_id(&self) -> &str {
        self.selector.rsplit('/').next().unwrap_or(&self.selector)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OperationSequence {
    pub script_path: String,
    pub operations: Vec<Operation>,
}

impl OperationSequence {
    pub fn len(&self) -> usize {
        self.operations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operations.is_empty()
    }
}

const LOOKUPS: [(&str, LocatorKind); 2] =
    [("findElementById", LocatorKind::Id), ("findElementByXPath", LocatorKind::XPath)];

fn lookup_kind(name: &str) -> Option<LocatorKind> {
    LOOKUPS.iter().find(|(n, _)| *n == name).map(|(_, k)| *k)
}

/// Index of the token closing the parenthesis at `open`.
fn close_paren(src: &str, toks: &[Token], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, t) in toks.iter().enumerate().skip(open) {
        if t.is_punct(src, "(") {
            depth += 1;
        } else if t.is_punct(src, ")") {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

/// Argument text of a call: a literal (or `+`-joined literals) is unescaped,
/// anything else is returned as trimmed source text.
fn argument_text(src: &str, toks: &[Token]) -> String {
    let literal_only = !toks.is_empty()
        && toks.iter().enumerate().all(|(i, t)| {
            if i % 2 == 0 {
                t.kind == TokenKind::Str
            } else {
                t.is_punct(src, "+")
            }
        })
        && toks.len() % 2 == 1;
    if literal_only {
        toks.iter()
            .filter(|t| t.kind == TokenKind::Str)
            .map(|t| lex::unescape_literal(t.text(src)))
            .collect()
    } else if let (Some(first), Some(last)) = (toks.first(), toks.last()) {
        src[first.span.start..last.span.end].trim().to_string()
    } else {
        String::new()
    }
}

/// Start index of the receiver chain ending right before token `k`
/// (`driver.findElementById` -> index of `driver`).
fn receiver_start(src: &str, toks: &[Token], k: usize) -> usize {
    let mut j = k;
    while j >= 2 && toks[j - 1].is_punct(src, ".") {
        let prev = &toks[j - 2];
        if prev.kind == TokenKind::Ident {
            j -= 2;
        } else if prev.is_punct(src, ")") {
            // skip a call like `getDriver()`
            let mut depth = 0usize;
            let mut p = j - 2;
            loop {
                if toks[p].is_punct(src, ")") {
                    depth += 1;
                } else if toks[p].is_punct(src, "(") {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                if p == 0 {
                    return j;
                }
                p -= 1;
            }
            if p >= 1 && toks[p - 1].kind == TokenKind::Ident {
                j = p - 1;
            } else {
                return j;
            }
        } else {
            break;
        }
    }
    j
}

/// Variable assigned from the expression starting at token `start`, if any.
fn assigned_variable(src: &str, toks: &[Token], start: usize) -> Option<String> {
    let mut j = start;
    // `(MobileElement) driver.find...`
    if j >= 1 && toks[j - 1].is_punct(src, ")") {
        let mut p = j - 1;
        while p > 0 && !toks[p].is_punct(src, "(") {
            p -= 1;
        }
        j = p;
    }
    if j >= 2 && toks[j - 1].is_punct(src, "=") && toks[j - 2].kind == TokenKind::Ident {
        return Some(toks[j - 2].text(src).to_string());
    }
    None
}

struct ActionCall {
    action: Action,
    payload: Option<String>,
}

/// Parse `. name ( args )` starting at token `dot`.
fn action_at(src: &str, toks: &[Token], dot: usize) -> Result<Option<ActionCall>, ScriptError> {
    let (Some(d), Some(name), Some(open)) = (toks.get(dot), toks.get(dot + 1), toks.get(dot + 2))
    else {
        return Ok(None);
    };
    if !d.is_punct(src, ".") || name.kind != TokenKind::Ident || !open.is_punct(src, "(") {
        return Ok(None);
    }
    let method = name.text(src);
    if lookup_kind(method).is_some() {
        return Ok(None);
    }
    let close =
        close_paren(src, toks, dot + 2).ok_or(ScriptError::UnterminatedCall { line: name.line })?;
    let action = Action::from_method(method);
    let args = argument_text(src, &toks[dot + 3..close]);
    let payload = match &action {
        Action::SendKeys => Some(args),
        Action::Other(_) if !args.is_empty() => Some(args),
        _ => None,
    };
    debug_assert!(payload.is_none() || action.takes_payload());
    Ok(Some(ActionCall { action, payload }))
}

/// Extract the operation sequence of a test script.
pub fn parse_script(source: &str, script_path: &str) -> Result<OperationSequence, ScriptError> {
    let toks = lex::tokenize(source)?;
    let mut operations = Vec::new();
    for k in 0..toks.len() {
        let t = &toks[k];
        if t.kind != TokenKind::Ident {
            continue;
        }
        let Some(kind) = lookup_kind(t.text(source)) else {
            continue;
        };
        if !toks.get(k + 1).is_some_and(|n| n.is_punct(source, "(")) {
            continue;
        }
        let close = close_paren(source, &toks, k + 1)
            .ok_or(ScriptError::UnterminatedCall { line: t.line })?;
        let selector = argument_text(source, &toks[k + 2..close]);
        if selector.is_empty() {
            continue;
        }

        let mut call = action_at(source, &toks, close + 1)?;
        if call.is_none() {
            let start = receiver_start(source, &toks, k);
            if let Some(var) = assigned_variable(source, &toks, start) {
                call = linked_action(source, &toks, close + 1, &var)?;
            }
        }
        let ActionCall { action, payload } = call.unwrap_or(ActionCall {
            action: Action::Other("none".to_string()),
            payload: None,
        });
        operations.push(Operation {
            index: operations.len() + 1,
            locator_kind: kind,
            selector,
            action,
            payload,
            offset: t.span.start,
            line: t.line,
        });
    }
    Ok(OperationSequence { script_path: script_path.to_string(), operations })
}

/// First action invoked on `var` after token `from`, stopping at a reassignment.
fn linked_action(
    src: &str,
    toks: &[Token],
    from: usize,
    var: &str,
) -> Result<Option<ActionCall>, ScriptError> {
    for i in from..toks.len() {
        if !toks[i].is_ident(src, var) {
            continue;
        }
        if i > 0 && toks[i - 1].is_punct(src, ".") {
            continue;
        }
        match toks.get(i + 1) {
            Some(n) if n.is_punct(src, "=") => return Ok(None),
            Some(n) if n.is_punct(src, ".") => {
                if let Some(call) = action_at(src, toks, i + 1)? {
                    return Ok(Some(call));
                }
            }
            _ => {}
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub script_count: usize,
    pub op_counts: Vec<usize>,
    pub mean_ops: f64,
    pub stddev_ops: f64,
}

/// Mean and sample standard deviation of per-script operation counts.
pub fn script_stats(sequences: &[OperationSequence]) -> Result<CorpusStats, ScriptError> {
    if sequences.is_empty() {
        return Err(ScriptError::EmptyCorpus);
    }
    let op_counts: Vec<usize> = sequences.iter().map(OperationSequence::len).collect();
    let n = op_counts.len() as f64;
    let mean = op_counts.iter().sum::<usize>() as f64 / n;
    let stddev = if op_counts.len() < 2 {
        0.0
    } else {
        let ss: f64 = op_counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum();
        (ss / (n - 1.0)).sqrt()
    };
    Ok(CorpusStats { script_count: op_counts.len(), op_counts, mean_ops: mean, stddev_ops: stddev })
}

pub const DEFAULT_SCRIPT_GLOB: &str = "*Test*.java";

/// Script files under `root` whose file name matches `pattern`, sorted.
pub fn find_scripts(root: &Path, pattern: &str) -> Result<Vec<PathBuf>, ScriptError> {
    let matcher: GlobMatcher = Glob::new(pattern)
        .map_err(|_| ScriptError::BadGlob(pattern.to_string()))?
        .compile_matcher();
    let mut out: Vec<PathBuf> = WalkDir::new(root)
        .into_iter()
        .filter_map(|e| match e {
            Ok(e) => Some(e),
            Err(err) => {
                log::warn!("skipping unreadable entry: {err}");
                None
            }
        })
        .filter(|e| e.file_type().is_file() && matcher.is_match(e.file_name()))
        .map(|e| e.into_path())
        .collect();
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CommentClass {
    Uncommented,
    Commented,
    WellCommented,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommentRatio {
    pub comment_lines: usize,
    pub code_lines: usize,
    pub blank_lines: usize,
    pub ratio: f64,
    pub class: CommentClass,
}

pub const WELL_COMMENTED_RATIO: f64 = 0.3;

impl CommentClass {
    pub fn of_ratio(ratio: f64) -> CommentClass {
        if ratio > WELL_COMMENTED_RATIO {
            CommentClass::WellCommented
        } else if ratio > 0.0 {
            CommentClass::Commented
        } else {
            CommentClass::Uncommented
        }
    }
}

/// Ratio of comment lines to code lines. A line carrying both code and a
/// trailing comment counts as code. With no code lines the comment count is
/// divided by one.
pub fn comment_code_ratio(source: &str) -> CommentRatio {
    let (mut comment, mut code, mut blank) = (0, 0, 0);
    let mut in_block = false;
    for line in source.lines() {
        let (has_code, has_comment, still_in_block) = scan_line(line, in_block);
        if has_code {
            code += 1;
        } else if has_comment || in_block {
            comment += 1;
        } else {
            blank += 1;
        }
        in_block = still_in_block;
    }
    let ratio = comment as f64 / code.max(1) as f64;
    CommentRatio {
        comment_lines: comment,
        code_lines: code,
        blank_lines: blank,
        ratio,
        class: CommentClass::of_ratio(ratio),
    }
}

fn scan_line(line: &str, mut in_block: bool) -> (bool, bool, bool) {
    let b = line.as_bytes();
    let (mut code, mut comment) = (false, false);
    let mut i = 0;
    while i < b.len() {
        if in_block {
            comment = true;
            if b[i] == b'*' && b.get(i + 1) == Some(&b'/') {
                in_block = false;
                i += 2;
            } else {
                i += 1;
            }
            continue;
        }
        match b[i] {
            b'/' if b.get(i + 1) == Some(&b'/') => {
                comment = true;
                break;
            }
            b'/' if b.get(i + 1) == Some(&b'*') => {
                comment = true;
                in_block = true;
                i += 2;
            }
            q @ (b'"' | b'\'') => {
                code = true;
                i += 1;
                while i < b.len() && b[i] != q {
                    if b[i] == b'\\' {
                        i += 1;
                    }
                    i += 1;
                }
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                code = true;
                i += 1;
            }
        }
    }
    (code, comment, in_block)
}
