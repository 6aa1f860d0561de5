// SPDX-License-Identifier: Apache-2.0
//! Nested search: substitute bodies of helper methods called by a handler.

use std::collections::BTreeSet;
use std::path::Path;

use regex::Regex;

use super::source::SourceIndex;
use super::templates::ResponseMethod;
use crate::lex;

pub const DEFAULT_INLINE_DEPTH: usize = 2;

const KEYWORDS: &[&str] = &["if", "for", "while", "switch", "catch", "synchronized", "return", "new", "super", "this"];

/// Replace call statements `[qualifier.]name(args);` whose callee is declared
/// in the tree by that method's body, recursively up to `max_depth` levels.
/// Each method body is substituted at most once.
pub fn inline_nested(rm: &ResponseMethod, index: &SourceIndex, max_depth: usize) -> ResponseMethod {
    let mut visited = BTreeSet::new();
    let mut inlined = rm.inlined.clone();
    let near = index.file_index(&rm.file);
    let snippet = expand(&rm.snippet, index, near, max_depth, &mut visited, &mut inlined);
    ResponseMethod { snippet, inlined, ..rm.clone() }
}

/// Convenience wrapper indexing `source_root` first.
pub fn inline_nested_in(rm: &ResponseMethod, source_root: &Path, max_depth: usize) -> ResponseMethod {
    inline_nested(rm, &SourceIndex::load(source_root), max_depth)
}

fn expand(
    snippet: &str,
    index: &SourceIndex,
    near: Option<usize>,
    depth: usize,
    visited: &mut BTreeSet<String>,
    inlined: &mut Vec<String>,
) -> String {
    if depth == 0 {
        return snippet.to_string();
    }
    let masked = lex::mask(snippet, true);
    let call = Regex::new(r"(?:[\w$]+\s*\.\s*)*([A-Za-z_$][\w$]*)\s*\(").unwrap();
    let mut out = String::with_capacity(snippet.len());
    let mut last = 0;
    let mut pos = 0;
    while let Some(cap) = call.captures_at(&masked, pos) {
        let whole = cap.get(0).unwrap();
        let name = &cap[1];
        let open = whole.end() - 1;
        pos = whole.end();
        if KEYWORDS.contains(&name) || whole.start() < last {
            continue;
        }
        if !at_statement_start(&masked, whole.start()) {
            continue;
        }
        let Some(close) = lex::matching_close(&masked, open) else { continue };
        let after = masked[close + 1..].trim_start();
        if !after.starts_with(';') {
            continue;
        }
        let semi = masked.len() - after.len();
        if visited.contains(name) {
            continue;
        }
        let Some(decl) = index.lookup_method(name, near) else { continue };
        let file = index.file(decl.file);
        let body = file.text[decl.body.clone()].trim();
        visited.insert(name.to_string());
        inlined.push(name.to_string());
        let nested = expand(body, index, Some(decl.file), depth - 1, visited, inlined);
        out.push_str(&snippet[last..whole.start()]);
        out.push_str(&nested);
        last = semi + 1;
        pos = last;
    }
    out.push_str(&snippet[last..]);
    out
}

fn at_statement_start(masked: &str, pos: usize) -> bool {
    let before = masked[..pos].trim_end();
    before.is_empty() || before.ends_with([';', '{', '}', ':', ')']) && !before.ends_with("::")
}
