// SPDX-License-Identifier: Apache-2.0
//! Response-method localization by the five handler-binding templates.

use std::ops::Range;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Serialize, Serializer};

use super::source::{FileKind, MethodDecl, SourceFile, SourceIndex};
use crate::lex;

/// How a widget id is bound to its handler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Template {
    /// `case R.id.x:` in a switch.
    Switch = 1,
    /// `if (v.getId() == R.id.x)`.
    IfElse = 2,
    /// `findViewById(R.id.x)` / `@BindView(R.id.x)` plus `setOn*Listener`.
    IdBinding = 3,
    /// `@OnClick(R.id.x)` on a method.
    OnClickAnnotation = 4,
    /// `android:onClick` in a layout file.
    LayoutAttribute = 5,
}

/// Templates from most to least preferred.
pub const PRIORITY: [Template; 5] = [
    Template::IdBinding,
    Template::IfElse,
    Template::OnClickAnnotation,
    Template::Switch,
    Template::LayoutAttribute,
];

impl Template {
    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn rank(self) -> usize {
        PRIORITY.iter().position(|&t| t == self).expect("every template is ranked")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResponseMethod {
    #[serde(serialize_with = "slash_path")]
    pub file: PathBuf,
    pub method_name: String,
    pub template: Template,
    /// 1-based inclusive line span of `byte_range`.
    pub span: (usize, usize),
    #[serde(skip)]
    pub byte_range: Range<usize>,
    pub snippet: String,
    /// Methods whose bodies were substituted into `snippet`.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub inlined: Vec<String>,
}

fn slash_path<S: Serializer>(p: &Path, s: S) -> Result<S::Ok, S::Error> {
    let parts: Vec<String> = p.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
    s.serialize_str(&parts.join("/"))
}

fn trimmed(text: &str, r: Range<usize>) -> Range<usize> {
    let s = &text[r.clone()];
    let lead = s.len() - s.trim_start().len();
    let trail = s.len() - s.trim_end().len();
    if lead == s.len() {
        return r.start..r.start;
    }
    r.start + lead..r.end - trail
}

fn method_at(file: &SourceFile, range: Range<usize>, name: String, template: Template) -> ResponseMethod {
    let range = trimmed(&file.text, range);
    ResponseMethod {
        file: file.rel.clone(),
        method_name: name,
        template,
        span: (lex::line_of(&file.text, range.start), lex::line_of(&file.text, range.end.saturating_sub(1).max(range.start))),
        snippet: file.text[range.clone()].to_string(),
        byte_range: range,
        inlined: Vec::new(),
    }
}

fn from_decl(index: &SourceIndex, d: &MethodDecl, template: Template) -> ResponseMethod {
    method_at(index.file(d.file), d.decl.clone(), d.name.clone(), template)
}

/// Callee of a body consisting of exactly one call statement.
pub fn single_call_name(masked_body: &str) -> Option<String> {
    let re = Regex::new(r"^\s*(?:return\s+)?(?:[\w$]+\s*\.\s*)*([A-Za-z_$][\w$]*)\s*\(").unwrap();
    let body = masked_body.trim();
    let cap = re.captures(body)?;
    let open = cap.get(0)?.end() - 1;
    let close = lex::matching_close(body, open)?;
    let rest = body[close + 1..].trim();
    if rest == ";" || rest.is_empty() {
        Some(cap[1].to_string())
    } else {
        None
    }
}

/// Unmatched opening bracket `open` enclosing `pos`.
fn enclosing(masked: &str, pos: usize, open: u8, close: u8) -> Option<usize> {
    let bytes = masked.as_bytes();
    let mut depth = 0usize;
    for i in (0..pos).rev() {
        if bytes[i] == close {
            depth += 1;
        } else if bytes[i] == open {
            if depth == 0 {
                return Some(i);
            }
            depth -= 1;
        }
    }
    None
}

fn preceding_word(masked: &str, pos: usize) -> &str {
    let before = masked[..pos].trim_end();
    let start = before
        .rfind(|c: char| !(c.is_alphanumeric() || c == '_' || c == '$'))
        .map_or(0, |i| i + 1);
    &before[start..]
}

/// Statement or block starting at or after `pos`: block interior, or text up to `;`.
fn statement_body(masked: &str, pos: usize) -> Option<Range<usize>> {
    let rest = &masked[pos..];
    let start = pos + (rest.len() - rest.trim_start().len());
    if masked.as_bytes().get(start) == Some(&b'{') {
        let end = lex::matching_close(masked, start)?;
        return Some(start + 1..end);
    }
    let bytes = masked.as_bytes();
    let mut depth = 0i32;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        match b {
            b'(' | b'{' | b'[' => depth += 1,
            b')' | b'}' | b']' => {
                depth -= 1;
                if depth < 0 {
                    return Some(start..i);
                }
            }
            b';' if depth == 0 => return Some(start..i + 1),
            _ => {}
        }
    }
    None
}

fn is_word_at(masked: &str, i: usize, word: &str) -> bool {
    masked[i..].starts_with(word)
        && (i == 0 || !is_ident_byte(masked.as_bytes()[i - 1]))
        && !masked.as_bytes().get(i + word.len()).copied().is_some_and(is_ident_byte)
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$'
}

/// Body of a `case` arm starting at `pos`: up to the first `break`, through a
/// `return` statement, or up to the next label or the end of the switch.
fn case_arm(masked: &str, pos: usize) -> Range<usize> {
    let bytes = masked.as_bytes();
    let label = Regex::new(r"^\s*(case\s[^:]*|default\s*):").unwrap();
    let mut start = pos;
    while let Some(m) = label.find(&masked[start..]) {
        start += m.end();
    }
    let mut depth = 0i32;
    let mut i = start;
    while i < bytes.len() {
        match bytes[i] {
            b'(' | b'{' | b'[' => depth += 1,
            b')' | b'}' | b']' => {
                depth -= 1;
                if depth < 0 {
                    return start..i;
                }
            }
            _ if depth == 0 && (is_word_at(masked, i, "break") || is_word_at(masked, i, "case") || is_word_at(masked, i, "default")) => {
                return start..i;
            }
            _ if depth == 0 && is_word_at(masked, i, "return") => {
                let end = masked[i..].find(';').map_or(bytes.len(), |e| i + e + 1);
                return start..end;
            }
            _ => {}
        }
        i += 1;
    }
    start..bytes.len()
}

fn switch_matches(file: &SourceFile, id: &str) -> Vec<ResponseMethod> {
    let masked = &file.masked;
    let re = Regex::new(&format!(r"\bcase\s+R\.id\.{}\s*(:|->)", regex::escape(id))).unwrap();
    let mut out = Vec::new();
    for cap in re.captures_iter(masked) {
        let m = cap.get(0).unwrap();
        let Some(block) = enclosing(masked, m.start(), b'{', b'}') else { continue };
        let head = masked[..block].trim_end();
        if !head.ends_with(')') {
            continue;
        }
        let Some(paren) = enclosing(masked, head.len() - 1, b'(', b')') else { continue };
        if preceding_word(masked, paren) != "switch" {
            continue;
        }
        let body = if &cap[1] == "->" {
            match statement_body(masked, m.end()) {
                Some(b) => b,
                None => continue,
            }
        } else {
            case_arm(masked, m.end())
        };
        let name = single_call_name(&masked[body.clone()]).unwrap_or_else(|| format!("case_{id}"));
        out.push(method_at(file, body, name, Template::Switch));
    }
    out
}

fn if_matches(file: &SourceFile, id: &str) -> Vec<ResponseMethod> {
    let masked = &file.masked;
    let re = Regex::new(&format!(r"R\.id\.{}\b", regex::escape(id))).unwrap();
    let mut out = Vec::new();
    let mut seen = Vec::new();
    for m in re.find_iter(masked) {
        let mut pos = m.start();
        let mut found = None;
        for _ in 0..4 {
            let Some(open) = enclosing(masked, pos, b'(', b')') else { break };
            if preceding_word(masked, open) == "if" {
                found = Some(open);
                break;
            }
            pos = open;
        }
        let Some(open) = found else { continue };
        if seen.contains(&open) {
            continue;
        }
        seen.push(open);
        let Some(close) = lex::matching_close(masked, open) else { continue };
        if !masked[open..close].contains("==") {
            continue;
        }
        let Some(body) = statement_body(masked, close + 1) else { continue };
        let name = single_call_name(&masked[body.clone()]).unwrap_or_else(|| format!("if_{id}"));
        out.push(method_at(file, body, name, Template::IfElse));
    }
    out
}

/// Handler passed to `setOn*Listener(` whose open paren is at `open`.
fn listener_handler(index: &SourceIndex, file_idx: usize, open: usize, id: &str) -> Option<ResponseMethod> {
    let file = index.file(file_idx);
    let masked = &file.masked;
    let close = lex::matching_close(masked, open)?;
    let arg = open + 1..close;
    let arg_text = &masked[arg.clone()];
    let lambda = Regex::new(r"^\s*(?:\([^)]*\)|[\w$]+)\s*->").unwrap();
    let anon = Regex::new(r"^\s*new\s+[\w$.<>]+\s*\(\s*\)\s*\{").unwrap();
    let mref = Regex::new(r"^\s*[\w$.]+\s*::\s*([\w$]+)\s*$").unwrap();
    if let Some(m) = lambda.find(arg_text) {
        let body = statement_body(masked, arg.start + m.end())
            .map(|b| if b.end > close { b.start..close } else { b })
            .unwrap_or(arg.start + m.end()..close);
        let name = single_call_name(&masked[body.clone()]).unwrap_or_else(|| format!("listener_{id}"));
        return Some(method_at(file, body, name, Template::IdBinding));
    }
    if let Some(m) = anon.find(arg_text) {
        let class_open = arg.start + m.end() - 1;
        let class_close = lex::matching_close(masked, class_open)?;
        let inner = index
            .methods
            .values()
            .flatten()
            .filter(|d| d.file == file_idx && d.decl.start > class_open && d.decl.end <= class_close)
            .min_by_key(|d| d.decl.start)?;
        let body = inner.body.clone();
        let name = single_call_name(&masked[body.clone()]).unwrap_or_else(|| format!("listener_{id}"));
        return Some(method_at(file, body, name, Template::IdBinding));
    }
    if let Some(cap) = mref.captures(arg_text) {
        let d = index.lookup_method(&cap[1], Some(file_idx))?;
        return Some(from_decl(index, d, Template::IdBinding));
    }
    None
}

fn binding_matches(index: &SourceIndex, file_idx: usize, id: &str) -> Vec<ResponseMethod> {
    let file = index.file(file_idx);
    let masked = &file.masked;
    let rid = format!(r"R\.id\.{}\b", regex::escape(id));
    let assign = Regex::new(&format!(
        r"([\w$]+)\s*=\s*(?:\(\s*[\w$.<>]+\s*\)\s*)?(?:[\w$]+\s*\.\s*)?findViewById\s*\(\s*{rid}\s*\)"
    ))
    .unwrap();
    let bind = Regex::new(&format!(r"@BindView\s*\(\s*{rid}\s*\)([^;=]*?)([\w$]+)\s*;")).unwrap();
    let chained = Regex::new(&format!(r"findViewById\s*\(\s*{rid}\s*\)\s*\.\s*setOn\w*Listener\s*\(")).unwrap();

    let mut vars: Vec<(String, usize)> = assign.captures_iter(masked).map(|c| (c[1].to_string(), c.get(0).unwrap().end())).collect();
    vars.extend(bind.captures_iter(masked).map(|c| (c[2].to_string(), c.get(0).unwrap().end())));
    let mut opens: Vec<usize> = chained.find_iter(masked).map(|m| m.end() - 1).collect();
    for (var, _) in &vars {
        let set = Regex::new(&format!(r"(?:^|[^\w$.]|this\s*\.)\s*{}\s*\.\s*setOn\w*Listener\s*\(", regex::escape(var))).unwrap();
        opens.extend(set.find_iter(masked).map(|m| m.end() - 1));
    }
    opens.sort_unstable();
    opens.dedup();
    opens.into_iter().filter_map(|open| listener_handler(index, file_idx, open, id)).collect()
}

fn annotation_matches(index: &SourceIndex, file_idx: usize, id: &str) -> Vec<ResponseMethod> {
    let file = index.file(file_idx);
    let masked = &file.masked;
    let re = Regex::new(r"@On[A-Z]\w*\s*\(").unwrap();
    let rid = Regex::new(&format!(r"R\.id\.{}\b", regex::escape(id))).unwrap();
    let mut out = Vec::new();
    for m in re.find_iter(masked) {
        let open = m.end() - 1;
        let Some(close) = lex::matching_close(masked, open) else { continue };
        if !rid.is_match(&masked[open..close]) {
            continue;
        }
        let Some(d) = index
            .methods
            .values()
            .flatten()
            .filter(|d| d.file == file_idx && d.body.start > close)
            .min_by_key(|d| d.body.start)
        else {
            continue;
        };
        let start = d.decl.start.min(m.start());
        out.push(method_at(file, start..d.decl.end, d.name.clone(), Template::OnClickAnnotation));
    }
    out
}

fn layout_matches(index: &SourceIndex, file: &SourceFile, id: &str) -> Vec<ResponseMethod> {
    let doc = match roxmltree::Document::parse(&file.text) {
        Ok(d) => d,
        Err(e) => {
            log::warn!("skipping layout {}: {e}", file.rel.display());
            return Vec::new();
        }
    };
    let mut out = Vec::new();
    for el in doc.descendants().filter(roxmltree::Node::is_element) {
        let attr = |name: &str| el.attributes().find(|a| a.name() == name).map(|a| a.value());
        let declares = attr("id").is_some_and(|v| v == format!("@+id/{id}") || v == format!("@id/{id}"));
        let Some(handler) = attr("onClick").filter(|_| declares) else { continue };
        let decl = index
            .methods
            .get(handler)
            .and_then(|ds| ds.iter().find(|d| index.file(d.file).masked[d.decl.clone()].contains("View")).or(ds.first()));
        match decl {
            Some(d) => out.push(from_decl(index, d, Template::LayoutAttribute)),
            None => out.push(method_at(file, el.range(), handler.to_string(), Template::LayoutAttribute)),
        }
    }
    out
}

/// All template matches for `widget_id` in file `file_idx` of `index`.
pub fn match_file(index: &SourceIndex, file_idx: usize, widget_id: &str) -> Vec<ResponseMethod> {
    let file = index.file(file_idx);
    match file.kind {
        FileKind::Layout => layout_matches(index, file, widget_id),
        FileKind::Java => {
            let mut out = switch_matches(file, widget_id);
            out.extend(if_matches(file, widget_id));
            out.extend(binding_matches(index, file_idx, widget_id));
            out.extend(annotation_matches(index, file_idx, widget_id));
            out
        }
    }
}

/// Template matches in a single file. Layout-attribute handlers resolve only
/// against methods declared in that same text.
pub fn match_templates(file_name: &str, file_text: &str, widget_id: &str) -> Vec<ResponseMethod> {
    let index = SourceIndex::from_files(PathBuf::new(), vec![SourceFile::new(file_name, file_text.to_string())]);
    match_file(&index, 0, widget_id)
}

/// Best match: template priority, then file path, then start line.
pub fn prioritize(matches: &[ResponseMethod]) -> Option<ResponseMethod> {
    matches
        .iter()
        .min_by(|a, b| {
            (a.template.rank(), &a.file, a.span.0, a.byte_range.start)
                .cmp(&(b.template.rank(), &b.file, b.span.0, b.byte_range.start))
        })
        .cloned()
}

fn path_distance(a: &Path, b: &Path) -> usize {
    let a: Vec<_> = a.parent().map(|p| p.components().collect()).unwrap_or_default();
    let b: Vec<_> = b.parent().map(|p| p.components().collect()).unwrap_or_default();
    let common = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    a.len() + b.len() - 2 * common
}

/// Rank every localization of `widget_id` in the tree: template priority,
/// then directory distance to the layout file declaring the id, then path
/// and line.
pub fn localize(index: &SourceIndex, widget_id: &str) -> Vec<ResponseMethod> {
    let candidates = index.candidate_files(widget_id);
    let mut found: Vec<ResponseMethod> = candidates.iter().flat_map(|&f| match_file(index, f, widget_id)).collect();
    let decl_re = Regex::new(&format!(r#"@\+id/{}\b"#, regex::escape(widget_id))).unwrap();
    let layout = candidates
        .iter()
        .map(|&f| index.file(f))
        .find(|f| f.kind == FileKind::Layout && decl_re.is_match(&f.masked))
        .map(|f| f.rel.clone());
    found.sort_by(|a, b| {
        let da = layout.as_deref().map_or(0, |l| path_distance(&a.file, l));
        let db = layout.as_deref().map_or(0, |l| path_distance(&b.file, l));
        (a.template.rank(), da, &a.file, a.byte_range.start).cmp(&(b.template.rank(), db, &b.file, b.byte_range.start))
    });
    found.dedup_by(|a, b| a.file == b.file && a.byte_range == b.byte_range && a.template == b.template);
    found
}
