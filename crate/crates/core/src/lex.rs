// SPDX-License-Identifier: Apache-2.0
//! Lexer for the Java-like sources handled by the script and code analyses.
//!
//! Only what the analyses need is recognized: identifiers, numbers, string
//! and char literals, comments and operator punctuation. Byte offsets are kept
//! on every token so callers can slice the original text verbatim.

use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Char,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Range<usize>,
    /// 1-based line of the first byte.
    pub line: usize,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.span.clone()]
    }

    pub fn is_punct(&self, src: &str, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text(src) == p
    }

    pub fn is_ident(&self, src: &str, name: &str) -> bool {
        self.kind == TokenKind::Ident && self.text(src) == name
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LexError {
    UnbalancedQuote { line: usize },
    UnterminatedComment { line: usize },
}

const PUNCT3: &[&str] = &[">>>", "<<=", ">>=", "..."];
const PUNCT2: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=",
    "^=", "->", "::", "<<",
];

/// Tokenize `src`. Comments are skipped; an unterminated block comment or a
/// string literal running into a newline is an error.
pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            line += 1;
            i += 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let start_line = line;
            i += 2;
            loop {
                if i >= bytes.len() {
                    return Err(LexError::UnterminatedComment { line: start_line });
                }
                if bytes[i] == b'*' && bytes.get(i + 1) == Some(&b'/') {
                    i += 2;
                    break;
                }
                if bytes[i] == b'\n' {
                    line += 1;
                }
                i += 1;
            }
            continue;
        }
        let start = i;
        if c == b'"' || c == b'\'' {
            if c == b'"' && src[i..].starts_with("\"\"\"") {
                // text block
                let body_start = i + 3;
                let Some(rel) = src[body_start..].find("\"\"\"") else {
                    return Err(LexError::UnbalancedQuote { line });
                };
                let end = body_start + rel + 3;
                out.push(Token { kind: TokenKind::Str, span: start..end, line });
                line += src[start..end].matches('\n').count();
                i = end;
                continue;
            }
            i += 1;
            loop {
                match bytes.get(i) {
                    None | Some(b'\n') => return Err(LexError::UnbalancedQuote { line }),
                    Some(b'\\') => i += 2,
                    Some(&q) if q == c => {
                        i += 1;
                        break;
                    }
                    Some(_) => i += 1,
                }
            }
            let kind = if c == b'"' { TokenKind::Str } else { TokenKind::Char };
            out.push(Token { kind, span: start..i, line });
            continue;
        }
        if is_ident_start(src, i) {
            i = ident_end(src, i);
            out.push(Token { kind: TokenKind::Ident, span: start..i, line });
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            i += 1;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'.') {
                i += 1;
            }
            out.push(Token { kind: TokenKind::Number, span: start..i, line });
            continue;
        }
        let rest = &src[i..];
        let len = PUNCT3
            .iter()
            .chain(PUNCT2)
            .find(|p| rest.starts_with(**p))
            .map(|p| p.len())
            .unwrap_or_else(|| rest.chars().next().map_or(1, char::len_utf8));
        i += len;
        out.push(Token { kind: TokenKind::Punct, span: start..i, line });
    }
    Ok(out)
}

fn is_ident_start(src: &str, i: usize) -> bool {
    src[i..]
        .chars()
        .next()
        .is_some_and(|ch| ch == '_' || ch == '$' || ch.is_alphabetic())
}

fn ident_end(src: &str, mut i: usize) -> usize {
    for ch in src[i..].chars() {
        if ch == '_' || ch == '$' || ch.is_alphanumeric() {
            i += ch.len_utf8();
        } else {
            break;
        }
    }
    i
}

/// Decode the escapes of a quoted Java string literal (quotes included).
pub fn unescape_literal(raw: &str) -> String {
    let inner = if raw.starts_with("\"\"\"") && raw.len() >= 6 {
        &raw[3..raw.len() - 3]
    } else if raw.len() >= 2 {
        &raw[1..raw.len() - 1]
    } else {
        raw
    };
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('b') => out.push('\u{8}'),
            Some('f') => out.push('\u{c}'),
            Some('0') => out.push('\0'),
            Some('u') => {
                while chars.peek() == Some(&'u') {
                    chars.next();
                }
                let hex: String = chars.by_ref().take(4).collect();
                match u32::from_str_radix(&hex, 16).ok().and_then(char::from_u32) {
                    Some(ch) => out.push(ch),
                    None => {
                        out.push_str("\\u");
                        out.push_str(&hex);
                    }
                }
            }
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

/// Replace comments (and optionally string/char literal bodies) with spaces,
/// keeping newlines and byte offsets intact. Unterminated constructs are
/// masked to the end of input rather than rejected.
pub fn mask(src: &str, strings: bool) -> String {
    let bytes = src.as_bytes();
    let mut out = bytes.to_vec();
    let blank = |out: &mut Vec<u8>, r: Range<usize>| {
        for b in &mut out[r] {
            if *b != b'\n' {
                *b = b' ';
            }
        }
    };
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            let start = i;
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            blank(&mut out, start..i);
        } else if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let start = i;
            i = src[i + 2..].find("*/").map_or(bytes.len(), |p| i + 2 + p + 2);
            blank(&mut out, start..i);
        } else if c == b'"' || c == b'\'' {
            let start = i;
            i += 1;
            while i < bytes.len() && bytes[i] != c && bytes[i] != b'\n' {
                if bytes[i] == b'\\' {
                    i += 1;
                }
                i += 1;
            }
            i = (i + 1).min(bytes.len());
            if strings && i - start > 2 {
                blank(&mut out, start + 1..i - 1);
            }
        } else {
            i += 1;
        }
    }
    // Only ASCII bytes were overwritten with ASCII spaces, but a multi-byte
    // char may have been partially blanked inside a comment.
    String::from_utf8(out).unwrap_or_else(|e| {
        e.into_bytes()
            .into_iter()
            .map(|b| if b.is_ascii() { b as char } else { ' ' })
            .collect()
    })
}

/// Index of the bracket closing the one at `open`, on masked text.
pub fn matching_close(masked: &str, open: usize) -> Option<usize> {
    let bytes = masked.as_bytes();
    let (o, c) = match bytes.get(open)? {
        b'(' => (b'(', b')'),
        b'{' => (b'{', b'}'),
        b'[' => (b'[', b']'),
        _ => return None,
    };
    let mut depth = 0usize;
    for (i, &b) in bytes.iter().enumerate().skip(open) {
        if b == o {
            depth += 1;
        } else if b == c {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

/// 1-based line number of byte offset `pos`.
pub fn line_of(src: &str, pos: usize) -> usize {
    src.as_bytes()[..pos.min(src.len())].iter().filter(|&&b| b == b'\n').count() + 1
}
