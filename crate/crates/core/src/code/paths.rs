// SPDX-License-Identifier: Apache-2.0
//! Leaf-to-leaf paths through an [`Ast`].

use std::fmt;

use serde::Serialize;

use super::ast::{Ast, OPAQUE};

pub const DEFAULT_MAX_PATH_LEN: usize = 9;

const UP: char = '↑';
const DOWN: char = '↓';

/// A path between two terminals.
///
/// `node_labels` runs from the start terminal to the end terminal. Labels
/// climbing toward the lowest common ancestor carry a trailing `↑`, labels
/// after it a leading `↓`, and the ancestor itself is unmarked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AstPath {
    pub start_subtokens: Vec<String>,
    pub node_labels: Vec<String>,
    pub end_subtokens: Vec<String>,
}

impl AstPath {
    pub fn len(&self) -> usize {
        self.node_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_labels.is_empty()
    }

    /// The same path walked from the other end.
    pub fn reversed(&self) -> AstPath {
        let node_labels = self
            .node_labels
            .iter()
            .rev()
            .map(|l| {
                if let Some(base) = l.strip_suffix(UP) {
                    format!("{DOWN}{base}")
                } else if let Some(base) = l.strip_prefix(DOWN) {
                    format!("{base}{UP}")
                } else {
                    l.clone()
                }
            })
            .collect();
        AstPath {
            start_subtokens: self.end_subtokens.clone(),
            node_labels,
            end_subtokens: self.start_subtokens.clone(),
        }
    }
}

/// `start|subs,Label↑...↓Label,end|subs`
impl fmt::Display for AstPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.start_subtokens.join("|"), self.node_labels.concat(), self.end_subtokens.join("|"))
    }
}

/// Split an identifier or literal into lowercase subtokens at camelCase,
/// underscore, punctuation and letter/digit boundaries.
///
/// ```
/// use script_intent::code::subtokenize;
/// assert_eq!(subtokenize("setOnClickListener"), ["set", "on", "click", "listener"]);
/// assert_eq!(subtokenize("HTMLParser2_x"), ["html", "parser", "2", "x"]);
/// ```
pub fn subtokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    for run in s.split(|c: char| !c.is_alphanumeric()).filter(|r| !r.is_empty()) {
        let chars: Vec<char> = run.chars().collect();
        let mut cur = String::new();
        for (i, &c) in chars.iter().enumerate() {
            if i > 0 && !cur.is_empty() {
                let prev = chars[i - 1];
                let next = chars.get(i + 1).copied();
                let boundary = (prev.is_lowercase() && c.is_uppercase())
                    || (prev.is_alphabetic() != c.is_alphabetic())
                    || (prev.is_uppercase() && c.is_uppercase() && next.is_some_and(char::is_lowercase));
                if boundary {
                    out.push(std::mem::take(&mut cur).to_lowercase());
                }
            }
            cur.push(c);
        }
        if !cur.is_empty() {
            out.push(cur.to_lowercase());
        }
    }
    out
}

fn terminal_subtokens(ast: &Ast, t: usize) -> Vec<String> {
    let n = ast.node(t);
    let subs = subtokenize(n.value.as_deref().unwrap_or(""));
    if subs.is_empty() {
        vec![n.label.to_lowercase()]
    } else {
        subs
    }
}

fn ancestors(ast: &Ast, mut i: usize) -> Vec<usize> {
    let mut chain = vec![i];
    while let Some(p) = ast.node(i).parent {
        chain.push(p);
        i = p;
    }
    chain.reverse();
    chain
}

/// Path between two distinct terminals, or `None` when longer than `max_len`.
pub fn path_between(ast: &Ast, a: usize, b: usize, max_len: usize) -> Option<AstPath> {
    let ca = ancestors(ast, a);
    let cb = ancestors(ast, b);
    let common = ca.iter().zip(&cb).take_while(|(x, y)| x == y).count();
    let lca = common - 1;
    let len = (ca.len() - lca) + (cb.len() - lca) - 1;
    if len > max_len {
        return None;
    }
    let mut labels = Vec::with_capacity(len);
    for &n in ca[lca + 1..].iter().rev() {
        labels.push(format!("{}{UP}", ast.node(n).label));
    }
    labels.push(ast.node(ca[lca]).label.clone());
    for &n in &cb[lca + 1..] {
        labels.push(format!("{DOWN}{}", ast.node(n).label));
    }
    Some(AstPath {
        start_subtokens: terminal_subtokens(ast, a),
        node_labels: labels,
        end_subtokens: terminal_subtokens(ast, b),
    })
}

/// One path per unordered pair of non-OPAQUE terminals whose path has at
/// most `max_len` node labels (both terminals included). Each pair is
/// oriented so the smaller subtoken string comes first; pairs appear in
/// preorder of their first, then second, terminal.
pub fn extract_paths(ast: &Ast, max_len: usize) -> Vec<AstPath> {
    let terms: Vec<usize> = ast.terminals().filter(|&t| ast.node(t).label != OPAQUE).collect();
    let mut out = Vec::new();
    for (i, &a) in terms.iter().enumerate() {
        for &b in &terms[i + 1..] {
            if let Some(p) = path_between(ast, a, b, max_len) {
                if p.start_subtokens.join("|") > p.end_subtokens.join("|") {
                    out.push(p.reversed());
                } else {
                    out.push(p);
                }
            }
        }
    }
    out
}
