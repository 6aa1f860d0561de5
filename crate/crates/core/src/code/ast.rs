// SPDX-License-Identifier: Apache-2.0
//! Tolerant parser for handler snippets.
//!
//! Covers the statement and expression forms that show up in event
//! handlers: declarations, `if`/`else`, `switch`, loops, `try`, `return`,
//! expression statements, calls, field access, literals, operators, lambdas
//! and anonymous-class bodies. A statement the grammar does not cover becomes
//! one `OPAQUE` leaf holding its raw text, and parsing resumes after it.
//!
//! The resulting tree is the tuple `(N, T, X, s, delta, val)`: interior
//! nodes, leaves, leaf values, root, ordered child map and leaf-value map.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::lex::{self, Token, TokenKind};

pub const OPAQUE: &str = "OPAQUE";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AstError {
    #[error("snippet is empty")]
    EmptySnippet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstNode {
    pub label: String,
    /// Present exactly on leaves.
    pub value: Option<String>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

impl AstNode {
    pub fn is_terminal(&self) -> bool {
        self.value.is_some()
    }
}

/// Labelled tree in preorder; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ast {
    pub nodes: Vec<AstNode>,
}

impl Ast {
    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, i: usize) -> &AstNode {
        &self.nodes[i]
    }

    /// Interior nodes (N).
    pub fn non_terminals(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| !self.nodes[i].is_terminal())
    }

    /// Leaves (T), in preorder.
    pub fn terminals(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_terminal())
    }

    /// Leaf values (X).
    pub fn vocabulary(&self) -> BTreeSet<&str> {
        self.nodes.iter().filter_map(|n| n.value.as_deref()).collect()
    }

    /// val: T -> X.
    pub fn value(&self, i: usize) -> Option<&str> {
        self.nodes[i].value.as_deref()
    }

    /// delta: children of `i` in order.
    pub fn children(&self, i: usize) -> &[usize] {
        &self.nodes[i].children
    }

    pub fn depth(&self, mut i: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.nodes[i].parent {
            d += 1;
            i = p;
        }
        d
    }

    fn from_tree(tree: Tree) -> Ast {
        let mut ast = Ast { nodes: Vec::new() };
        ast.push(tree, None);
        ast
    }

    fn push(&mut self, tree: Tree, parent: Option<usize>) -> usize {
        let id = self.nodes.len();
        match tree {
            Tree::Leaf(label, value) => {
                self.nodes.push(AstNode { label, value: Some(value), parent, children: Vec::new() });
            }
            Tree::Node(label, kids) => {
                self.nodes.push(AstNode { label, value: None, parent, children: Vec::new() });
                for k in kids {
                    let c = self.push(k, Some(id));
                    self.nodes[id].children.push(c);
                }
            }
        }
        id
    }

    /// S-expression rendering, handy in tests and debug output.
    pub fn to_sexpr(&self) -> String {
        let mut s = String::new();
        self.write_sexpr(0, &mut s);
        s
    }

    fn write_sexpr(&self, i: usize, out: &mut String) {
        let n = &self.nodes[i];
        match &n.value {
            Some(v) => out.push_str(&format!("({} {:?})", n.label, v)),
            None => {
                out.push('(');
                out.push_str(&n.label);
                for &c in &n.children {
                    out.push(' ');
                    self.write_sexpr(c, out);
                }
                out.push(')');
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tree {
    Node(String, Vec<Tree>),
    Leaf(String, String),
}

fn node(label: &str, kids: Vec<Tree>) -> Tree {
    if kids.is_empty() {
        // keep val total on leaves
        return Tree::Leaf(label.to_string(), label.to_string());
    }
    Tree::Node(label.to_string(), kids)
}

fn leaf(label: &str, value: impl Into<String>) -> Tree {
    Tree::Leaf(label.to_string(), value.into())
}

/// Build the AST of a method body or method declaration.
pub fn build_ast(snippet: &str) -> Result<Ast, AstError> {
    if snippet.trim().is_empty() {
        return Err(AstError::EmptySnippet);
    }
    let toks = match lex::tokenize(snippet) {
        Ok(t) => t,
        Err(_) => {
            return Ok(Ast::from_tree(node("MethodBody", vec![leaf(OPAQUE, snippet.trim())])));
        }
    };
    if toks.is_empty() {
        return Err(AstError::EmptySnippet);
    }
    let mut p = Parser { src: snippet, toks: &toks, pos: 0 };
    let tree = match p.try_parse(Parser::method_decl) {
        Some(decl) if p.at_end() => decl,
        _ => {
            p.pos = 0;
            let stmts = p.statements_until_end();
            node("MethodBody", stmts)
        }
    };
    Ok(Ast::from_tree(tree))
}

struct Fail;
type PResult<T> = Result<T, Fail>;

struct Parser<'a> {
    src: &'a str,
    toks: &'a [Token],
    pos: usize,
}

const PRIMITIVES: &[&str] = &["int", "long", "short", "byte", "char", "boolean", "float", "double", "void"];
const MODIFIERS: &[&str] = &[
    "public", "private", "protected", "static", "final", "abstract", "synchronized", "native",
    "transient", "volatile", "strictfp", "default",
];
const RESERVED: &[&str] = &[
    "if", "else", "for", "while", "do", "switch", "case", "return", "break", "continue", "throw",
    "try", "catch", "finally", "new", "class", "interface", "enum", "instanceof", "assert",
];

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&'a Token> {
        self.toks.get(self.pos + k)
    }

    fn text(&self, t: &Token) -> &'a str {
        t.text(self.src)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn is_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_punct(self.src, p))
    }

    fn is_punct_at(&self, k: usize, p: &str) -> bool {
        self.peek_at(k).is_some_and(|t| t.is_punct(self.src, p))
    }

    fn is_word(&self, w: &str) -> bool {
        self.peek().is_some_and(|t| t.is_ident(self.src, w))
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(Fail)
        }
    }

    fn ident(&mut self) -> PResult<&'a str> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident && !RESERVED.contains(&self.text(t)) => {
                self.pos += 1;
                Ok(self.text(t))
            }
            _ => Err(Fail),
        }
    }

    fn try_parse<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> Option<T> {
        let save = self.pos;
        match f(self) {
            Ok(v) => Some(v),
            Err(Fail) => {
                self.pos = save;
                None
            }
        }
    }

    fn raw(&self, from: usize, to: usize) -> String {
        if from >= to {
            return String::new();
        }
        self.src[self.toks[from].span.start..self.toks[to - 1].span.end].to_string()
    }

    // ---- declarations -------------------------------------------------

    fn skip_annotations_and_modifiers(&mut self) {
        loop {
            if self.is_punct("@") && !self.peek_at(1).is_some_and(|t| t.is_ident(self.src, "interface")) {
                self.pos += 1;
                while self.ident().is_ok() && self.eat_punct(".") {}
                if self.is_punct("(") {
                    self.skip_balanced();
                }
            } else if self.peek().is_some_and(|t| t.kind == TokenKind::Ident && MODIFIERS.contains(&self.text(t))) {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn skip_balanced(&mut self) {
        let mut depth = 0i32;
        while let Some(t) = self.peek() {
            let s = self.text(t);
            self.pos += 1;
            match s {
                "(" | "{" | "[" => depth += 1,
                ")" | "}" | "]" => {
                    depth -= 1;
                    if depth <= 0 {
                        return;
                    }
                }
                _ => {}
            }
            if depth == 0 {
                return;
            }
        }
    }

    /// `Ident(.Ident)* [<...>] ([])*` or a primitive.
    fn type_ref(&mut self) -> PResult<String> {
        let start = self.pos;
        let first = self.peek().ok_or(Fail)?;
        if first.kind != TokenKind::Ident || RESERVED.contains(&self.text(first)) {
            return Err(Fail);
        }
        self.pos += 1;
        while self.is_punct(".") && self.peek_at(1).is_some_and(|t| t.kind == TokenKind::Ident) {
            self.pos += 2;
        }
        if self.is_punct("<") {
            let mut depth = 0i32;
            while let Some(t) = self.peek() {
                let s = self.text(t);
                match s {
                    "<" => depth += 1,
                    ">" => depth -= 1,
                    ">>>" => depth -= 3,
                    "?" | "," | "." | "[" | "]" | "&" => {}
                    _ if t.kind == TokenKind::Ident => {}
                    _ => return Err(Fail),
                }
                self.pos += 1;
                if depth <= 0 {
                    break;
                }
            }
            if depth != 0 {
                return Err(Fail);
            }
        }
        while self.is_punct("[") && self.is_punct_at(1, "]") {
            self.pos += 2;
        }
        if self.is_punct("...") {
            self.pos += 1;
        }
        let text: String = self.toks[start..self.pos].iter().map(|t| self.text(t)).collect();
        Ok(text)
    }

    fn type_leaf(name: String) -> Tree {
        let label = if PRIMITIVES.contains(&name.as_str()) { "PrimitiveType" } else { "ClassType" };
        leaf(label, name)
    }

    fn parameters(&mut self) -> PResult<Vec<Tree>> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if self.eat_punct(")") {
            return Ok(params);
        }
        loop {
            self.skip_annotations_and_modifiers();
            let ty = self.type_ref()?;
            let name = self.ident()?;
            params.push(node("Parameter", vec![Self::type_leaf(ty), leaf("VarName", name)]));
            if self.eat_punct(")") {
                return Ok(params);
            }
            self.expect_punct(",")?;
        }
    }

    fn method_decl(&mut self) -> PResult<Tree> {
        self.skip_annotations_and_modifiers();
        if self.is_punct("<") {
            self.type_ref().ok();
        }
        let ret = self.type_ref()?;
        let name = self.ident()?;
        if !self.is_punct("(") {
            return Err(Fail);
        }
        let params = self.parameters()?;
        if self.eat_word("throws") {
            loop {
                self.type_ref()?;
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        if !self.is_punct("{") {
            return Err(Fail);
        }
        let body = self.block()?;
        let mut kids = vec![Self::type_leaf(ret), leaf("MethodName", name)];
        if !params.is_empty() {
            kids.push(node("Parameters", params));
        }
        kids.push(body);
        Ok(node("MethodDecl", kids))
    }

    fn class_body(&mut self) -> PResult<Tree> {
        self.expect_punct("{")?;
        let mut members = Vec::new();
        while !self.is_punct("}") {
            if self.at_end() {
                return Err(Fail);
            }
            let start = self.pos;
            if let Some(m) = self.try_parse(Parser::method_decl) {
                members.push(m);
            } else if let Some(f) = self.try_parse(|p| {
                p.skip_annotations_and_modifiers();
                p.local_var_decl()
            }) {
                members.push(f);
            } else {
                self.recover(start);
                members.push(leaf(OPAQUE, self.raw(start, self.pos)));
            }
        }
        self.pos += 1;
        Ok(node("AnonymousClassBody", members))
    }

    // ---- statements ---------------------------------------------------

    fn statements_until_end(&mut self) -> Vec<Tree> {
        let mut out = Vec::new();
        while !self.at_end() {
            if self.is_punct("}") {
                // stray close brace from a sliced snippet
                let start = self.pos;
                self.pos += 1;
                out.push(leaf(OPAQUE, self.raw(start, self.pos)));
                continue;
            }
            out.extend(self.statement_or_opaque());
        }
        out
    }

    fn statement_or_opaque(&mut self) -> Option<Tree> {
        let start = self.pos;
        match self.try_parse(Parser::statement) {
            Some(s) => s,
            None => {
                self.recover(start);
                Some(leaf(OPAQUE, self.raw(start, self.pos)))
            }
        }
    }

    /// Skip to just past the next `;` at depth 0, or past one balanced `{}`
    /// group, or up to an unmatched `}`. Always consumes at least one token.
    fn recover(&mut self, start: usize) {
        self.pos = start;
        let mut depth = 0i32;
        while let Some(t) = self.peek() {
            let s = self.text(t);
            match s {
                "(" | "[" => depth += 1,
                ")" | "]" => depth -= 1,
                "{" => {
                    self.skip_balanced();
                    if depth <= 0 {
                        if self.is_punct(";") || self.is_punct(")") {
                            continue;
                        }
                        break;
                    }
                    continue;
                }
                "}" if depth <= 0 => {
                    if self.pos == start {
                        self.pos += 1;
                    }
                    return;
                }
                ";" if depth <= 0 => {
                    self.pos += 1;
                    return;
                }
                _ => {}
            }
            self.pos += 1;
        }
        if self.pos == start {
            self.pos += 1;
        }
    }

    fn block(&mut self) -> PResult<Tree> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        loop {
            if self.eat_punct("}") {
                break;
            }
            if self.at_end() {
                return Err(Fail);
            }
            stmts.extend(self.statement_or_opaque());
        }
        if stmts.is_empty() {
            return Ok(leaf("Block", "{}"));
        }
        Ok(node("Block", stmts))
    }

    fn paren_expr(&mut self) -> PResult<Tree> {
        self.expect_punct("(")?;
        let e = self.expr()?;
        self.expect_punct(")")?;
        Ok(e)
    }

    fn end_statement(&mut self) -> PResult<()> {
        if self.eat_punct(";") || self.at_end() || self.is_punct("}") {
            Ok(())
        } else {
            Err(Fail)
        }
    }

    /// `Ok(None)` for an empty statement.
    fn statement(&mut self) -> PResult<Option<Tree>> {
        let t = self.peek().ok_or(Fail)?;
        if t.is_punct(self.src, ";") {
            self.pos += 1;
            return Ok(None);
        }
        if t.is_punct(self.src, "{") {
            return self.block().map(Some);
        }
        if t.is_punct(self.src, "@") {
            self.skip_annotations_and_modifiers();
            return self.statement();
        }
        let word = if t.kind == TokenKind::Ident { self.text(t) } else { "" };
        if !word.is_empty() && !RESERVED.contains(&word) && word != "default" && self.is_punct_at(1, ":") && !self.is_punct_at(2, ":") {
            self.pos += 2;
            let body = self.statement()?.unwrap_or_else(|| leaf("Block", "{}"));
            return Ok(Some(node("LabeledStmt", vec![leaf("Name", word), body])));
        }
        let stmt = match word {
            "if" => {
                self.pos += 1;
                let cond = self.paren_expr()?;
                let then = self.statement()?.unwrap_or_else(|| leaf("Block", "{}"));
                let mut kids = vec![cond, then];
                if self.eat_word("else") {
                    kids.push(self.statement()?.unwrap_or_else(|| leaf("Block", "{}")));
                }
                node("IfStmt", kids)
            }
            "while" => {
                self.pos += 1;
                let cond = self.paren_expr()?;
                let body = self.statement()?.unwrap_or_else(|| leaf("Block", "{}"));
                node("WhileStmt", vec![cond, body])
            }
            "do" => {
                self.pos += 1;
                let body = self.statement()?.unwrap_or_else(|| leaf("Block", "{}"));
                if !self.eat_word("while") {
                    return Err(Fail);
                }
                let cond = self.paren_expr()?;
                self.end_statement()?;
                node("DoStmt", vec![body, cond])
            }
            "for" => {
                self.pos += 1;
                self.for_statement()?
            }
            "switch" => {
                self.pos += 1;
                self.switch_statement()?
            }
            "return" => {
                self.pos += 1;
                if self.end_statement().is_ok() {
                    leaf("ReturnStmt", "return")
                } else {
                    let e = self.expr()?;
                    self.end_statement()?;
                    node("ReturnStmt", vec![e])
                }
            }
            "break" | "continue" => {
                self.pos += 1;
                let label = self.ident().ok();
                self.end_statement()?;
                let kind = if word == "break" { "BreakStmt" } else { "ContinueStmt" };
                match label {
                    Some(l) => node(kind, vec![leaf("Name", l)]),
                    None => leaf(kind, word),
                }
            }
            "assert" => {
                self.pos += 1;
                let mut kids = vec![self.expr()?];
                if self.eat_punct(":") {
                    kids.push(self.expr()?);
                }
                self.end_statement()?;
                node("AssertStmt", kids)
            }
            "throw" => {
                self.pos += 1;
                let e = self.expr()?;
                self.end_statement()?;
                node("ThrowStmt", vec![e])
            }
            "try" => {
                self.pos += 1;
                self.try_statement()?
            }
            "synchronized" if self.is_punct_at(1, "(") => {
                self.pos += 1;
                let lock = self.paren_expr()?;
                let body = self.block()?;
                node("SynchronizedStmt", vec![lock, body])
            }
            _ => {
                if let Some(decl) = self.try_parse(|p| {
                    while p.eat_word("final") {}
                    let d = p.local_var_decl()?;
                    Ok(d)
                }) {
                    decl
                } else {
                    let e = self.expr()?;
                    self.end_statement()?;
                    node("ExprStmt", vec![e])
                }
            }
        };
        Ok(Some(stmt))
    }

    fn declarators(&mut self, ty: String) -> PResult<Tree> {
        let mut kids = vec![Self::type_leaf(ty)];
        loop {
            let name = self.ident()?;
            while self.is_punct("[") && self.is_punct_at(1, "]") {
                self.pos += 2;
            }
            let mut d = vec![leaf("VarName", name)];
            if self.eat_punct("=") {
                d.push(if self.is_punct("{") { self.array_init()? } else { self.expr()? });
            }
            kids.push(node("VarDeclarator", d));
            if !self.eat_punct(",") {
                break;
            }
        }
        Ok(node("VarDecl", kids))
    }

    fn local_var_decl(&mut self) -> PResult<Tree> {
        let ty = self.type_ref()?;
        if !self.peek().is_some_and(|t| t.kind == TokenKind::Ident) {
            return Err(Fail);
        }
        if !(self.is_punct_at(1, "=") || self.is_punct_at(1, ";") || self.is_punct_at(1, ",") || self.is_punct_at(1, "[")) {
            return Err(Fail);
        }
        let d = self.declarators(ty)?;
        self.end_statement()?;
        Ok(d)
    }

    fn array_init(&mut self) -> PResult<Tree> {
        self.expect_punct("{")?;
        let mut items = Vec::new();
        while !self.eat_punct("}") {
            items.push(if self.is_punct("{") { self.array_init()? } else { self.expr()? });
            if !self.eat_punct(",") {
                self.expect_punct("}")?;
                break;
            }
        }
        Ok(node("ArrayInitializer", items))
    }

    fn for_statement(&mut self) -> PResult<Tree> {
        self.expect_punct("(")?;
        // enhanced for
        if let Some((ty, name)) = self.try_parse(|p| {
            while p.eat_word("final") {}
            let ty = p.type_ref()?;
            let name = p.ident()?;
            p.expect_punct(":")?;
            Ok((ty, name))
        }) {
            let iter = self.expr()?;
            self.expect_punct(")")?;
            let body = self.statement()?.unwrap_or_else(|| leaf("Block", "{}"));
            let var = node("VarDecl", vec![Self::type_leaf(ty), node("VarDeclarator", vec![leaf("VarName", name)])]);
            return Ok(node("ForEachStmt", vec![var, iter, body]));
        }
        let mut kids = Vec::new();
        if !self.eat_punct(";") {
            if let Some(d) = self.try_parse(Parser::local_var_decl) {
                kids.push(d);
            } else {
                loop {
                    kids.push(self.expr()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct(";")?;
            }
        }
        if !self.eat_punct(";") {
            kids.push(self.expr()?);
            self.expect_punct(";")?;
        }
        if !self.eat_punct(")") {
            loop {
                kids.push(self.expr()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct(")")?;
        }
        kids.push(self.statement()?.unwrap_or_else(|| leaf("Block", "{}")));
        Ok(node("ForStmt", kids))
    }

    fn switch_statement(&mut self) -> PResult<Tree> {
        let selector = self.paren_expr()?;
        self.expect_punct("{")?;
        let mut kids = vec![selector];
        while !self.eat_punct("}") {
            if self.at_end() {
                return Err(Fail);
            }
            let mut entry = Vec::new();
            if self.eat_word("default") {
                entry.push(leaf("DefaultLabel", "default"));
            } else if self.eat_word("case") {
                loop {
                    entry.push(self.ternary()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            } else {
                return Err(Fail);
            }
            if self.eat_punct("->") {
                if self.is_punct("{") {
                    entry.push(self.block()?);
                } else if let Some(s) = self.statement()? {
                    entry.push(s);
                }
            } else {
                self.expect_punct(":")?;
                while !(self.is_word("case") || self.is_word("default") || self.is_punct("}") || self.at_end()) {
                    entry.extend(self.statement_or_opaque());
                }
            }
            kids.push(node("SwitchEntry", entry));
        }
        Ok(node("SwitchStmt", kids))
    }

    fn try_statement(&mut self) -> PResult<Tree> {
        let mut kids = Vec::new();
        if self.is_punct("(") {
            self.pos += 1;
            let mut res = Vec::new();
            while !self.eat_punct(")") {
                if let Some(d) = self.try_parse(|p| {
                    while p.eat_word("final") {}
                    let ty = p.type_ref()?;
                    p.declarators(ty)
                }) {
                    res.push(d);
                } else {
                    res.push(self.expr()?);
                }
                if !self.eat_punct(";") {
                    self.expect_punct(")")?;
                    break;
                }
            }
            kids.push(node("Resources", res));
        }
        kids.push(self.block()?);
        while self.eat_word("catch") {
            self.expect_punct("(")?;
            while self.eat_word("final") {}
            let mut types = vec![Self::type_leaf(self.type_ref()?)];
            while self.eat_punct("|") {
                types.push(Self::type_leaf(self.type_ref()?));
            }
            let name = self.ident()?;
            self.expect_punct(")")?;
            types.push(leaf("VarName", name));
            let body = self.block()?;
            kids.push(node("CatchClause", vec![node("Parameter", types), body]));
        }
        if self.eat_word("finally") {
            kids.push(node("Finally", vec![self.block()?]));
        }
        Ok(node("TryStmt", kids))
    }

    // ---- expressions --------------------------------------------------

    fn expr(&mut self) -> PResult<Tree> {
        let lhs = self.ternary()?;
        const ASSIGN: &[(&str, &str)] = &[
            ("=", "ASSIGN"), ("+=", "PLUS"), ("-=", "MINUS"), ("*=", "MULTIPLY"), ("/=", "DIVIDE"),
            ("%=", "REMAINDER"), ("&=", "BINARY_AND"), ("|=", "BINARY_OR"), ("^=", "XOR"),
            ("<<=", "LEFT_SHIFT"), (">>=", "SIGNED_RIGHT_SHIFT"),
        ];
        if let Some(t) = self.peek() {
            if let Some((_, name)) = ASSIGN.iter().find(|(op, _)| t.is_punct(self.src, op)) {
                self.pos += 1;
                let rhs = if self.is_punct("{") { self.array_init()? } else { self.expr()? };
                return Ok(node(&format!("AssignExpr:{name}"), vec![lhs, rhs]));
            }
        }
        Ok(lhs)
    }

    fn ternary(&mut self) -> PResult<Tree> {
        let cond = self.binary(0)?;
        if self.eat_punct("?") {
            let a = self.ternary()?;
            self.expect_punct(":")?;
            let b = self.ternary()?;
            return Ok(node("ConditionalExpr", vec![cond, a, b]));
        }
        Ok(cond)
    }

    /// Binary operator at the cursor: (label, precedence, token count).
    fn binary_op(&self) -> Option<(&'static str, u8, usize)> {
        let t = self.peek()?;
        if t.kind == TokenKind::Ident {
            return (self.text(t) == "instanceof").then_some(("instanceof", 6, 1));
        }
        if t.kind != TokenKind::Punct {
            return None;
        }
        let s = self.text(t);
        // `>>` arrives as two adjacent `>` tokens
        if s == ">" {
            if let Some(n) = self.peek_at(1) {
                if n.is_punct(self.src, ">") && n.span.start == t.span.end {
                    return Some(("SIGNED_RIGHT_SHIFT", 7, 2));
                }
            }
        }
        Some(match s {
            "||" => ("OR", 1, 1),
            "&&" => ("AND", 2, 1),
            "|" => ("BINARY_OR", 3, 1),
            "^" => ("XOR", 4, 1),
            "&" => ("BINARY_AND", 5, 1),
            "==" => ("EQUALS", 6, 1),
            "!=" => ("NOT_EQUALS", 6, 1),
            "<" => ("LESS", 6, 1),
            ">" => ("GREATER", 6, 1),
            "<=" => ("LESS_EQUALS", 6, 1),
            ">=" => ("GREATER_EQUALS", 6, 1),
            "<<" => ("LEFT_SHIFT", 7, 1),
            ">>>" => ("UNSIGNED_RIGHT_SHIFT", 7, 1),
            "+" => ("PLUS", 8, 1),
            "-" => ("MINUS", 8, 1),
            "*" => ("MULTIPLY", 9, 1),
            "/" => ("DIVIDE", 9, 1),
            "%" => ("REMAINDER", 9, 1),
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Tree> {
        let mut lhs = self.unary()?;
        while let Some((name, prec, width)) = self.binary_op() {
            if prec <= min_prec {
                break;
            }
            self.pos += width;
            if name == "instanceof" {
                let ty = self.type_ref()?;
                let mut kids = vec![lhs, Self::type_leaf(ty)];
                if let Ok(binding) = self.ident() {
                    kids.push(leaf("VarName", binding));
                }
                lhs = node("InstanceOfExpr", kids);
                continue;
            }
            let rhs = self.binary(prec)?;
            lhs = node(&format!("BinaryExpr:{name}"), vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Tree> {
        const PREFIX: &[(&str, &str)] = &[
            ("!", "NOT"), ("-", "MINUS"), ("+", "PLUS"), ("~", "BITWISE_COMPLEMENT"),
            ("++", "PREFIX_INCREMENT"), ("--", "PREFIX_DECREMENT"),
        ];
        if let Some(t) = self.peek() {
            if let Some((_, name)) = PREFIX.iter().find(|(op, _)| t.is_punct(self.src, op)) {
                self.pos += 1;
                let e = self.unary()?;
                return Ok(node(&format!("UnaryExpr:{name}"), vec![e]));
            }
        }
        if let Some(cast) = self.try_parse(Parser::cast) {
            return Ok(cast);
        }
        let p = self.primary()?;
        self.postfix(p)
    }

    fn cast(&mut self) -> PResult<Tree> {
        self.expect_punct("(")?;
        let ty = self.type_ref()?;
        self.expect_punct(")")?;
        let next = self.peek().ok_or(Fail)?;
        let ok = match next.kind {
            TokenKind::Ident => !RESERVED.contains(&self.text(next)) || self.text(next) == "new",
            TokenKind::Str | TokenKind::Char | TokenKind::Number => true,
            TokenKind::Punct => {
                ["(", "!", "~"].contains(&self.text(next)) || PRIMITIVES.contains(&ty.as_str())
            }
        };
        if !ok {
            return Err(Fail);
        }
        let e = self.unary()?;
        Ok(node("CastExpr", vec![Self::type_leaf(ty), e]))
    }

    fn arguments(&mut self) -> PResult<Vec<Tree>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if self.eat_punct(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat_punct(")") {
                return Ok(args);
            }
            self.expect_punct(",")?;
        }
    }

    fn lambda_body(&mut self) -> PResult<Tree> {
        if self.is_punct("{") {
            self.block()
        } else {
            self.expr()
        }
    }

    fn lambda(&mut self) -> PResult<Tree> {
        let mut params = Vec::new();
        if self.eat_punct("(") {
            if !self.eat_punct(")") {
                loop {
                    let first = self.ident()?;
                    let param = if let Ok(name) = self.ident() {
                        node("Parameter", vec![Self::type_leaf(first.to_string()), leaf("VarName", name)])
                    } else {
                        node("Parameter", vec![leaf("VarName", first)])
                    };
                    params.push(param);
                    if self.eat_punct(")") {
                        break;
                    }
                    self.expect_punct(",")?;
                }
            }
        } else {
            params.push(node("Parameter", vec![leaf("VarName", self.ident()?)]));
        }
        self.expect_punct("->")?;
        let body = self.lambda_body()?;
        params.push(body);
        Ok(node("LambdaExpr", params))
    }

    fn primary(&mut self) -> PResult<Tree> {
        let t = self.peek().ok_or(Fail)?;
        let text = self.text(t);
        match t.kind {
            TokenKind::Number => {
                self.pos += 1;
                let is_float = text.contains('.')
                    || (!text.starts_with("0x") && !text.starts_with("0X") && text.contains(['e', 'E', 'f', 'F', 'd', 'D']));
                Ok(leaf(if is_float { "DoubleLiteral" } else { "IntegerLiteral" }, text))
            }
            TokenKind::Str => {
                self.pos += 1;
                Ok(leaf("StringLiteral", lex::unescape_literal(text)))
            }
            TokenKind::Char => {
                self.pos += 1;
                Ok(leaf("CharLiteral", lex::unescape_literal(text)))
            }
            TokenKind::Punct if text == "(" => {
                if let Some(l) = self.try_parse(Parser::lambda) {
                    return Ok(l);
                }
                self.pos += 1;
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(node("EnclosedExpr", vec![e]))
            }
            TokenKind::Punct => Err(Fail),
            TokenKind::Ident => match text {
                "true" | "false" => {
                    self.pos += 1;
                    Ok(leaf("BooleanLiteral", text))
                }
                "null" => {
                    self.pos += 1;
                    Ok(leaf("NullLiteral", "null"))
                }
                "this" => {
                    self.pos += 1;
                    if self.is_punct("(") {
                        let args = self.arguments()?;
                        let mut kids = vec![leaf("ThisExpr", "this")];
                        kids.extend(args);
                        return Ok(node("ConstructorCall", kids));
                    }
                    Ok(leaf("ThisExpr", "this"))
                }
                "super" => {
                    self.pos += 1;
                    Ok(leaf("SuperExpr", "super"))
                }
                "new" => {
                    self.pos += 1;
                    self.creation()
                }
                _ if RESERVED.contains(&text) => Err(Fail),
                _ if PRIMITIVES.contains(&text) && self.is_punct_at(1, ".") => {
                    // int.class
                    self.pos += 1;
                    Ok(Self::type_leaf(text.to_string()))
                }
                _ => {
                    if self.is_punct_at(1, "->") {
                        return self.lambda();
                    }
                    self.pos += 1;
                    if self.is_punct("(") {
                        let args = self.arguments()?;
                        let mut kids = vec![leaf("MethodName", text)];
                        kids.extend(args);
                        return Ok(node("MethodCall", kids));
                    }
                    Ok(leaf("Name", text))
                }
            },
        }
    }

    fn creation(&mut self) -> PResult<Tree> {
        let mut ty = self.type_ref()?;
        if self.is_punct("[") {
            let mut dims = Vec::new();
            while self.eat_punct("[") {
                if self.eat_punct("]") {
                    ty.push_str("[]");
                    continue;
                }
                dims.push(self.expr()?);
                self.expect_punct("]")?;
                ty.push_str("[]");
            }
            let mut kids = vec![Self::type_leaf(ty)];
            kids.extend(dims);
            if self.is_punct("{") {
                kids.push(self.array_init()?);
            }
            return Ok(node("ArrayCreationExpr", kids));
        }
        let mut kids = vec![Self::type_leaf(ty)];
        kids.extend(self.arguments()?);
        if self.is_punct("{") {
            kids.push(self.class_body()?);
        }
        Ok(node("ObjectCreationExpr", kids))
    }

    fn postfix(&mut self, mut e: Tree) -> PResult<Tree> {
        loop {
            if self.eat_punct(".") {
                if self.is_punct("<") {
                    self.type_ref().ok();
                    self.skip_generic_args()?;
                }
                if self.eat_word("new") {
                    let c = self.creation()?;
                    e = node("ScopedCreation", vec![e, c]);
                    continue;
                }
                let t = self.peek().ok_or(Fail)?;
                if t.kind != TokenKind::Ident {
                    return Err(Fail);
                }
                let name = self.text(t);
                self.pos += 1;
                if self.is_punct("(") {
                    let args = self.arguments()?;
                    let mut kids = vec![e, leaf("MethodName", name)];
                    kids.extend(args);
                    e = node("MethodCall", kids);
                } else {
                    e = node("FieldAccess", vec![e, leaf("Name", name)]);
                }
            } else if self.is_punct("[") {
                self.pos += 1;
                let idx = self.expr()?;
                self.expect_punct("]")?;
                e = node("ArrayAccess", vec![e, idx]);
            } else if self.eat_punct("::") {
                let t = self.peek().ok_or(Fail)?;
                if t.kind != TokenKind::Ident {
                    return Err(Fail);
                }
                self.pos += 1;
                e = node("MethodReference", vec![e, leaf("MethodName", self.text(t))]);
            } else if self.is_punct("++") || self.is_punct("--") {
                let name = if self.is_punct("++") { "POSTFIX_INCREMENT" } else { "POSTFIX_DECREMENT" };
                self.pos += 1;
                e = node(&format!("UnaryExpr:{name}"), vec![e]);
            } else {
                return Ok(e);
            }
        }
    }

    fn skip_generic_args(&mut self) -> PResult<()> {
        if !self.is_punct("<") {
            return Ok(());
        }
        let mut depth = 0i32;
        while let Some(t) = self.peek() {
            match self.text(t) {
                "<" => depth += 1,
                ">" => depth -= 1,
                _ => {}
            }
            self.pos += 1;
            if depth == 0 {
                return Ok(());
            }
        }
        Err(Fail)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sexpr(s: &str) -> String {
        build_ast(s).unwrap().to_sexpr()
    }

    #[test]
    fn return_name() {
        assert_eq!(sexpr("return a;"), r#"(MethodBody (ReturnStmt (Name "a")))"#);
    }

    #[test]
    fn empty_snippet() {
        assert_eq!(build_ast(""), Err(AstError::EmptySnippet));
        assert_eq!(build_ast("  \n "), Err(AstError::EmptySnippet));
        assert_eq!(build_ast("// only a comment"), Err(AstError::EmptySnippet));
    }

    #[test]
    fn calls_and_fields() {
        assert_eq!(
            sexpr("db.insert(note);"),
            r#"(MethodBody (ExprStmt (MethodCall (Name "db") (MethodName "insert") (Name "note"))))"#
        );
        assert_eq!(
            sexpr("this.count = x.size + 1;"),
            r#"(MethodBody (ExprStmt (AssignExpr:ASSIGN (FieldAccess (ThisExpr "this") (Name "count")) (BinaryExpr:PLUS (FieldAccess (Name "x") (Name "size")) (IntegerLiteral "1")))))"#
        );
    }

    #[test]
    fn declarations_and_control_flow() {
        let s = sexpr(r#"String q = edit.getText().toString(); if (q.isEmpty()) { toast("empty"); } else search(q);"#);
        assert_eq!(
            s,
            r#"(MethodBody (VarDecl (ClassType "String") (VarDeclarator (VarName "q") (MethodCall (MethodCall (Name "edit") (MethodName "getText")) (MethodName "toString")))) (IfStmt (MethodCall (Name "q") (MethodName "isEmpty")) (Block (ExprStmt (MethodCall (MethodName "toast") (StringLiteral "empty")))) (ExprStmt (MethodCall (MethodName "search") (Name "q")))))"#
        );
    }

    #[test]
    fn method_declaration_root() {
        let s = sexpr("@OnClick(R.id.go)\npublic void go(View v) { submit(); }");
        assert_eq!(
            s,
            r#"(MethodDecl (PrimitiveType "void") (MethodName "go") (Parameters (Parameter (ClassType "View") (VarName "v"))) (Block (ExprStmt (MethodCall (MethodName "submit")))))"#
        );
    }

    #[test]
    fn lambdas_and_anonymous_classes() {
        let s = sexpr("b.setOnClickListener(v -> open(v)); c.setOnClickListener(new View.OnClickListener() { @Override public void onClick(View v) { close(); } });");
        assert!(s.contains(r#"(LambdaExpr (Parameter (VarName "v")) (MethodCall (MethodName "open") (Name "v")))"#), "{s}");
        assert!(s.contains(r#"(AnonymousClassBody (MethodDecl (PrimitiveType "void") (MethodName "onClick")"#), "{s}");
    }

    #[test]
    fn switch_loops_try() {
        let s = sexpr("switch (k) { case 1: a(); break; default: b(); } for (int i = 0; i < n; i++) c(i); for (Item it : items) d(it); try { e(); } catch (IOException | X ex) { f(); } finally { g(); }");
        for label in ["SwitchStmt", "SwitchEntry", "BreakStmt", "DefaultLabel", "ForStmt", "ForEachStmt", "TryStmt", "CatchClause", "Finally"] {
            assert!(s.contains(label), "{label} missing in {s}");
        }
        assert!(!s.contains(OPAQUE), "{s}");
    }

    #[test]
    fn unsupported_construct_becomes_opaque() {
        let ast = build_ast("a(); class Local { int x; } b();").unwrap();
        let opaque: Vec<_> = ast.nodes.iter().filter(|n| n.label == OPAQUE).collect();
        assert_eq!(opaque.len(), 1);
        assert_eq!(opaque[0].value.as_deref(), Some("class Local { int x; }"));
        assert!(ast.to_sexpr().contains(r#"(MethodName "b")"#));
        let ast = build_ast("x = \"unterminated;").unwrap();
        assert_eq!(ast.to_sexpr(), r#"(MethodBody (OPAQUE "x = \"unterminated;"))"#);
    }

    #[test]
    fn casts_and_generics() {
        let s = sexpr("Button b = (Button) findViewById(id); List<String> xs = new ArrayList<>(); int n = (int) (x * 2);");
        assert!(s.contains(r#"(CastExpr (ClassType "Button") (MethodCall (MethodName "findViewById") (Name "id")))"#), "{s}");
        assert!(s.contains(r#"(ClassType "List<String>")"#), "{s}");
        assert!(s.contains(r#"(ObjectCreationExpr (ClassType "ArrayList<>"))"#), "{s}");
        assert!(s.contains(r#"(CastExpr (PrimitiveType "int") (EnclosedExpr"#), "{s}");
        assert!(!s.contains(OPAQUE));
    }

    #[test]
    fn tree_invariants() {
        let ast = build_ast("if (a == b) { c.d(e, \"f\"); } else { }").unwrap();
        for (i, n) in ast.nodes.iter().enumerate() {
            assert!(n.is_terminal() != !n.children.is_empty(), "node {i} must be leaf xor interior");
            for &c in &n.children {
                assert_eq!(ast.nodes[c].parent, Some(i));
            }
            if i != 0 {
                assert!(n.parent.is_some());
            }
        }
        assert!(ast.vocabulary().contains("f"));
    }
}
