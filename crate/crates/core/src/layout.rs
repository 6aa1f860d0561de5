// SPDX-License-Identifier: Apache-2.0
//! Runtime UI hierarchy dumps and the two XPath forms used by test scripts.
//!
//! Supported selectors:
//!
//! - `//<widgetType>[@content-desc="<text>"]`, matched anywhere in the tree;
//! - `/hierarchy/<viewType>/.../<viewType>[i]/...`, walked from the root with
//!   1-based indices among same-type siblings.
//!
//! Type names compare by simple class name, so `Button` addresses
//! `android.widget.Button`.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// One node for [`LayoutTree::from_parts`]: class, attributes, child indices.
pub type NodeParts = (String, Vec<(String, String)>, Vec<usize>);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("xml syntax error at {line}:{column}: {message}")]
    XmlSyntax { line: u32, column: u32, message: String },
    #[error("malformed bounds {0:?}")]
    BadBounds(String),
    #[error("xpath syntax error in {selector:?}: {reason}")]
    XPathSyntax { selector: String, reason: String },
    #[error("no widget matches {0}")]
    NoMatch(String),
    #[error("selector {0} matches more than one widget")]
    Ambiguous(String),
    #[error("node is not part of this tree")]
    NotInTree,
}

/// Axis-aligned pixel rectangle, right/bottom exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub left: i32,
    pub top: i32,
    pub right: i32,
    pub bottom: i32,
}

impl Rect {
    pub fn new(left: i32, top: i32, right: i32, bottom: i32) -> Rect {
        Rect { left, top, right, bottom }
    }

    pub fn width(&self) -> i64 {
        (self.right as i64 - self.left as i64).max(0)
    }

    pub fn height(&self) -> i64 {
        (self.bottom as i64 - self.top as i64).max(0)
    }

    pub fn area(&self) -> i64 {
        self.width() * self.height()
    }

    pub fn is_degenerate(&self) -> bool {
        self.area() == 0
    }

    pub fn intersection_area(&self, other: &Rect) -> i64 {
        let w = (self.right.min(other.right) as i64 - self.left.max(other.left) as i64).max(0);
        let h = (self.bottom.min(other.bottom) as i64 - self.top.max(other.top) as i64).max(0);
        w * h
    }

    /// Parse the UIAutomator `[l,t][r,b]` form.
    pub fn parse_bounds(s: &str) -> Result<Rect, LayoutError> {
        let bad = || LayoutError::BadBounds(s.to_string());
        let nums: Vec<i32> = s
            .trim()
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(bad)?
            .split("][")
            .flat_map(|pair| pair.split(','))
            .map(|n| n.trim().parse::<i32>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let [l, t, r, b] = nums[..] else { return Err(bad()) };
        if l > r || t > b {
            return Err(bad());
        }
        Ok(Rect::new(l, t, r, b))
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}][{},{}]", self.left, self.top, self.right, self.bottom)
    }
}

impl Serialize for Rect {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.left, self.top, self.right, self.bottom].serialize(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutNode {
    pub tag: String,
    pub attrs: Vec<(String, String)>,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
}

impl LayoutNode {
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    pub fn bounds(&self) -> Option<Rect> {
        self.attr("bounds").and_then(|b| Rect::parse_bounds(b).ok())
    }
}

/// Parsed hierarchy. Node 0 is the root element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutTree {
    nodes: Vec<LayoutNode>,
}

impl LayoutTree {
    pub const ROOT: NodeId = NodeId(0);

    pub fn root(&self) -> NodeId {
        Self::ROOT
    }

    pub fn node(&self, id: NodeId) -> &LayoutNode {
        &self.nodes[id.0]
    }

    pub fn get(&self, id: NodeId) -> Option<&LayoutNode> {
        self.nodes.get(id.0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node ids in document (pre-)order.
    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    /// Build a tree directly; `children` lists are given per node, node 0 is the root.
    pub fn from_parts(parts: Vec<NodeParts>) -> LayoutTree {
        let mut nodes: Vec<LayoutNode> = parts
            .iter()
            .map(|(tag, attrs, children)| LayoutNode {
                tag: tag.clone(),
                attrs: attrs.clone(),
                children: children.iter().map(|&c| NodeId(c)).collect(),
                parent: None,
            })
            .collect();
        for (i, (_, _, children)) in parts.iter().enumerate() {
            for &c in children {
                nodes[c].parent = Some(NodeId(i));
            }
        }
        LayoutTree { nodes }
    }

    fn push(&mut self, node: LayoutNode) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    /// First node (document order) whose resource-id equals `id` or ends with `/<id>`.
    pub fn find_by_resource_id(&self, id: &str) -> Option<NodeId> {
        let simple = id.rsplit('/').next().unwrap_or(id);
        self.ids().find(|&n| {
            self.node(n).attr("resource-id").is_some_and(|rid| {
                rid == id || rid.rsplit('/').next() == Some(simple)
            })
        })
    }
}

/// Parse a UI hierarchy dump. Elements written as `<node class="...">` take
/// their class as tag.
pub fn parse_layout(xml: &str) -> Result<LayoutTree, LayoutError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| {
        let pos = e.pos();
        LayoutError::XmlSyntax { line: pos.row, column: pos.col, message: e.to_string() }
    })?;
    let mut tree = LayoutTree { nodes: Vec::new() };
    add_element(&mut tree, doc.root_element(), None)?;
    Ok(tree)
}

fn add_element(
    tree: &mut LayoutTree,
    el: roxmltree::Node<'_, '_>,
    parent: Option<NodeId>,
) -> Result<NodeId, LayoutError> {
    let attrs: Vec<(String, String)> =
        el.attributes().map(|a| (a.name().to_string(), a.value().to_string())).collect();
    if let Some((_, b)) = attrs.iter().find(|(k, _)| k == "bounds") {
        Rect::parse_bounds(b)?;
    }
    let name = el.tag_name().name();
    let tag = match attrs.iter().find(|(k, _)| k == "class") {
        Some((_, class)) if name == "node" => class.clone(),
        _ => name.to_string(),
    };
    let id = tree.push(LayoutNode { tag, attrs, children: Vec::new(), parent });
    for child in el.children().filter(roxmltree::Node::is_element) {
        let c = add_element(tree, child, Some(id))?;
        tree.nodes[id.0].children.push(c);
    }
    Ok(id)
}

fn simple_name(tag: &str) -> &str {
    tag.rsplit('.').next().unwrap_or(tag)
}

/// Whether a selector type names a widget tag. Unqualified names compare by
/// simple name; two qualified names must be equal.
pub fn type_matches(selector_type: &str, tag: &str) -> bool {
    if selector_type == "*" || selector_type == tag {
        return true;
    }
    if selector_type.contains('.') && tag.contains('.') {
        return false;
    }
    simple_name(selector_type) == simple_name(tag)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub view_type: String,
    pub index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum XPathSelector {
    ContentDesc { widget_type: String, text: String },
    Hierarchy { steps: Vec<Step> },
}

fn is_type_name(s: &str) -> bool {
    s == "*"
        || (!s.is_empty()
            && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.' || c == '$')
            && !s.starts_with('.')
            && !s.ends_with('.'))
}

pub fn parse_xpath(selector: &str) -> Result<XPathSelector, LayoutError> {
    let err = |reason: &str| LayoutError::XPathSyntax {
        selector: selector.to_string(),
        reason: reason.to_string(),
    };
    let s = selector.trim();
    if let Some(rest) = s.strip_prefix("//") {
        let open = rest.find('[').ok_or_else(|| err("missing content-desc predicate"))?;
        let widget_type = &rest[..open];
        if !is_type_name(widget_type) {
            return Err(err("invalid widget type"));
        }
        let pred = rest[open + 1..]
            .strip_suffix(']')
            .ok_or_else(|| err("unclosed predicate"))?
            .trim();
        let value = pred
            .strip_prefix("@content-desc")
            .map(str::trim_start)
            .and_then(|p| p.strip_prefix('='))
            .map(str::trim)
            .ok_or_else(|| err("only @content-desc predicates are supported"))?;
        let quote = value.chars().next().filter(|c| *c == '"' || *c == '\'');
        let text = match quote {
            Some(q) if value.len() >= 2 && value.ends_with(q) => &value[1..value.len() - 1],
            _ => return Err(err("predicate value must be quoted")),
        };
        if text.contains(quote.unwrap()) {
            return Err(err("unexpected quote inside predicate value"));
        }
        return Ok(XPathSelector::ContentDesc {
            widget_type: widget_type.to_string(),
            text: text.to_string(),
        });
    }
    let rest = s.strip_prefix("/hierarchy").ok_or_else(|| err("expected // or /hierarchy"))?;
    if rest.is_empty() {
        return Ok(XPathSelector::Hierarchy { steps: Vec::new() });
    }
    let rest = rest.strip_prefix('/').ok_or_else(|| err("expected / after /hierarchy"))?;
    let mut steps = Vec::new();
    for raw in rest.split('/') {
        let (name, index) = match raw.find('[') {
            None => (raw, None),
            Some(open) => {
                let inner = raw[open + 1..]
                    .strip_suffix(']')
                    .ok_or_else(|| err("unclosed step index"))?;
                let i: usize = inner.trim().parse().map_err(|_| err("step index must be an integer"))?;
                if i == 0 {
                    return Err(err("step indices are 1-based"));
                }
                (&raw[..open], Some(i))
            }
        };
        if !is_type_name(name) || name == "*" {
            return Err(err("invalid view type in step"));
        }
        steps.push(Step { view_type: name.to_string(), index });
    }
    Ok(XPathSelector::Hierarchy { steps })
}

impl fmt::Display for XPathSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XPathSelector::ContentDesc { widget_type, text } => {
                write!(f, "//{widget_type}[@content-desc=\"{text}\"]")
            }
            XPathSelector::Hierarchy { steps } => {
                f.write_str("/hierarchy")?;
                for s in steps {
                    write!(f, "/{}", s.view_type)?;
                    if let Some(i) = s.index {
                        write!(f, "[{i}]")?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// A resolved widget and its textual attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WidgetMatch {
    #[serde(skip)]
    pub node: NodeId,
    pub tag: String,
    pub xpath: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Rect>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub content_desc: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resource_id: Option<String>,
}

impl WidgetMatch {
    pub fn from_node(tree: &LayoutTree, node: NodeId) -> WidgetMatch {
        let n = tree.node(node);
        let owned = |k: &str| n.attr(k).map(str::to_string);
        WidgetMatch {
            node,
            tag: n.tag.clone(),
            xpath: node_xpath(tree, node).unwrap_or_else(|_| "/hierarchy".to_string()),
            bounds: n.bounds(),
            text: owned("text"),
            content_desc: owned("content-desc"),
            resource_id: owned("resource-id"),
        }
    }
}

pub fn resolve_xpath(tree: &LayoutTree, sel: &XPathSelector) -> Result<WidgetMatch, LayoutError> {
    let node = resolve_node(tree, sel)?;
    Ok(WidgetMatch::from_node(tree, node))
}

pub fn resolve_node(tree: &LayoutTree, sel: &XPathSelector) -> Result<NodeId, LayoutError> {
    match sel {
        XPathSelector::ContentDesc { widget_type, text } => {
            let mut hits = tree.ids().filter(|&id| {
                let n = tree.node(id);
                type_matches(widget_type, &n.tag) && n.attr("content-desc") == Some(text.as_str())
            });
            let first = hits.next().ok_or_else(|| LayoutError::NoMatch(sel.to_string()))?;
            if hits.next().is_some() {
                return Err(LayoutError::Ambiguous(sel.to_string()));
            }
            Ok(first)
        }
        XPathSelector::Hierarchy { steps } => {
            let mut cur = tree.root();
            for step in steps {
                let same: Vec<NodeId> = tree
                    .node(cur)
                    .children
                    .iter()
                    .copied()
                    .filter(|&c| type_matches(&step.view_type, &tree.node(c).tag))
                    .collect();
                cur = match step.index {
                    Some(i) => *same.get(i - 1).ok_or_else(|| LayoutError::NoMatch(sel.to_string()))?,
                    None => match same.as_slice() {
                        [] => return Err(LayoutError::NoMatch(sel.to_string())),
                        [only] => *only,
                        _ => return Err(LayoutError::Ambiguous(sel.to_string())),
                    },
                };
            }
            Ok(cur)
        }
    }
}

/// Canonical hierarchy-form selector for `node`. Indices appear only where a
/// node has same-type siblings.
pub fn node_xpath(tree: &LayoutTree, node: NodeId) -> Result<String, LayoutError> {
    if tree.get(node).is_none() {
        return Err(LayoutError::NotInTree);
    }
    let mut steps = Vec::new();
    let mut cur = node;
    while let Some(parent) = tree.node(cur).parent {
        let ty = simple_name(&tree.node(cur).tag);
        let same: Vec<NodeId> = tree
            .node(parent)
            .children
            .iter()
            .copied()
            .filter(|&c| type_matches(ty, &tree.node(c).tag))
            .collect();
        let index = if same.len() > 1 {
            Some(same.iter().position(|&c| c == cur).ok_or(LayoutError::NotInTree)? + 1)
        } else {
            None
        };
        steps.push(Step { view_type: ty.to_string(), index });
        cur = parent;
    }
    if cur != tree.root() {
        return Err(LayoutError::NotInTree);
    }
    steps.reverse();
    Ok(XPathSelector::Hierarchy { steps }.to_string())
}

/// Non-empty `text` then `content-desc`, deduplicated case-insensitively.
pub fn extract_text_attrs(m: &WidgetMatch) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for v in [&m.text, &m.content_desc].into_iter().flatten() {
        let v = v.trim();
        if !v.is_empty() && !out.iter().any(|o| o.to_lowercase() == v.to_lowercase()) {
            out.push(v.to_string());
        }
    }
    out
}
