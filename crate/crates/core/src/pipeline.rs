// SPDX-License-Identifier: Apache-2.0
//! End-to-end intent generation for one script.
//!
//! XPath-located operations are explained from the GUI trace: the layout
//! node the selector resolves to, OCR text over its bounds and a caption of
//! the widget image. Id-located operations are explained from the handler
//! code found in the app source tree. When no handler is found the widget
//! carrying that resource-id in the layout is used instead, and the op's
//! evidence says so.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{CaptionBackend, CodeBackend};
use crate::code::{self, AstPath, ResponseMethod, SourceIndex};
use crate::gui::{self, Gallery, Intent, IntentSource, OcrToken};
use crate::layout::{self, LayoutTree, WidgetMatch};
use crate::script::{Action, LocatorKind, Operation, OperationSequence};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read bundle manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("bundle file missing: {0}")]
    MissingFile(PathBuf),
    #[error("bundle has no entry for operation {0}")]
    BundleIncomplete(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct BundleEntry {
    pub index: usize,
    pub screenshot: PathBuf,
    #[serde(default)]
    pub widget_image: Option<PathBuf>,
    pub layout: PathBuf,
    #[serde(default)]
    pub ocr: Option<PathBuf>,
}

#[derive(Deserialize)]
struct Manifest {
    operations: Vec<BundleEntry>,
}

/// Files dumped for each operation of a recorded run, read from
/// `manifest.json` with paths relative to the bundle directory.
#[derive(Debug, Clone, Default)]
pub struct TraceBundle {
    pub root: PathBuf,
    pub entries: BTreeMap<usize, BundleEntry>,
}

impl TraceBundle {
    pub const MANIFEST: &'static str = "manifest.json";

    pub fn load(root: &Path) -> Result<TraceBundle, PipelineError> {
        let path = root.join(Self::MANIFEST);
        let manifest_err = |message: String| PipelineError::Manifest { path: path.clone(), message };
        let text = fs::read_to_string(&path).map_err(|e| manifest_err(e.to_string()))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| manifest_err(e.to_string()))?;
        let mut entries = BTreeMap::new();
        for mut e in manifest.operations {
            e.screenshot = root.join(&e.screenshot);
            e.layout = root.join(&e.layout);
            e.widget_image = e.widget_image.map(|p| root.join(p));
            e.ocr = e.ocr.map(|p| root.join(p));
            let files = [Some(&e.screenshot), Some(&e.layout), e.widget_image.as_ref(), e.ocr.as_ref()];
            for f in files.into_iter().flatten() {
                if !f.is_file() {
                    return Err(PipelineError::MissingFile(f.clone()));
                }
            }
            if entries.insert(e.index, e.clone()).is_some() {
                return Err(manifest_err(format!("operation {} listed twice", e.index)));
            }
        }
        Ok(TraceBundle { root: root.to_path_buf(), entries })
    }

    pub fn entry(&self, index: usize) -> Option<&BundleEntry> {
        self.entries.get(&index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Config {
    pub max_path_len: usize,
    pub inline_depth: usize,
}

impl Default for Config {
    fn default() -> Config {
        Config { max_path_len: code::DEFAULT_MAX_PATH_LEN, inline_depth: code::DEFAULT_INLINE_DEPTH }
    }
}

/// Optional model backends. Without them captions come from the gallery
/// and code intents from the name-based fallback.
#[derive(Clone, Copy, Default)]
pub struct Backends<'a> {
    pub caption: Option<&'a dyn CaptionBackend>,
    pub code: Option<&'a dyn CodeBackend>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Evidence {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response_method: Option<ResponseMethod>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub paths: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub widget_match: Option<WidgetMatch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caption: Option<Intent>,
    /// Id op explained from its layout node because no handler was found.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub gui_fallback: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpReport {
    pub index: usize,
    pub locator_kind: LocatorKind,
    pub selector: String,
    pub action: Action,
    pub intents: Vec<Intent>,
    pub mapped: bool,
    pub evidence: Evidence,
    #[serde(skip)]
    pub ast_paths: Vec<AstPath>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ReportStats {
    pub total_ops: usize,
    pub mapped_ops: usize,
    pub gui_count: usize,
    pub code_count: usize,
}

impl ReportStats {
    pub fn recount(ops: &[OpReport]) -> ReportStats {
        let mut s = ReportStats { total_ops: ops.len(), ..ReportStats::default() };
        for op in ops.iter().filter(|o| !o.intents.is_empty()) {
            s.mapped_ops += 1;
            if op.intents.iter().any(|i| i.source == IntentSource::Code) {
                s.code_count += 1;
            } else {
                s.gui_count += 1;
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntentReport {
    pub script: String,
    pub ops: Vec<OpReport>,
    pub script_intent: String,
    pub stats: ReportStats,
}

impl IntentReport {
    /// True when at least one operation failed and was left unmapped.
    pub fn has_errors(&self) -> bool {
        self.ops.iter().any(|o| o.evidence.error.is_some())
    }

    /// Every AST path of every code-explained operation, in op order.
    pub fn dump_paths(&self) -> String {
        let mut out = String::new();
        for p in self.ops.iter().flat_map(|o| &o.ast_paths) {
            let _ = writeln!(out, "{p}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
}

/// Fold per-operation intents into one description. Consecutive repeats
/// (ignoring case) are dropped, and operations without an intent appear as
/// transitions.
pub fn aggregate<S: AsRef<str>>(intents_in_order: &[Option<S>]) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut prev: Option<String> = None;
    for (i, intent) in intents_in_order.iter().enumerate() {
        let text = intent.as_ref().map(|s| s.as_ref().trim()).filter(|s| !s.is_empty());
        match text {
            Some(t) => {
                let key = t.to_lowercase();
                if prev.as_deref() == Some(key.as_str()) {
                    continue;
                }
                parts.push(format!("step {}: {t}", i + 1));
                prev = Some(key);
            }
            None => {
                parts.push(format!("step {}: (transition)", i + 1));
                prev = None;
            }
        }
    }
    parts.join("; ")
}

fn read_layout(path: &Path) -> Result<LayoutTree, String> {
    let xml = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    layout::parse_layout(&xml).map_err(|e| format!("{}: {e}", path.display()))
}

fn read_ocr(entry: &BundleEntry) -> Result<Vec<OcrToken>, String> {
    let Some(path) = &entry.ocr else { return Ok(Vec::new()) };
    let json = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    gui::parse_ocr_tokens(&json).map_err(|e| format!("{}: {e}", path.display()))
}

struct Shared<'a> {
    bundle: &'a TraceBundle,
    index: &'a SourceIndex,
    gallery: &'a Gallery,
    backends: Backends<'a>,
    config: Config,
}

fn gui_intent(m: &WidgetMatch, entry: &BundleEntry, cx: &Shared, ev: &mut Evidence) -> Result<Option<Intent>, String> {
    let tokens = read_ocr(entry)?;
    let textual = gui::textual_intent(m, &tokens);
    let mut visual = None;
    if let Some(img) = &entry.widget_image {
        if cx.backends.caption.is_some() || !cx.gallery.is_empty() {
            visual = gui::caption_widget(img, cx.gallery, cx.backends.caption).map_err(|e| e.to_string())?;
        }
    }
    ev.widget_match = Some(m.clone());
    ev.caption = visual.clone();
    Ok(gui::merge_gui_intents(visual, textual))
}

fn xpath_op(op: &Operation, entry: &BundleEntry, cx: &Shared, ev: &mut Evidence) -> Result<Option<Intent>, String> {
    let tree = read_layout(&entry.layout)?;
    let sel = layout::parse_xpath(&op.selector).map_err(|e| e.to_string())?;
    let m = layout::resolve_xpath(&tree, &sel).map_err(|e| e.to_string())?;
    gui_intent(&m, entry, cx, ev)
}

fn id_op(
    op: &Operation,
    entry: &BundleEntry,
    cx: &Shared,
    ev: &mut Evidence,
    paths_out: &mut Vec<AstPath>,
) -> Result<Option<Intent>, String> {
    if let Some(rm) = code::localize(cx.index, op.simple_id()).into_iter().next() {
        let rm = code::inline_nested(&rm, cx.index, cx.config.inline_depth);
        let paths = match code::build_ast(&rm.snippet) {
            Ok(ast) => code::extract_paths(&ast, cx.config.max_path_len),
            Err(_) => Vec::new(),
        };
        ev.paths = paths.iter().map(ToString::to_string).collect();
        let intent = code::code_intent(&rm, &paths, cx.backends.code).map_err(|e| e.to_string());
        ev.response_method = Some(rm);
        *paths_out = paths;
        let intent = intent?;
        if intent.is_some() {
            return Ok(intent);
        }
    }
    let tree = read_layout(&entry.layout)?;
    let Some(node) = tree.find_by_resource_id(&op.selector) else { return Ok(None) };
    ev.gui_fallback = true;
    let m = WidgetMatch::from_node(&tree, node);
    gui_intent(&m, entry, cx, ev)
}

fn run_op(op: &Operation, cx: &Shared) -> OpReport {
    let mut ev = Evidence::default();
    let mut ast_paths = Vec::new();
    let entry = cx.bundle.entry(op.index).expect("coverage checked before dispatch");
    let result = match op.locator_kind {
        LocatorKind::XPath => xpath_op(op, entry, cx, &mut ev),
        LocatorKind::Id => id_op(op, entry, cx, &mut ev, &mut ast_paths),
    };
    let intents = match result {
        Ok(i) => i.into_iter().map(|i| i.for_op(op.index)).collect(),
        Err(e) => {
            log::warn!("operation {} ({}): {e}", op.index, op.selector);
            ev.error = Some(e);
            Vec::new()
        }
    };
    OpReport {
        index: op.index,
        locator_kind: op.locator_kind,
        selector: op.selector.clone(),
        action: op.action.clone(),
        mapped: !intents.is_empty(),
        intents,
        evidence: ev,
        ast_paths,
    }
}

/// Explain every operation of `script` and aggregate the result. Operations
/// run in parallel; the report lists them in script order.
pub fn run_pipeline(
    script: &OperationSequence,
    bundle: &TraceBundle,
    source: &SourceIndex,
    gallery: &Gallery,
    backends: Backends,
    config: Config,
) -> Result<IntentReport, PipelineError> {
    if let Some(op) = script.operations.iter().find(|op| bundle.entry(op.index).is_none()) {
        return Err(PipelineError::BundleIncomplete(op.index));
    }
    let cx = Shared { bundle, index: source, gallery, backends, config };
    let mut ops: Vec<OpReport> = script.operations.par_iter().map(|op| run_op(op, &cx)).collect();
    ops.sort_by_key(|o| o.index);
    let texts: Vec<Option<&str>> = ops.iter().map(|o| o.intents.first().map(|i| i.text.as_str())).collect();
    let script_intent = aggregate(&texts);
    let stats = ReportStats::recount(&ops);
    Ok(IntentReport { script: script.script_path.clone(), ops, script_intent, stats })
}

pub fn render_report(r: &IntentReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(r).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Markdown => render_markdown(r),
    }
}

fn render_markdown(r: &IntentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Test intent: {}\n", r.script);
    let intent = if r.script_intent.is_empty() { "(none)" } else { r.script_intent.as_str() };
    let _ = writeln!(out, "**Intent:** {intent}\n");
    let s = r.stats;
    let _ = writeln!(
        out,
        "Operations: {} total, {} mapped ({} from GUI, {} from code).\n",
        s.total_ops, s.mapped_ops, s.gui_count, s.code_count
    );
    for op in &r.ops {
        let kind = match op.locator_kind {
            LocatorKind::Id => "id",
            LocatorKind::XPath => "xpath",
        };
        let _ = writeln!(out, "## Step {}: {} by {kind} `{}`\n", op.index, op.action, op.selector);
        if op.intents.is_empty() {
            let _ = writeln!(out, "- unmapped");
        }
        for i in &op.intents {
            let source = serde_json::to_value(i.source).unwrap();
            let _ = writeln!(out, "- {} ({:.2}): {}", source.as_str().unwrap_or(""), i.confidence, i.text);
        }
        let ev = &op.evidence;
        if let Some(rm) = &ev.response_method {
            let _ = writeln!(
                out,
                "- handler: `{}` in {} lines {}-{} (template {})",
                rm.method_name,
                rm.file.display(),
                rm.span.0,
                rm.span.1,
                rm.template.number()
            );
        }
        if let Some(m) = &ev.widget_match {
            let _ = writeln!(out, "- widget: `{}`", m.xpath);
        }
        if ev.gui_fallback {
            let _ = writeln!(out, "- no handler found; explained from the layout");
        }
        if let Some(e) = &ev.error {
            let _ = writeln!(out, "- error: {e}");
        }
        out.push('\n');
    }
    out
}

/// Script-text-only summary used as a comparison point: the test method's
/// name followed by the calls it makes, with no operation mapping.
pub fn baseline_summary(script_source: &str) -> String {
    let f = code::source::SourceFile::new("Script.java", script_source.to_string());
    let decls = code::source::method_decls(0, &f);
    let decl = decls
        .iter()
        .find(|d| d.name.starts_with("test"))
        .or_else(|| decls.first());
    let (name, body) = match decl {
        Some(d) => (d.name.as_str(), &script_source[d.body.clone()]),
        None => ("", script_source),
    };
    let rm = ResponseMethod {
        file: PathBuf::from("Script.java"),
        method_name: name.to_string(),
        template: code::Template::Switch,
        span: (0, 0),
        byte_range: 0..body.len(),
        snippet: body.to_string(),
        inlined: Vec::new(),
    };
    code::code_intent(&rm, &[], None).ok().flatten().map(|i| i.text).unwrap_or_default()
}
