// SPDX-License-Identifier: Apache-2.0
//! C interface to `script-intent`.
//!
//! Every function returns an [`SiStatus`]. Results come back through out
//! pointers; objects are opaque handles released with their `_free`
//! function, and strings handed out by the library are released with
//! [`si_string_free`]. After a non-OK status, [`si_last_error`] describes
//! the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use libc::{c_char, c_double, size_t};

use script_intent::code::SourceIndex;
use script_intent::gui::Gallery;
use script_intent::layout::{self, LayoutTree, NodeId};
use script_intent::metrics::{self, Metric, MetricReport};
use script_intent::pipeline::{self, Backends, Config, ReportFormat, TraceBundle};
use script_intent::script::{self, CommentClass, OperationSequence};

/// Outcome of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    NotFound = 4,
    InvalidArgument = 5,
    IoError = 6,
    Panic = 7,
}

/// Metric selector for [`si_metric_report_get`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiMetric {
    Bleu1 = 0,
    Bleu2 = 1,
    Bleu3 = 2,
    Bleu4 = 3,
    Cider = 4,
    Meteor = 5,
    RougeL = 6,
}

/// Comment density class of a script.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiCommentClass {
    Uncommented = 0,
    Commented = 1,
    WellCommented = 2,
}

/// Parsed operation sequence of one test script.
pub struct SiScript(OperationSequence);

/// Parsed UI hierarchy dump.
pub struct SiLayout(LayoutTree);

/// Corpus scores from [`si_metrics_evaluate`].
pub struct SiMetricReport(MetricReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(SiStatus, String);

impl Fail {
    fn new(status: SiStatus, msg: impl ToString) -> Fail {
        Fail(status, msg.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SiStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SiStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            SiStatus::Panic
        }
    }
}

/// # Safety
/// `p` is NULL or a NUL-terminated string valid for the call.
unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::new(SiStatus::NullArgument, format!("{name} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::new(SiStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

/// # Safety
/// `out` is NULL or valid for writes.
unsafe fn put<T>(out: *mut T, v: T, name: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::new(SiStatus::NullArgument, format!("{name} is NULL")));
    }
    out.write(v);
    Ok(())
}

/// # Safety
/// `h` is NULL or a live handle of type `T`.
unsafe fn handle<'a, T>(h: *const T, name: &str) -> Result<&'a T, Fail> {
    h.as_ref().ok_or_else(|| Fail::new(SiStatus::NullArgument, format!("{name} is NULL")))
}

fn owned_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail::new(SiStatus::InvalidArgument, "result contains a NUL byte"))
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into the library from this thread.
#[no_mangle]
pub extern "C" fn si_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn si_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` is NULL or a pointer obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn si_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a test script into its operation sequence.
///
/// # Safety
/// `source` and `script_path` are NUL-terminated strings; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn si_script_parse(
    source: *const c_char,
    script_path: *const c_char,
    out: *mut *mut SiScript,
) -> SiStatus {
    guard(|| {
        let src = str_arg(source, "source")?;
        let path = str_arg(script_path, "script_path")?;
        if out.is_null() {
            return Err(Fail::new(SiStatus::NullArgument, "out is NULL"));
        }
        let seq = script::parse_script(src, path).map_err(|e| Fail::new(SiStatus::ParseError, e))?;
        put(out, Box::into_raw(Box::new(SiScript(seq))), "out")
    })
}

/// # Safety
/// `s` is NULL or a handle from [`si_script_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn si_script_free(s: *mut SiScript) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of operations in the script.
///
/// # Safety
/// `s` is a live script handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn si_script_len(s: *const SiScript, out: *mut size_t) -> SiStatus {
    guard(|| put(out, handle(s, "script")?.0.len(), "out"))
}

/// The operation sequence as a JSON string, freed with [`si_string_free`].
///
/// # Safety
/// `s` is a live script handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn si_script_to_json(s: *const SiScript, out: *mut *mut c_char) -> SiStatus {
    guard(|| {
        let seq = &handle(s, "script")?.0;
        if out.is_null() {
            return Err(Fail::new(SiStatus::NullArgument, "out is NULL"));
        }
        let json = serde_json::to_string(seq).map_err(|e| Fail::new(SiStatus::InvalidArgument, e))?;
        put(out, owned_string(json)?, "out")
    })
}

/// Comment-to-code line ratio of a script and its class.
///
/// # Safety
/// `source` is a NUL-terminated string; `ratio` and `class_out` are writable.
#[no_mangle]
pub unsafe extern "C" fn si_comment_ratio(
    source: *const c_char,
    ratio: *mut c_double,
    class_out: *mut SiCommentClass,
) -> SiStatus {
    guard(|| {
        let r = script::comment_code_ratio(str_arg(source, "source")?);
        let class = match r.class {
            CommentClass::Uncommented => SiCommentClass::Uncommented,
            CommentClass::Commented => SiCommentClass::Commented,
            CommentClass::WellCommented => SiCommentClass::WellCommented,
        };
        if ratio.is_null() || class_out.is_null() {
            return Err(Fail::new(SiStatus::NullArgument, "output pointer is NULL"));
        }
        put(ratio, r.ratio, "ratio")?;
        put(class_out, class, "class_out")
    })
}

/// Parse a UI hierarchy dump.
///
/// # Safety
/// `xml` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn si_layout_parse(xml: *const c_char, out: *mut *mut SiLayout) -> SiStatus {
    guard(|| {
        let xml = str_arg(xml, "xml")?;
        if out.is_null() {
            return Err(Fail::new(SiStatus::NullArgument, "out is NULL"));
        }
        let tree = layout::parse_layout(xml).map_err(|e| Fail::new(SiStatus::ParseError, e))?;
        put(out, Box::into_raw(Box::new(SiLayout(tree))), "out")
    })
}

/// # Safety
/// `l` is NULL or a handle from [`si_layout_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn si_layout_free(l: *mut SiLayout) {
    if !l.is_null() {
        drop(Box::from_raw(l));
    }
}

/// Number of nodes, root included. Node ids run from 0 (the root) in document order.
///
/// # Safety
/// `l` is a live layout handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn si_layout_len(l: *const SiLayout, out: *mut size_t) -> SiStatus {
    guard(|| put(out, handle(l, "layout")?.0.len(), "out"))
}

/// Resolve a selector to a node id.
///
/// # Safety
/// `l` is a live layout handle; `xpath` is a NUL-terminated string; `node_out` is writable.
#[no_mangle]
pub unsafe extern "C" fn si_layout_resolve(
    l: *const SiLayout,
    xpath: *const c_char,
    node_out: *mut size_t,
) -> SiStatus {
    guard(|| {
        let tree = &handle(l, "layout")?.0;
        let sel = layout::parse_xpath(str_arg(xpath, "xpath")?).map_err(|e| Fail::new(SiStatus::ParseError, e))?;
        let node = layout::resolve_node(tree, &sel).map_err(|e| Fail::new(SiStatus::NotFound, e))?;
        put(node_out, node.0, "node_out")
    })
}

/// Canonical hierarchy selector of `node`, freed with [`si_string_free`].
///
/// # Safety
/// `l` is a live layout handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn si_layout_node_xpath(l: *const SiLayout, node: size_t, out: *mut *mut c_char) -> SiStatus {
    guard(|| {
        let tree = &handle(l, "layout")?.0;
        if out.is_null() {
            return Err(Fail::new(SiStatus::NullArgument, "out is NULL"));
        }
        let xp = layout::node_xpath(tree, NodeId(node)).map_err(|e| Fail::new(SiStatus::NotFound, e))?;
        put(out, owned_string(xp)?, "out")
    })
}

/// Score candidates against references. Both arguments hold one sentence
/// per line; alternative references on a line are separated by ` ||| `.
///
/// # Safety
/// `candidates` and `references` are NUL-terminated strings; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn si_metrics_evaluate(
    candidates: *const c_char,
    references: *const c_char,
    out: *mut *mut SiMetricReport,
) -> SiStatus {
    guard(|| {
        let c = str_arg(candidates, "candidates")?;
        let r = str_arg(references, "references")?;
        if out.is_null() {
            return Err(Fail::new(SiStatus::NullArgument, "out is NULL"));
        }
        let pairs = metrics::parse_eval_files(c, r).map_err(|e| Fail::new(SiStatus::InvalidArgument, e))?;
        let report = metrics::evaluate_corpus(&pairs).map_err(|e| Fail::new(SiStatus::InvalidArgument, e))?;
        put(out, Box::into_raw(Box::new(SiMetricReport(report))), "out")
    })
}

/// # Safety
/// `r` is NULL or a handle from [`si_metrics_evaluate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn si_metric_report_free(r: *mut SiMetricReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// One corpus score in `[0, 1]`.
///
/// # Safety
/// `r` is a live report handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn si_metric_report_get(r: *const SiMetricReport, metric: SiMetric, out: *mut c_double) -> SiStatus {
    guard(|| {
        let report = &handle(r, "report")?.0;
        let m = match metric {
            SiMetric::Bleu1 => Metric::Bleu1,
            SiMetric::Bleu2 => Metric::Bleu2,
            SiMetric::Bleu3 => Metric::Bleu3,
            SiMetric::Bleu4 => Metric::Bleu4,
            SiMetric::Cider => Metric::Cider,
            SiMetric::Meteor => Metric::Meteor,
            SiMetric::RougeL => Metric::RougeL,
        };
        put(out, report.get(m), "out")
    })
}

/// Run the full analysis of one script and return the JSON report, freed
/// with [`si_string_free`]. Captions come from the gallery and code intents
/// from method names; no model backend is started.
///
/// # Safety
/// All path arguments are NUL-terminated strings; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn si_analyze(
    script_path: *const c_char,
    bundle_dir: *const c_char,
    source_dir: *const c_char,
    gallery_dir: *const c_char,
    out: *mut *mut c_char,
) -> SiStatus {
    guard(|| {
        let script_path = str_arg(script_path, "script_path")?;
        let bundle_dir = Path::new(str_arg(bundle_dir, "bundle_dir")?);
        let source_dir = Path::new(str_arg(source_dir, "source_dir")?);
        let gallery_dir = Path::new(str_arg(gallery_dir, "gallery_dir")?);
        if out.is_null() {
            return Err(Fail::new(SiStatus::NullArgument, "out is NULL"));
        }
        let io = |e: &dyn std::fmt::Display| Fail::new(SiStatus::IoError, e);
        let text = std::fs::read_to_string(script_path).map_err(|e| io(&format!("{script_path}: {e}")))?;
        let seq = script::parse_script(&text, script_path).map_err(|e| Fail::new(SiStatus::ParseError, e))?;
        let bundle = TraceBundle::load(bundle_dir).map_err(|e| io(&e))?;
        if !source_dir.is_dir() {
            return Err(io(&format!("{} is not a directory", source_dir.display())));
        }
        let index = SourceIndex::load(source_dir);
        let gallery = Gallery::load(gallery_dir).map_err(|e| io(&e))?;
        let report = pipeline::run_pipeline(&seq, &bundle, &index, &gallery, Backends::default(), Config::default())
            .map_err(|e| Fail::new(SiStatus::InvalidArgument, e))?;
        put(out, owned_string(pipeline::render_report(&report, ReportFormat::Json))?, "out")
    })
}
