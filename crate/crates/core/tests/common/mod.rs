// SPDX-License-Identifier: Apache-2.0
//! Fixture loading and checks shared by the integration test targets.
#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use script_intent::code::{self, build_ast, extract_paths, Ast, SourceIndex, OPAQUE};
use script_intent::gui::Gallery;
use script_intent::layout::{self, LayoutTree};
use script_intent::metrics::{self, Metric};
use script_intent::pipeline::{self, Backends, Config, IntentReport, ReportFormat, ReportStats, TraceBundle};
use script_intent::script::{self, CommentClass};

pub type Check = Result<String, String>;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn read(rel: &str) -> String {
    let p = fixtures().join(rel);
    fs::read_to_string(&p).unwrap_or_else(|e| panic!("reading {}: {e}", p.display()))
}

/// (name, script file, reference) rows of the bundled corpus.
pub fn corpus_rows() -> Vec<(String, String, String)> {
    read("corpus/references.tsv")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            (cols[0].to_string(), cols[1].to_string(), cols[2].to_string())
        })
        .collect()
}

pub fn source_index() -> SourceIndex {
    SourceIndex::load(&fixtures().join("app"))
}

pub fn gallery() -> Gallery {
    Gallery::load(&fixtures().join("gallery")).expect("gallery loads")
}

/// Run the pipeline on one corpus entry, naming the script by its path
/// relative to the fixture root so reports do not depend on the checkout.
pub fn run_corpus(name: &str, file: &str, index: &SourceIndex, gallery: &Gallery) -> IntentReport {
    let rel = format!("corpus/{name}/{file}");
    let seq = script::parse_script(&read(&rel), &rel).expect("script parses");
    let bundle = TraceBundle::load(&fixtures().join(format!("corpus/{name}/bundle"))).expect("bundle loads");
    pipeline::run_pipeline(&seq, &bundle, index, gallery, Backends::default(), Config::default()).expect("pipeline runs")
}

pub fn golden_report_json() -> String {
    let report = run_corpus("note_flow", "NoteFlowTest.java", &source_index(), &gallery());
    pipeline::render_report(&report, ReportFormat::Json)
}

fn timed(limit: Duration, what: &str, f: impl FnOnce() -> Check) -> Check {
    let start = Instant::now();
    let out = f()?;
    let took = start.elapsed();
    if took > limit {
        return Err(format!("{what} took {took:?}, limit {limit:?}"));
    }
    Ok(format!("{out} in {took:.2?}"))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6
}

pub fn metric_oracle_check() -> Check {
    timed(Duration::from_secs(1), "metric oracles", || {
        let pairs = metrics::parse_eval_files(&read("metrics/candidates.txt"), &read("metrics/references.txt"))
            .map_err(|e| e.to_string())?;
        let report = metrics::evaluate_corpus(&pairs).map_err(|e| e.to_string())?;
        let expected: Value = serde_json::from_str(&read("metrics/expected.json")).map_err(|e| e.to_string())?;
        let mut compared = 0;
        for m in Metric::ALL {
            let key = serde_json::to_value(m).unwrap().as_str().unwrap().to_string();
            let want = expected["corpus"][&key].as_f64().ok_or(format!("oracle lacks {key}"))?;
            if !close(report.get(m), want) {
                return Err(format!("corpus {key}: {} vs oracle {want}", report.get(m)));
            }
            compared += 1;
            for (i, item) in report.per_item.iter().enumerate() {
                let got = serde_json::to_value(item).unwrap()[&key].as_f64().unwrap();
                let want = expected["items"][i][&key].as_f64().ok_or(format!("oracle lacks item {i} {key}"))?;
                if !close(got, want) {
                    return Err(format!("item {i} {key}: {got} vs oracle {want}"));
                }
                compared += 1;
            }
        }
        let identity: Vec<(String, Vec<String>)> = read("metrics/references.txt")
            .lines()
            .map(|l| {
                let first = l.split(metrics::REFERENCE_SEPARATOR).next().unwrap().to_string();
                (first.clone(), vec![first])
            })
            .collect();
        let id = metrics::evaluate_corpus(&identity).map_err(|e| e.to_string())?;
        for m in [Metric::Bleu1, Metric::Bleu2, Metric::Bleu3, Metric::Bleu4, Metric::RougeL, Metric::Cider] {
            if id.get(m) != 1.0 {
                return Err(format!("identity corpus {m:?} = {}", id.get(m)));
            }
        }
        Ok(format!("{compared} values within 1e-6, identity corpus exact"))
    })
}

/// Fanout in `0..=max`, geometrically less likely with each extra child so
/// deep trees stay a few dozen nodes on average.
fn skewed_fanout(rng: &mut ChaCha8Rng, max: usize) -> usize {
    let mut k = 0;
    while k < max && rng.gen_bool(0.6) {
        k += 1;
    }
    k
}

/// Random hierarchy with Android-like tags, resource ids on some nodes and
/// content descriptions that are unique on some of them.
pub fn random_layout(rng: &mut ChaCha8Rng, max_depth: usize, max_fanout: usize) -> LayoutTree {
    const TAGS: [&str; 6] = [
        "android.widget.FrameLayout",
        "android.widget.LinearLayout",
        "android.widget.Button",
        "android.widget.TextView",
        "android.widget.ImageButton",
        "android.view.View",
    ];
    let mut parts: Vec<script_intent::layout::NodeParts> = Vec::new();
    let mut queue = VecDeque::from([(0usize, 1usize)]);
    parts.push(("hierarchy".into(), vec![("rotation".into(), "0".into())], Vec::new()));
    while let Some((id, depth)) = queue.pop_front() {
        if depth > max_depth {
            continue;
        }
        let fanout = if id == 0 { rng.gen_range(1..=max_fanout) } else { skewed_fanout(rng, max_fanout) };
        for _ in 0..fanout {
            let child = parts.len();
            let tag = TAGS[rng.gen_range(0..TAGS.len())].to_string();
            let mut attrs = vec![("class".to_string(), tag.clone())];
            match rng.gen_range(0..4) {
                0 => attrs.push(("content-desc".into(), format!("desc {}", rng.gen_range(0..6)))),
                1 => attrs.push(("resource-id".into(), format!("com.example:id/w{child}"))),
                _ => {}
            }
            parts.push((tag, attrs, Vec::new()));
            parts[id].2.push(child);
            queue.push_back((child, depth + 1));
        }
    }
    // Parts were appended breadth-first; renumber into preorder like a parsed dump.
    let mut order = Vec::new();
    let mut stack = vec![0usize];
    while let Some(n) = stack.pop() {
        order.push(n);
        stack.extend(parts[n].2.iter().rev());
    }
    let mut new_id = vec![0; parts.len()];
    for (i, &old) in order.iter().enumerate() {
        new_id[old] = i;
    }
    let renumbered = order
        .iter()
        .map(|&old| {
            let (tag, attrs, kids) = &parts[old];
            (tag.clone(), attrs.clone(), kids.iter().map(|&k| new_id[k]).collect())
        })
        .collect();
    LayoutTree::from_parts(renumbered)
}

pub fn xpath_roundtrip(tree: &LayoutTree) -> Result<usize, String> {
    let mut checked = 0;
    for id in tree.ids() {
        let xp = layout::node_xpath(tree, id).map_err(|e| format!("node_xpath({id:?}): {e}"))?;
        let sel = layout::parse_xpath(&xp).map_err(|e| format!("parse_xpath({xp}): {e}"))?;
        let back = layout::resolve_node(tree, &sel).map_err(|e| format!("resolve({xp}): {e}"))?;
        if back != id {
            return Err(format!("{xp} resolved to {back:?}, expected {id:?}"));
        }
        checked += 1;
    }
    Ok(checked)
}

pub fn xpath_check() -> Check {
    timed(Duration::from_secs(10), "xpath round-trip", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
        let (mut nodes, mut widest, mut deepest) = (0, 0, 0);
        for _ in 0..1000 {
            let tree = random_layout(&mut rng, 6, 5);
            nodes += xpath_roundtrip(&tree)?;
            for id in tree.ids() {
                widest = widest.max(tree.node(id).children.len());
                let mut d = 0;
                let mut cur = id;
                while let Some(p) = tree.node(cur).parent {
                    d += 1;
                    cur = p;
                }
                deepest = deepest.max(d);
            }
        }
        if widest != 5 || deepest != 6 {
            return Err(format!("generator reached fanout {widest} and depth {deepest}, wanted 5 and 6"));
        }
        Ok(format!("1000 trees, {nodes} nodes (fanout up to {widest}, depth up to {deepest}), all identity"))
    })
}

pub struct ExpectedHandler {
    pub widget_id: String,
    pub winner: Option<(u8, String)>,
    pub others: Vec<(u8, String)>,
}

pub fn expected_handlers() -> Vec<ExpectedHandler> {
    let parse = |s: &str| {
        let (t, m) = s.split_once(':').expect("template:method");
        (t.parse::<u8>().expect("template number"), m.to_string())
    };
    read("expected_handlers.tsv")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            let winner = (cols[1] != "-").then(|| (cols[1].parse().expect("template"), cols[2].to_string()));
            let others = cols.get(3).map_or(Vec::new(), |c| c.split(',').filter(|s| !s.is_empty()).map(parse).collect());
            ExpectedHandler { widget_id: cols[0].to_string(), winner, others }
        })
        .collect()
}

pub fn template_check() -> Check {
    let index = source_index();
    let expected = expected_handlers();
    let mut hits = 0;
    for e in &expected {
        let found = code::localize(&index, &e.widget_id);
        let got = found.first().map(|m| (m.template.number(), m.method_name.clone()));
        if got != e.winner {
            return Err(format!("{}: localized {got:?}, expected {:?}", e.widget_id, e.winner));
        }
        for o in &e.others {
            if !found.iter().any(|m| (m.template.number(), &m.method_name) == (o.0, &o.1)) {
                return Err(format!("{}: also-matched {o:?} missing", e.widget_id));
            }
        }
        hits += 1;
    }
    Ok(format!("{hits}/{} widgets, conflicts resolved 3 over 5 and 2 over 4", expected.len()))
}

pub fn snippets() -> Vec<String> {
    read("snippets.txt").split("\n====\n").map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

/// Count terminal pairs whose connecting path has at most `max_len` nodes,
/// by breadth-first search over the undirected tree.
pub fn brute_force_path_count(ast: &Ast, max_len: usize) -> usize {
    let n = ast.nodes.len();
    let mut adj = vec![Vec::new(); n];
    for (i, node) in ast.nodes.iter().enumerate() {
        if let Some(p) = node.parent {
            adj[i].push(p);
            adj[p].push(i);
        }
    }
    let terms: Vec<usize> = (0..n).filter(|&i| ast.nodes[i].value.is_some() && ast.nodes[i].label != OPAQUE).collect();
    let mut count = 0;
    for (k, &a) in terms.iter().enumerate() {
        let mut dist = vec![usize::MAX; n];
        dist[a] = 0;
        let mut q = VecDeque::from([a]);
        while let Some(x) = q.pop_front() {
            for &y in &adj[x] {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    q.push_back(y);
                }
            }
        }
        count += terms[k + 1..].iter().filter(|&&b| dist[b] < max_len).count();
    }
    count
}

pub fn ast_path_check() -> Check {
    timed(Duration::from_secs(5), "AST paths", || {
        let snippets = snippets();
        if snippets.len() < 50 {
            return Err(format!("only {} snippets", snippets.len()));
        }
        let mut total = 0;
        for (i, s) in snippets.iter().enumerate() {
            let ast = build_ast(s).map_err(|e| format!("snippet {i}: {e}"))?;
            let paths = extract_paths(&ast, 9);
            let oracle = brute_force_path_count(&ast, 9);
            if paths.len() != oracle {
                return Err(format!("snippet {i}: {} paths, oracle {oracle}", paths.len()));
            }
            if let Some(p) = paths.iter().find(|p| p.node_labels.len() > 9) {
                return Err(format!("snippet {i}: path with {} labels", p.node_labels.len()));
            }
            total += paths.len();
        }
        Ok(format!("{} snippets, {total} paths match the oracle", snippets.len()))
    })
}

pub fn golden_check() -> Check {
    let want = read("golden/note_flow.json");
    let first = golden_report_json();
    let second = golden_report_json();
    if first != second {
        return Err("two runs differ".into());
    }
    if first != want {
        let line = first.lines().zip(want.lines()).position(|(a, b)| a != b).map_or(0, |l| l + 1);
        return Err(format!("report differs from golden file near line {line}"));
    }
    Ok(format!("{} bytes identical across runs and to the golden file", want.len()))
}

/// Corpus BLEU@1 of the full pipeline and of the script-text baseline.
pub fn trend_scores() -> (f64, f64) {
    let index = source_index();
    let gallery = gallery();
    let mut full = Vec::new();
    let mut base = Vec::new();
    for (name, file, reference) in corpus_rows() {
        let report = run_corpus(&name, &file, &index, &gallery);
        full.push((report.script_intent, vec![reference.clone()]));
        base.push((pipeline::baseline_summary(&read(&format!("corpus/{name}/{file}"))), vec![reference]));
    }
    let a = metrics::evaluate_corpus(&full).expect("non-empty corpus");
    let b = metrics::evaluate_corpus(&base).expect("non-empty corpus");
    (a.bleu1, b.bleu1)
}

pub fn trend_check() -> Check {
    let (full, base) = trend_scores();
    if full > base {
        Ok(format!("BLEU@1 pipeline {full:.4} > baseline {base:.4}"))
    } else {
        Err(format!("BLEU@1 pipeline {full:.4} <= baseline {base:.4}"))
    }
}

/// Mapped-op recount from the serialized report alone.
pub fn recount_from_json(report_json: &str) -> ReportStats {
    let v: Value = serde_json::from_str(report_json).expect("report is JSON");
    let ops = v["ops"].as_array().expect("ops array");
    let mut s = ReportStats { total_ops: ops.len(), ..ReportStats::default() };
    for op in ops {
        let intents = op["intents"].as_array().expect("intents array");
        if intents.is_empty() {
            continue;
        }
        s.mapped_ops += 1;
        if intents.iter().any(|i| i["source"] == "CODE") {
            s.code_count += 1;
        } else {
            s.gui_count += 1;
        }
    }
    s
}

pub fn boundary_classes() -> BTreeMap<&'static str, CommentClass> {
    ["ratio_0_0", "ratio_0_3", "ratio_0_4"]
        .into_iter()
        .map(|n| (n, script::comment_code_ratio(&read(&format!("comments/{n}.java"))).class))
        .collect()
}

pub fn mapping_stats_check() -> Check {
    let index = source_index();
    let gallery = gallery();
    let rows = corpus_rows();
    for (name, file, _) in &rows {
        let report = run_corpus(name, file, &index, &gallery);
        let json = pipeline::render_report(&report, ReportFormat::Json);
        let recount = recount_from_json(&json);
        if recount != report.stats {
            return Err(format!("{name}: stats {:?}, recount {recount:?}", report.stats));
        }
    }
    let classes = boundary_classes();
    let want = [
        ("ratio_0_0", CommentClass::Uncommented),
        ("ratio_0_3", CommentClass::Commented),
        ("ratio_0_4", CommentClass::WellCommented),
    ];
    for (n, c) in want {
        if classes[n] != c {
            return Err(format!("{n} classified {:?}, expected {c:?}", classes[n]));
        }
    }
    Ok(format!("{} reports recounted, 3 boundary fixtures classified", rows.len()))
}
