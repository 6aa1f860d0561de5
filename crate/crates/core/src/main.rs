// SPDX-License-Identifier: Apache-2.0
//! `script-intent` command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use script_intent::backend::{self, BackendCommand, BackendHandle, BackendKind};
use script_intent::code::SourceIndex;
use script_intent::gui::Gallery;
use script_intent::metrics::{self, Metric};
use script_intent::pipeline::{self, Backends, Config, ReportFormat, TraceBundle};
use script_intent::script::{self, CommentClass, CommentRatio};

const EXIT_INPUT: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "script-intent", version, about = "Infer test intents for Appium GUI test scripts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Md,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate an intent report for one test script.
    Analyze {
        #[arg(long)]
        script: PathBuf,
        /// Trace bundle directory holding manifest.json.
        #[arg(long)]
        bundle: PathBuf,
        /// App source tree.
        #[arg(long)]
        source: PathBuf,
        /// Caption gallery directory holding captions.tsv.
        #[arg(long)]
        gallery: PathBuf,
        /// Model backend command line, e.g. "python3 serve.py --model m.pt".
        #[arg(long)]
        backend: Option<String>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Also write the AST paths of code-explained operations to <output>.paths.
        #[arg(long)]
        dump_paths: bool,
        #[arg(long, default_value_t = script_intent::code::DEFAULT_MAX_PATH_LEN)]
        max_path_len: usize,
        #[arg(long, default_value_t = script_intent::code::DEFAULT_INLINE_DEPTH)]
        inline_depth: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Score candidate intents against references.
    Eval {
        /// One candidate sentence per line.
        #[arg(long)]
        candidates: PathBuf,
        /// One line per candidate; alternatives separated by " ||| ".
        #[arg(long)]
        references: PathBuf,
        /// Comma-separated subset of bleu1..bleu4, bleu, cider, meteor, rouge_l.
        #[arg(long)]
        metrics: Option<String>,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Operation counts and comment density of a directory of test scripts.
    Stats {
        #[arg(long)]
        tests: PathBuf,
        #[arg(long, default_value = script::DEFAULT_SCRIPT_GLOB)]
        glob: String,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze {
            script,
            bundle,
            source,
            gallery,
            backend,
            format,
            dump_paths,
            max_path_len,
            inline_depth,
            output,
        } => analyze(AnalyzeArgs {
            script: &script,
            bundle: &bundle,
            source: &source,
            gallery: &gallery,
            backend: backend.as_deref(),
            format,
            dump_paths,
            config: Config { max_path_len, inline_depth },
            output: &output,
        }),
        Command::Eval { candidates, references, metrics, json } => {
            eval(&candidates, &references, metrics.as_deref(), json)
        }
        Command::Stats { tests, glob, json } => stats(&tests, &glob, json),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

struct AnalyzeArgs<'a> {
    script: &'a Path,
    bundle: &'a Path,
    source: &'a Path,
    gallery: &'a Path,
    backend: Option<&'a str>,
    format: Format,
    dump_paths: bool,
    config: Config,
    output: &'a Path,
}

fn analyze(a: AnalyzeArgs) -> Result<u8> {
    if a.config.max_path_len < 2 {
        bail!("--max-path-len must be at least 2");
    }
    let text = fs::read_to_string(a.script).with_context(|| format!("reading {}", a.script.display()))?;
    let seq = script::parse_script(&text, &a.script.to_string_lossy()).context("parsing script")?;
    let bundle = TraceBundle::load(a.bundle)?;
    if !a.source.is_dir() {
        bail!("source tree {} is not a directory", a.source.display());
    }
    let index = SourceIndex::load(a.source);
    let gallery = Gallery::load(a.gallery)?;
    let handle: Option<BackendHandle> = match a.backend {
        Some(cmd) => {
            let cmd = BackendCommand::parse(cmd).context("empty --backend command")?;
            Some(backend::handshake(&cmd).context("starting backend")?)
        }
        None => None,
    };
    let backends = match &handle {
        Some(h) => Backends {
            caption: h.kinds.contains(&BackendKind::Caption).then_some(h as _),
            code: h.kinds.contains(&BackendKind::Code).then_some(h as _),
        },
        None => Backends::default(),
    };
    let report = pipeline::run_pipeline(&seq, &bundle, &index, &gallery, backends, a.config)?;
    let format = match a.format {
        Format::Json => ReportFormat::Json,
        Format::Md => ReportFormat::Markdown,
    };
    fs::write(a.output, pipeline::render_report(&report, format))
        .with_context(|| format!("writing {}", a.output.display()))?;
    if a.dump_paths {
        let mut name = a.output.as_os_str().to_owned();
        name.push(".paths");
        fs::write(&name, report.dump_paths()).with_context(|| format!("writing {}", Path::new(&name).display()))?;
    }
    if report.has_errors() {
        eprintln!("warning: some operations failed; see evidence.error in the report");
        return Ok(EXIT_PARTIAL);
    }
    Ok(0)
}

fn eval(candidates: &Path, references: &Path, metrics: Option<&str>, json: bool) -> Result<u8> {
    let c = fs::read_to_string(candidates).with_context(|| format!("reading {}", candidates.display()))?;
    let r = fs::read_to_string(references).with_context(|| format!("reading {}", references.display()))?;
    let selected = match metrics {
        Some(list) => Metric::parse_list(list)?,
        None => Metric::ALL.to_vec(),
    };
    let pairs = metrics::parse_eval_files(&c, &r)?;
    let report = metrics::evaluate_corpus(&pairs)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report.to_json(&selected))?);
    } else {
        print!("{}", report.render_table(&selected));
    }
    Ok(0)
}

#[derive(Serialize)]
struct ScriptRow {
    path: String,
    operations: usize,
    comments: CommentRatio,
}

fn stats(root: &Path, glob: &str, json: bool) -> Result<u8> {
    if !root.is_dir() {
        bail!("{} is not a directory", root.display());
    }
    let files = script::find_scripts(root, glob)?;
    let mut rows = Vec::new();
    let mut seqs = Vec::new();
    for f in &files {
        let text = fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
        let rel = f.strip_prefix(root).unwrap_or(f).to_string_lossy().into_owned();
        let seq = script::parse_script(&text, &rel).with_context(|| format!("parsing {}", f.display()))?;
        rows.push(ScriptRow { path: rel, operations: seq.len(), comments: script::comment_code_ratio(&text) });
        seqs.push(seq);
    }
    let corpus = script::script_stats(&seqs)?;
    if json {
        let out = serde_json::json!({ "scripts": rows, "corpus": corpus });
        println!("{}", serde_json::to_string_pretty(&out)?);
        return Ok(0);
    }
    let width = rows.iter().map(|r| r.path.len()).max().unwrap_or(6).max(6);
    println!("{:<width$}  {:>4}  {:>6}  class", "script", "ops", "ratio");
    for r in &rows {
        let class = serde_json::to_value(r.comments.class)?;
        println!(
            "{:<width$}  {:>4}  {:>6.3}  {}",
            r.path,
            r.operations,
            r.comments.ratio,
            class.as_str().unwrap_or("")
        );
    }
    let well = rows.iter().filter(|r| r.comments.class == CommentClass::WellCommented).count();
    println!(
        "{} scripts, {:.2} ± {:.2} operations per script, {} well commented",
        corpus.script_count, corpus.mean_ops, corpus.stddev_ops, well
    );
    Ok(0)
}
