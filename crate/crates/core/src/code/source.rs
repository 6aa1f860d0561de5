// SPDX-License-Identifier: Apache-2.0
//! App source tree index: Java and layout files, and method declarations.

use std::collections::BTreeMap;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use regex::Regex;
use walkdir::WalkDir;

use crate::lex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Java,
    Layout,
}

#[derive(Debug, Clone)]
pub struct SourceFile {
    /// Path relative to the source root.
    pub rel: PathBuf,
    pub kind: FileKind,
    pub text: String,
    /// Text with comments and literal bodies blanked.
    pub masked: String,
}

impl SourceFile {
    pub fn new(rel: impl Into<PathBuf>, text: String) -> SourceFile {
        let rel = rel.into();
        let kind = match rel.extension().and_then(|e| e.to_str()) {
            Some("xml") => FileKind::Layout,
            _ => FileKind::Java,
        };
        let masked = match kind {
            FileKind::Java => lex::mask(&text, true),
            FileKind::Layout => mask_xml_comments(&text),
        };
        SourceFile { rel, kind, text, masked }
    }
}

fn mask_xml_comments(text: &str) -> String {
    let mut out = text.to_string();
    let mut from = 0;
    while let Some(s) = text[from..].find("<!--") {
        let start = from + s;
        let end = text[start..].find("-->").map_or(text.len(), |e| start + e + 3);
        // byte-for-byte so offsets survive multi-byte chars
        let blank: String = text[start..end].bytes().map(|b| if b == b'\n' { '\n' } else { ' ' }).collect();
        out.replace_range(start..end, &blank);
        from = end;
    }
    out
}

/// A method declaration located in a Java file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub file: usize,
    pub name: String,
    /// From the first annotation or modifier to the closing brace, inclusive.
    pub decl: Range<usize>,
    /// Between the body braces, exclusive.
    pub body: Range<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct SourceIndex {
    pub root: PathBuf,
    pub files: Vec<SourceFile>,
    pub methods: BTreeMap<String, Vec<MethodDecl>>,
}

const NOT_METHODS: &[&str] = &[
    "if", "for", "while", "switch", "catch", "synchronized", "return", "new", "else", "do", "try",
    "super", "this", "throw", "assert", "case",
];

impl SourceIndex {
    /// Index every `.java` and `.xml` file below `root`, sorted by path.
    /// Unreadable files are skipped with a warning.
    pub fn load(root: &Path) -> SourceIndex {
        let mut files = Vec::new();
        for entry in WalkDir::new(root).sort_by_file_name() {
            let entry = match entry {
                Ok(e) => e,
                Err(e) => {
                    log::warn!("skipping unreadable entry: {e}");
                    continue;
                }
            };
            if !entry.file_type().is_file() {
                continue;
            }
            let path = entry.path();
            if !matches!(path.extension().and_then(|e| e.to_str()), Some("java" | "xml")) {
                continue;
            }
            match fs::read_to_string(path) {
                Ok(text) => {
                    let rel = path.strip_prefix(root).unwrap_or(path).to_path_buf();
                    files.push(SourceFile::new(rel, text));
                }
                Err(e) => log::warn!("skipping {}: {e}", path.display()),
            }
        }
        SourceIndex::from_files(root.to_path_buf(), files)
    }

    pub fn from_files(root: PathBuf, mut files: Vec<SourceFile>) -> SourceIndex {
        files.sort_by(|a, b| a.rel.cmp(&b.rel));
        let mut methods: BTreeMap<String, Vec<MethodDecl>> = BTreeMap::new();
        for (i, f) in files.iter().enumerate() {
            if f.kind == FileKind::Java {
                for m in method_decls(i, f) {
                    methods.entry(m.name.clone()).or_default().push(m);
                }
            }
        }
        SourceIndex { root, files, methods }
    }

    pub fn file(&self, i: usize) -> &SourceFile {
        &self.files[i]
    }

    pub fn file_index(&self, rel: &Path) -> Option<usize> {
        self.files.iter().position(|f| f.rel == rel)
    }

    /// Declarations of `name`, preferring those in file `near` when given.
    pub fn lookup_method(&self, name: &str, near: Option<usize>) -> Option<&MethodDecl> {
        let decls = self.methods.get(name)?;
        near.and_then(|f| decls.iter().find(|d| d.file == f)).or_else(|| decls.first())
    }

    /// Files mentioning the widget id, by path.
    pub fn candidate_files(&self, widget_id: &str) -> Vec<usize> {
        let re = id_reference_regex(widget_id);
        (0..self.files.len()).filter(|&i| re.is_match(&self.files[i].text)).collect()
    }
}

/// Matches `R.id.<id>`, `@+id/<id>`, `@id/<id>` or `"<id>"`.
pub fn id_reference_regex(widget_id: &str) -> Regex {
    let id = regex::escape(widget_id);
    Regex::new(&format!(r#"R\.id\.{id}\b|@\+?id/{id}\b|"{id}""#)).expect("valid id regex")
}

/// Source and layout files under `source_root` that mention `widget_id`, sorted.
pub fn find_candidate_files(source_root: &Path, widget_id: &str) -> Vec<PathBuf> {
    let index = SourceIndex::load(source_root);
    index.candidate_files(widget_id).into_iter().map(|i| source_root.join(&index.files[i].rel)).collect()
}

fn word_before(masked: &str, pos: usize) -> (&str, Option<char>) {
    let before = masked[..pos].trim_end();
    let last = before.chars().last();
    let start = before
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_alphanumeric() || *c == '_' || *c == '$')
        .last()
        .map_or(before.len(), |(i, _)| i);
    (&before[start..], last)
}

/// Scan a Java file for method declarations (`type name(params) [throws ..] {`).
pub fn method_decls(file: usize, f: &SourceFile) -> Vec<MethodDecl> {
    let masked = &f.masked;
    let re = Regex::new(r"([A-Za-z_$][\w$]*)\s*\(").unwrap();
    let mut out = Vec::new();
    for cap in re.captures_iter(masked) {
        let name_m = cap.get(1).unwrap();
        let name = name_m.as_str();
        if NOT_METHODS.contains(&name) {
            continue;
        }
        if name_m.start() > 0 {
            let prev = masked[..name_m.start()].chars().last().unwrap();
            if prev.is_alphanumeric() || prev == '_' || prev == '$' || prev == '.' {
                continue;
            }
        }
        let (prev_word, prev_char) = word_before(masked, name_m.start());
        match prev_char {
            Some(c) if c.is_alphanumeric() || c == '_' || c == '>' || c == ']' || c == '$' => {}
            _ => continue,
        }
        if NOT_METHODS.contains(&prev_word) || prev_word == "else" {
            continue;
        }
        let open = cap.get(0).unwrap().end() - 1;
        let Some(close) = lex::matching_close(masked, open) else { continue };
        let mut rest = masked[close + 1..].trim_start();
        if let Some(r) = rest.strip_prefix("throws") {
            rest = r.trim_start_matches(|c: char| c.is_alphanumeric() || c.is_whitespace() || ",._$<>".contains(c));
        }
        if !rest.starts_with('{') {
            continue;
        }
        let brace = masked.len() - rest.len();
        let Some(end) = lex::matching_close(masked, brace) else { continue };
        out.push(MethodDecl {
            file,
            name: name.to_string(),
            decl: decl_start(&f.text, name_m.start())..end + 1,
            body: brace + 1..end,
        });
    }
    out
}

/// Start of the declaration containing the method name at `pos`: the first
/// non-blank byte of its line, extended upward over annotation lines.
pub fn decl_start(text: &str, pos: usize) -> usize {
    let line_start = |p: usize| text[..p].rfind('\n').map_or(0, |i| i + 1);
    let first_non_blank = |s: usize| s + (text[s..].len() - text[s..].trim_start_matches([' ', '\t']).len());
    let mut start = line_start(pos);
    while start > 0 {
        let prev = line_start(start - 1);
        if text[prev..start].trim_start().starts_with('@') {
            start = prev;
        } else {
            break;
        }
    }
    first_non_blank(start)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_method_declarations() {
        let src = r#"
class A extends Activity {
    @Override
    protected void onCreate(Bundle b) {
        super.onCreate(b);
        if (x) { y(); }
        new Thread(() -> { run(); }).start();
    }

    private List<String> names() throws IOException, X {
        return list;
    }
    void empty() {}
}
"#;
        let f = SourceFile::new("A.java", src.to_string());
        let decls = method_decls(0, &f);
        let names: Vec<_> = decls.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["onCreate", "names", "empty"]);
        assert!(src[decls[0].decl.clone()].starts_with("@Override\n    protected void onCreate"));
        assert_eq!(src[decls[1].body.clone()].trim(), "return list;");
        assert_eq!(&src[decls[2].decl.clone()], "void empty() {}");
    }

    #[test]
    fn id_reference_forms() {
        let re = id_reference_regex("btn_search");
        for hit in ["R.id.btn_search)", "@+id/btn_search\"", "@id/btn_search", "\"btn_search\""] {
            assert!(re.is_match(hit), "{hit}");
        }
        for miss in ["R.id.btn_search2", "btn_search", "R.id.other"] {
            assert!(!re.is_match(miss), "{miss}");
        }
    }

    #[test]
    fn xml_comments_masked() {
        let f = SourceFile::new("a.xml", "<a><!-- @+id/x --><b/></a>".into());
        assert_eq!(f.masked.len(), f.text.len());
        assert!(!f.masked.contains("@+id/x"));
    }
}
