// SPDX-License-Identifier: Apache-2.0
//! Intent text for a localized response method.

use std::collections::HashMap;

use regex::Regex;

use super::paths::{subtokenize, AstPath};
use super::templates::ResponseMethod;
use crate::backend::{BackendError, CodeBackend};
use crate::gui::{Intent, IntentSource};
use crate::lex;

pub const BACKEND_CONFIDENCE: f64 = 0.7;
pub const FALLBACK_CONFIDENCE: f64 = 0.6;
const MAX_CALLEES: usize = 3;

const NOT_CALLEES: &[&str] = &["if", "for", "while", "switch", "catch", "synchronized", "return", "super", "this"];

/// Ask the backend when one is given; otherwise describe the method by its
/// name and the calls it makes.
pub fn code_intent(
    rm: &ResponseMethod,
    paths: &[AstPath],
    backend: Option<&dyn CodeBackend>,
) -> Result<Option<Intent>, BackendError> {
    if let Some(b) = backend {
        let text = b.code_intent(paths)?;
        return Ok(Some(Intent::new(IntentSource::Code, text, BACKEND_CONFIDENCE)));
    }
    Ok(fallback_text(rm).map(|t| Intent::new(IntentSource::Code, t, FALLBACK_CONFIDENCE)))
}

/// Called method names in `snippet`, most frequent first, ties by first use.
/// Constructor calls are skipped.
pub fn callees(snippet: &str) -> Vec<String> {
    let masked = lex::mask(snippet, true);
    let re = Regex::new(r"(\bnew\s+)?([A-Za-z_$][\w$]*)\s*\(").unwrap();
    let mut counts: HashMap<&str, (usize, usize)> = HashMap::new();
    for cap in re.captures_iter(&masked) {
        if cap.get(1).is_some() {
            continue;
        }
        let m = cap.get(2).unwrap();
        if NOT_CALLEES.contains(&m.as_str()) {
            continue;
        }
        let name = &snippet[m.range()];
        let order = counts.len();
        counts.entry(name).or_insert((0, order)).0 += 1;
    }
    let mut v: Vec<(&str, (usize, usize))> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then(a.1 .1.cmp(&b.1 .1)));
    v.into_iter().map(|(n, _)| n.to_string()).collect()
}

fn phrase(name: &str) -> String {
    subtokenize(name).join(" ")
}

fn fallback_text(rm: &ResponseMethod) -> Option<String> {
    let name = phrase(&rm.method_name);
    let calls: Vec<String> = callees(&rm.snippet)
        .into_iter()
        .filter(|c| *c != rm.method_name)
        .map(|c| phrase(&c))
        .filter(|p| !p.is_empty())
        .take(MAX_CALLEES)
        .collect();
    match (name.is_empty(), calls.is_empty()) {
        (true, true) => None,
        (false, true) => Some(name),
        (true, false) => Some(calls.join(", ")),
        (false, false) => Some(format!("{name} via {}", calls.join(", "))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::templates::Template;

    fn rm(name: &str, snippet: &str) -> ResponseMethod {
        ResponseMethod {
            file: "A.java".into(),
            method_name: name.into(),
            template: Template::Switch,
            span: (1, 1),
            byte_range: 0..snippet.len(),
            snippet: snippet.into(),
            inlined: Vec::new(),
        }
    }

    struct Fixed(&'static str);
    impl CodeBackend for Fixed {
        fn code_intent(&self, _: &[AstPath]) -> Result<String, BackendError> {
            Ok(self.0.to_string())
        }
    }

    #[test]
    fn fallback_phrases() {
        let i = code_intent(&rm("saveNote", "db.insert(note); break;"), &[], None).unwrap().unwrap();
        assert_eq!(i.text, "save note via insert");
        assert_eq!(i.confidence, FALLBACK_CONFIDENCE);
        assert_eq!(code_intent(&rm("a", "x = 1;"), &[], None).unwrap().unwrap().text, "a");
        assert!(code_intent(&rm("", "x = 1;"), &[], None).unwrap().is_none());
    }

    #[test]
    fn callee_ranking() {
        let s = r#"b(); a(); a(); new Foo(); c("d()"); e(); a.f(); if (x) g();"#;
        assert_eq!(callees(s), ["a", "b", "c", "e", "f", "g"]);
        let i = code_intent(&rm("go", s), &[], None).unwrap().unwrap();
        assert_eq!(i.text, "go via a, b, c");
    }

    #[test]
    fn backend_pass_through() {
        let i = code_intent(&rm("saveNote", ""), &[], Some(&Fixed("persist the note"))).unwrap().unwrap();
        assert_eq!(i.text, "persist the note");
        assert_eq!(i.confidence, BACKEND_CONFIDENCE);
        assert_eq!(i.source, IntentSource::Code);
    }
}
