// SPDX-License-Identifier: Apache-2.0
mod common;

use proptest::prelude::*;

use script_intent::script::{self, Action, CommentClass, LocatorKind, ScriptError};

#[test]
fn boundary_fixtures_use_the_strict_threshold() {
    let classes = common::boundary_classes();
    assert_eq!(classes["ratio_0_0"], CommentClass::Uncommented);
    assert_eq!(classes["ratio_0_3"], CommentClass::Commented);
    assert_eq!(classes["ratio_0_4"], CommentClass::WellCommented);
    let r = script::comment_code_ratio(&common::read("comments/ratio_0_3.java"));
    assert_eq!((r.comment_lines, r.code_lines), (3, 10));
    assert_eq!(r.ratio, 0.3);
}

#[test]
fn corpus_scripts_parse_in_order() {
    let want = [
        ("note_flow", 5usize),
        ("save_note", 3),
        ("search_notes", 3),
        ("share_note", 2),
        ("delete_note", 2),
        ("sync_settings", 2),
        ("send_feedback", 2),
    ];
    for (name, file, _) in common::corpus_rows() {
        let rel = format!("corpus/{name}/{file}");
        let seq = script::parse_script(&common::read(&rel), &rel).unwrap();
        let expected = want.iter().find(|w| w.0 == name).unwrap().1;
        assert_eq!(seq.len(), expected, "{name}");
        let idx: Vec<usize> = seq.operations.iter().map(|o| o.index).collect();
        assert_eq!(idx, (1..=expected).collect::<Vec<_>>(), "{name}");
    }
}

#[test]
fn note_flow_operations() {
    let rel = "corpus/note_flow/NoteFlowTest.java";
    let seq = script::parse_script(&common::read(rel), rel).unwrap();
    let kinds: Vec<LocatorKind> = seq.operations.iter().map(|o| o.locator_kind).collect();
    use LocatorKind::{Id, XPath};
    assert_eq!(kinds, [Id, XPath, Id, XPath, Id]);
    assert_eq!(seq.operations[1].action, Action::SendKeys);
    assert_eq!(seq.operations[1].payload.as_deref(), Some("Groceries"));
    assert_eq!(seq.operations[0].simple_id(), "btn_search");
}

#[test]
fn element_variables_and_commented_out_lookups() {
    let src = r#"
class T {
    void testFlow() {
        // driver.findElementById("ghost").click();
        MobileElement title = driver.findElementById("com.x:id/title");
        title.sendKeys("Hello \"world\"");
        title.clear();
        /* driver.findElementById("also_ghost").click(); */
        driver.findElementByXPath("//android.widget.Button[@content-desc=\"Go\"]").click();
    }
}
"#;
    let seq = script::parse_script(src, "T.java").unwrap();
    let ops: Vec<(&str, String)> = seq.operations.iter().map(|o| (o.selector.as_str(), o.action.to_string())).collect();
    assert_eq!(
        ops,
        [
            ("com.x:id/title", "SEND_KEYS".to_string()),
            ("//android.widget.Button[@content-desc=\"Go\"]", "CLICK".to_string()),
        ]
    );
    // one operation per lookup, paired with the first action on the element
    assert_eq!(seq.operations[0].payload.as_deref(), Some("Hello \"world\""));
}

#[test]
fn malformed_scripts() {
    assert!(matches!(
        script::parse_script("class T {\n void t() {\n driver.findElementById(\"x).click();\n}\n}", "T.java"),
        Err(ScriptError::UnbalancedQuote { line: 3 })
    ));
    assert!(matches!(
        script::parse_script("class T {\n/* open\n", "T.java"),
        Err(ScriptError::UnterminatedComment { line: 2 })
    ));
    assert_eq!(script::script_stats(&[]).unwrap_err(), ScriptError::EmptyCorpus);
}

#[test]
fn corpus_statistics_against_hand_formula() {
    let seqs: Vec<_> = common::corpus_rows()
        .iter()
        .map(|(n, f, _)| {
            let rel = format!("corpus/{n}/{f}");
            script::parse_script(&common::read(&rel), &rel).unwrap()
        })
        .collect();
    let s = script::script_stats(&seqs).unwrap();
    // counts 5,3,3,2,2,2,2: mean 19/7, sample variance (sum of squares 59 - 7 * mean^2) / 6
    let mean = 19.0 / 7.0;
    let var = (59.0 - 7.0 * mean * mean) / 6.0;
    assert!((s.mean_ops - mean).abs() < 1e-12);
    assert!((s.stddev_ops - f64::sqrt(var)).abs() < 1e-12);
}

fn script_with(code_ops: usize, comments: usize, blanks: usize) -> String {
    let mut s = String::from("class GenTest {\n    void testGen() {\n");
    for i in 0..comments {
        s.push_str(&format!("        // note {i}\n"));
    }
    for i in 0..blanks {
        s.push_str(if i % 2 == 0 { "\n" } else { "   \n" });
    }
    for i in 0..code_ops {
        s.push_str(&format!("        driver.findElementById(\"id/b{i}\").click(); // trailing\n"));
    }
    s.push_str("    }\n}\n");
    s
}

proptest! {
    #[test]
    fn ratio_and_class_follow_line_counts(ops in 0usize..30, comments in 0usize..20, blanks in 0usize..5) {
        let src = script_with(ops, comments, blanks);
        let r = script::comment_code_ratio(&src);
        let code = ops + 4;
        prop_assert_eq!(r.code_lines, code);
        prop_assert_eq!(r.comment_lines, comments);
        prop_assert_eq!(r.blank_lines, blanks);
        let ratio = comments as f64 / code as f64;
        prop_assert_eq!(r.ratio, ratio);
        let class = if comments * 10 > code * 3 {
            CommentClass::WellCommented
        } else if comments > 0 {
            CommentClass::Commented
        } else {
            CommentClass::Uncommented
        };
        prop_assert_eq!(r.class, class);
        prop_assert_eq!(script::parse_script(&src, "GenTest.java").unwrap().len(), ops);
    }
}
