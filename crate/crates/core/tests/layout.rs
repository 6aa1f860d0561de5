// SPDX-License-Identifier: Apache-2.0
mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use script_intent::layout::{self, LayoutError, LayoutTree, NodeId, XPathSelector};

fn escape(v: &str) -> String {
    v.replace('&', "&amp;").replace('"', "&quot;").replace('<', "&lt;")
}

/// uiautomator-style dump of `tree`.
fn to_xml(tree: &LayoutTree) -> String {
    fn write(tree: &LayoutTree, id: NodeId, out: &mut String) {
        let n = tree.node(id);
        let name = if id == tree.root() { "hierarchy" } else { "node" };
        out.push('<');
        out.push_str(name);
        for (k, v) in &n.attrs {
            out.push_str(&format!(" {k}=\"{}\"", escape(v)));
        }
        out.push('>');
        for &c in &n.children {
            write(tree, c, out);
        }
        out.push_str(&format!("</{name}>"));
    }
    let mut out = String::from("<?xml version='1.0' encoding='UTF-8' standalone='yes' ?>");
    write(tree, tree.root(), &mut out);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn serialized_trees_parse_back_unchanged(seed in any::<u64>()) {
        let tree = common::random_layout(&mut ChaCha8Rng::seed_from_u64(seed), 6, 5);
        let parsed = layout::parse_layout(&to_xml(&tree)).unwrap();
        prop_assert_eq!(parsed, tree);
    }

    #[test]
    fn every_node_round_trips_through_its_xpath(seed in any::<u64>()) {
        let tree = common::random_layout(&mut ChaCha8Rng::seed_from_u64(seed), 6, 5);
        prop_assert!(common::xpath_roundtrip(&tree).is_ok());
    }

    #[test]
    fn selector_display_parses_back(steps in proptest::collection::vec(("[A-Z][a-zA-Z]{0,8}", proptest::option::of(1usize..9)), 0..7)) {
        let sel = XPathSelector::Hierarchy {
            steps: steps.into_iter().map(|(view_type, index)| layout::Step { view_type, index }).collect(),
        };
        prop_assert_eq!(layout::parse_xpath(&sel.to_string()).unwrap(), sel);
    }
}

#[test]
fn fixture_screens_resolve_recorded_selectors() {
    let xml = common::read("corpus/note_flow/bundle/op_002/layout.xml");
    let tree = layout::parse_layout(&xml).unwrap();
    let sel = layout::parse_xpath("//android.widget.EditText[@content-desc=\"Note title\"]").unwrap();
    let m = layout::resolve_xpath(&tree, &sel).unwrap();
    assert_eq!(m.content_desc.as_deref(), Some("Note title"));
    assert!(m.bounds.is_some());
    let again = layout::resolve_xpath(&tree, &layout::parse_xpath(&m.xpath).unwrap()).unwrap();
    assert_eq!(again.node, m.node);
}

#[test]
fn malformed_documents_report_position() {
    match layout::parse_layout("<hierarchy>\n  <node class=\"a\">\n</hierarchy>") {
        Err(LayoutError::XmlSyntax { line, .. }) => assert_eq!(line, 3),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn selector_errors() {
    for bad in [
        "",
        "hierarchy/Button",
        "/hierarchy/Button[0]",
        "/hierarchy/Button[x]",
        "/hierarchy/*",
        "//Button",
        "//Button[@text=\"x\"]",
        "//Button[@content-desc=x]",
        "/hierarchyButton",
    ] {
        assert!(
            matches!(layout::parse_xpath(bad), Err(LayoutError::XPathSyntax { .. })),
            "{bad:?} should not parse"
        );
    }
}

#[test]
fn ambiguous_and_missing_selectors() {
    let xml = r#"<hierarchy><node class="android.widget.LinearLayout">
        <node class="android.widget.Button" content-desc="ok"/>
        <node class="android.widget.Button" content-desc="ok"/>
    </node></hierarchy>"#;
    let tree = layout::parse_layout(xml).unwrap();
    let dup = layout::parse_xpath("//android.widget.Button[@content-desc=\"ok\"]").unwrap();
    assert!(matches!(layout::resolve_xpath(&tree, &dup), Err(LayoutError::Ambiguous(_))));
    let unindexed = layout::parse_xpath("/hierarchy/LinearLayout/Button").unwrap();
    assert!(matches!(layout::resolve_xpath(&tree, &unindexed), Err(LayoutError::Ambiguous(_))));
    let missing = layout::parse_xpath("/hierarchy/LinearLayout/Button[3]").unwrap();
    assert!(matches!(layout::resolve_xpath(&tree, &missing), Err(LayoutError::NoMatch(_))));
}
