//! Parse BPMN text, inspect the tree, and write it back in canonical form.
//!
//! Run with `cargo run --example parse_and_serialize`.

use mao::dsl::{parse, parse_document, serialize, ParseOptions};
use mao::model::Node;

const TEXT: &str = r#"<process name='parcel delivery'>
<activity id="a1" action="prepare to send a package" role="customer"/>
<exclusiveGateway id="g1">
  <branch condition="home pickup"><activity role="system" action="assign a courier for pickup" id="a2"/></branch>
  <branch condition="self-service"><activity role="customer" action="go to the mailing point to send" id="a3"/></branch>
</exclusiveGateway>
<activity role="courier" action="deliver the package" id="a4" object="package"/>
</process>"#;

fn main() {
    let model = parse(TEXT).expect("valid text");
    println!("process `{}` with {} top-level nodes", model.name, model.nodes.len());
    for node in &model.nodes {
        match node {
            Node::Activity(a) => println!("  activity {}: {} does `{}`", a.id, a.role, a.action),
            Node::Gateway(g) => println!("  {} gateway {} with {} branches", g.kind, g.id, g.branches.len()),
        }
    }

    let canonical = serialize(&model).unwrap();
    println!("\n{canonical}");
    assert_eq!(parse(&canonical).unwrap(), model);

    // every element has a span keyed by its tree path
    let outcome = parse_document(TEXT, ParseOptions::strict());
    for (path, span) in &outcome.spans {
        println!("{path:<24} line {}", span.start.line);
    }

    let broken = "<process name=\"p\">\n  <activity role=\"r\" action=\"x\" id=\"a1\">\n</process>";
    for e in parse(broken).unwrap_err() {
        println!("error at {}:{}: {}", e.span.start.line, e.span.start.column, e.message);
    }
}
