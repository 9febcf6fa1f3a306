use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Node, ProcessModel, StructuralDefect};

#[derive(Debug, Error)]
#[error("model has {} structural defect(s); first: {}", .0.len(), .0[0])]
pub struct SerializeError(pub Vec<StructuralDefect>);

/// Canonical BPMN text for a structurally valid model.
pub fn serialize(model: &ProcessModel) -> Result<String, SerializeError> {
    let defects = model.structural_check();
    if !defects.is_empty() {
        return Err(SerializeError(defects));
    }
    Ok(write_text(model))
}

/// Writes the canonical form without checking invariants. Used when a
/// defective model still has to be shown to an agent.
pub fn write_text(model: &ProcessModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "<process name=\"{}\">", escape(&model.name));
    write_nodes(&mut out, &model.nodes, 1);
    out.push_str("</process>\n");
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_nodes(out: &mut String, nodes: &[Node], depth: usize) {
    for node in nodes {
        indent(out, depth);
        match node {
            Node::Activity(a) => {
                let _ = write!(
                    out,
                    "<activity role=\"{}\" action=\"{}\"",
                    escape(&a.role),
                    escape(&a.action)
                );
                if let Some(object) = &a.object {
                    let _ = write!(out, " object=\"{}\"", escape(object));
                }
                let _ = writeln!(out, " id=\"{}\"/>", escape(&a.id));
            }
            Node::Gateway(g) => {
                let tag = g.kind.tag();
                let _ = writeln!(out, "<{tag} id=\"{}\">", escape(&g.id));
                for branch in &g.branches {
                    indent(out, depth + 1);
                    out.push_str("<branch");
                    if let Some(c) = &branch.condition {
                        let _ = write!(out, " condition=\"{}\"", escape(c));
                    }
                    if branch.children.is_empty() {
                        out.push_str("/>\n");
                    } else {
                        out.push_str(">\n");
                        write_nodes(out, &branch.children, depth + 2);
                        indent(out, depth + 1);
                        out.push_str("</branch>\n");
                    }
                }
                indent(out, depth);
                let _ = writeln!(out, "</{tag}>");
            }
        }
    }
}

pub(crate) fn escape(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}
