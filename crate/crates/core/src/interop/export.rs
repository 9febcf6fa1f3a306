use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use super::{ExportError, BPMN_NS, MAO_NS, XSI_NS};
use crate::diff::{flatten_detailed, FlatKind};
use crate::model::{GatewayKind, Node, ProcessModel};

/// Escapes text for XML attributes and content. Whitespace control
/// characters become references so attribute normalization keeps them.
pub(crate) fn escape(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}

/// Makes `raw` a valid XML NCName.
pub(crate) fn ncname(raw: &str) -> String {
    let mut out: String = raw
        .chars()
        .map(|c| {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect();
    if !out.starts_with(|c: char| c.is_alphabetic() || c == '_') {
        out.insert(0, '_');
    }
    out
}

fn gateway_element(kind: GatewayKind) -> &'static str {
    match kind {
        GatewayKind::Exclusive => "exclusiveGateway",
        GatewayKind::Parallel => "parallelGateway",
        GatewayKind::Inclusive => "inclusiveGateway",
    }
}

/// Writes the model as a BPMN 2.0 XML document without diagram
/// information. Element ids are the model ids made XML-safe.
pub fn export_xml(model: &ProcessModel) -> Result<String, ExportError> {
    let defects = model.structural_check();
    if !defects.is_empty() {
        return Err(ExportError::Defective(defects));
    }
    let flat = flatten_detailed(model);

    let mut activities = BTreeMap::new();
    model.walk(|_, node| {
        if let Node::Activity(a) = node {
            activities.insert(a.id.clone(), a.clone());
        }
    });

    let mut ids: BTreeMap<&str, String> = BTreeMap::new();
    let mut taken: HashSet<String> = ["definitions", "process"].map(String::from).into();
    for n in &flat.graph.nodes {
        let mut id = ncname(&n.id);
        while !taken.insert(id.clone()) {
            id.push('_');
        }
        ids.insert(n.id.as_str(), id);
    }

    let mut x = String::new();
    x.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        x,
        "<definitions xmlns=\"{BPMN_NS}\" xmlns:xsi=\"{XSI_NS}\" xmlns:mao=\"{MAO_NS}\" id=\"definitions\" targetNamespace=\"{MAO_NS}\">"
    );
    let _ = writeln!(x, "  <process id=\"process\" name=\"{}\" isExecutable=\"false\">", escape(&model.name));
    for n in &flat.graph.nodes {
        let id = &ids[n.id.as_str()];
        match &n.kind {
            FlatKind::Start => {
                let _ = writeln!(x, "    <startEvent id=\"{id}\"/>");
            }
            FlatKind::End => {
                let _ = writeln!(x, "    <endEvent id=\"{id}\"/>");
            }
            FlatKind::Activity(_) => {
                let a = &activities[&n.id];
                let _ = write!(
                    x,
                    "    <task id=\"{id}\" name=\"{}\" mao:role=\"{}\"",
                    escape(&a.action),
                    escape(&a.role)
                );
                if let Some(o) = &a.object {
                    let _ = write!(x, " mao:object=\"{}\"", escape(o));
                }
                x.push_str("/>\n");
            }
            FlatKind::Split(k) | FlatKind::Join(k) => {
                let dir = if matches!(n.kind, FlatKind::Split(_)) { "Diverging" } else { "Converging" };
                let _ = writeln!(x, "    <{} id=\"{id}\" gatewayDirection=\"{dir}\"/>", gateway_element(*k));
            }
        }
    }
    for (i, f) in flat.flows.iter().enumerate() {
        let (from, to) = (&ids[f.from.as_str()], &ids[f.to.as_str()]);
        let mut fid = format!("flow_{}", i + 1);
        while !taken.insert(fid.clone()) {
            fid.push('_');
        }
        match &f.condition {
            None => {
                let _ = writeln!(x, "    <sequenceFlow id=\"{fid}\" sourceRef=\"{from}\" targetRef=\"{to}\"/>");
            }
            Some(c) => {
                let _ = writeln!(
                    x,
                    "    <sequenceFlow id=\"{fid}\" sourceRef=\"{from}\" targetRef=\"{to}\">\n      <conditionExpression xsi:type=\"tFormalExpression\">{}</conditionExpression>\n    </sequenceFlow>",
                    escape(c)
                );
            }
        }
    }
    x.push_str("  </process>\n</definitions>\n");
    Ok(x)
}
