use std::collections::{BTreeMap, HashMap, HashSet};

use roxmltree::{Document, Node as XmlNode};
use serde::{Deserialize, Serialize};

use super::{ImportError, MAO_NS};
use crate::diff::{FlatGraph, FlatKind, Flow};
use crate::model::{normalize_label, GatewayKind};

/// Something in the input that was dropped or adjusted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportWarning {
    pub element: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub message: String,
}

/// Attributes of an imported activity that the graph does not keep.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDetail {
    pub name: String,
    pub role: Option<String>,
    pub object: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportedGraph {
    pub name: String,
    pub graph: FlatGraph,
    /// Sequence flows between kept nodes, in document order, with conditions.
    pub flows: Vec<Flow>,
    pub details: BTreeMap<String, NodeDetail>,
    pub warnings: Vec<ImportWarning>,
}

const TASKS: &[&str] = &[
    "task",
    "userTask",
    "serviceTask",
    "sendTask",
    "receiveTask",
    "manualTask",
    "scriptTask",
    "businessRuleTask",
];
const COLLAPSED: &[&str] = &["subProcess", "callActivity", "transaction", "adHocSubProcess"];
const PASS_THROUGH: &[&str] = &[
    "intermediateCatchEvent",
    "intermediateThrowEvent",
    "boundaryEvent",
    "eventBasedGateway",
    "complexGateway",
];
const SILENT: &[&str] = &["documentation", "extensionElements"];

#[derive(Debug, Clone)]
enum Pending {
    Start,
    End,
    Activity,
    Gateway(GatewayKind, Option<bool>),
}

struct RawFlow {
    from: String,
    to: String,
    condition: Option<String>,
}

fn local<'i>(n: &XmlNode<'_, 'i>) -> &'i str {
    n.tag_name().name()
}

struct Importer {
    warnings: Vec<ImportWarning>,
    nodes: Vec<(String, Pending)>,
    details: BTreeMap<String, NodeDetail>,
    skipped: HashSet<String>,
    flows: Vec<RawFlow>,
    lanes: HashMap<String, String>,
}

impl Importer {
    fn warn(&mut self, n: &XmlNode<'_, '_>, message: impl Into<String>) {
        self.warnings.push(ImportWarning {
            element: n.tag_name().name().to_owned(),
            id: n.attribute("id").map(str::to_owned),
            message: message.into(),
        });
    }

    fn process(&mut self, p: XmlNode<'_, '_>) {
        for child in p.children().filter(XmlNode::is_element) {
            let Some(id) = child.attribute("id").map(str::to_owned) else {
                let tag = local(&child);
                if !SILENT.contains(&tag) && tag != "laneSet" {
                    self.warn(&child, "element without id skipped");
                } else if tag == "laneSet" {
                    self.lane_set(child);
                }
                continue;
            };
            match local(&child) {
                "startEvent" => self.nodes.push((id, Pending::Start)),
                "endEvent" => self.nodes.push((id, Pending::End)),
                t if TASKS.contains(&t) || COLLAPSED.contains(&t) => {
                    if COLLAPSED.contains(&t) {
                        self.warn(&child, "treated as a single activity; its contents are ignored");
                    }
                    self.details.insert(
                        id.clone(),
                        NodeDetail {
                            name: child.attribute("name").unwrap_or_default().to_owned(),
                            role: child.attribute((MAO_NS, "role")).map(str::to_owned),
                            object: child.attribute((MAO_NS, "object")).map(str::to_owned),
                        },
                    );
                    self.nodes.push((id, Pending::Activity));
                }
                t @ ("exclusiveGateway" | "parallelGateway" | "inclusiveGateway") => {
                    let kind = match t {
                        "exclusiveGateway" => GatewayKind::Exclusive,
                        "parallelGateway" => GatewayKind::Parallel,
                        _ => GatewayKind::Inclusive,
                    };
                    let split = match child.attribute("gatewayDirection") {
                        Some("Diverging") => Some(true),
                        Some("Converging") => Some(false),
                        _ => None,
                    };
                    self.nodes.push((id, Pending::Gateway(kind, split)));
                }
                "sequenceFlow" => {
                    let (Some(from), Some(to)) = (child.attribute("sourceRef"), child.attribute("targetRef")) else {
                        self.warn(&child, "sequence flow without sourceRef or targetRef skipped");
                        continue;
                    };
                    let condition = child
                        .children()
                        .find(|c| c.is_element() && local(c) == "conditionExpression")
                        .and_then(|c| c.text())
                        .map(|t| t.trim().to_owned())
                        .filter(|t| !t.is_empty())
                        .or_else(|| child.attribute("name").map(str::to_owned));
                    self.flows.push(RawFlow {
                        from: from.to_owned(),
                        to: to.to_owned(),
                        condition,
                    });
                }
                t if PASS_THROUGH.contains(&t) => {
                    self.warn(&child, "unsupported element skipped; its flows are joined across it");
                    self.skipped.insert(id);
                }
                "laneSet" => self.lane_set(child),
                t if SILENT.contains(&t) => {}
                _ => self.warn(&child, "unsupported element skipped"),
            }
        }
    }

    fn lane_set(&mut self, set: XmlNode<'_, '_>) {
        for lane in set.descendants().filter(|n| n.is_element() && local(n) == "lane") {
            self.warn(&lane, "lane skipped; its name is kept as the role of its activities");
            let name = lane.attribute("name").unwrap_or_default().to_owned();
            for r in lane.children().filter(|c| c.is_element() && local(c) == "flowNodeRef") {
                if let Some(t) = r.text() {
                    self.lanes.entry(t.trim().to_owned()).or_insert_with(|| name.clone());
                }
            }
        }
    }
}

/// Reads the supported subset of BPMN 2.0 XML into a flat graph. Diagram
/// information is ignored; other unsupported content is skipped with a
/// warning per element.
pub fn import_xml(xml: &str) -> Result<ImportedGraph, ImportError> {
    let doc = Document::parse(xml).map_err(|e| ImportError::Xml(e.to_string()))?;
    let processes: Vec<XmlNode<'_, '_>> = doc
        .descendants()
        .filter(|n| n.is_element() && local(n) == "process")
        .collect();
    if processes.is_empty() {
        return Err(ImportError::NoProcess);
    }
    let mut imp = Importer {
        warnings: Vec::new(),
        nodes: Vec::new(),
        details: BTreeMap::new(),
        skipped: HashSet::new(),
        flows: Vec::new(),
        lanes: HashMap::new(),
    };
    for mf in doc.descendants().filter(|n| n.is_element() && local(n) == "messageFlow") {
        imp.warn(&mf, "message flow skipped");
    }
    let name = processes[0]
        .attribute("name")
        .or_else(|| processes[0].attribute("id"))
        .unwrap_or("process")
        .to_owned();
    if processes.len() > 1 {
        imp.warnings.push(ImportWarning {
            element: "process".into(),
            id: None,
            message: format!("{} processes merged into one graph", processes.len()),
        });
    }
    for p in &processes {
        imp.process(*p);
    }
    for (id, d) in imp.details.iter_mut() {
        if d.role.is_none() {
            d.role = imp.lanes.get(id).cloned();
        }
    }

    let kept: HashSet<&str> = imp.nodes.iter().map(|(id, _)| id.as_str()).collect();
    let mut out_of: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, f) in imp.flows.iter().enumerate() {
        out_of.entry(f.from.as_str()).or_default().push(i);
    }
    let mut flows: Vec<Flow> = Vec::new();
    let mut warnings = std::mem::take(&mut imp.warnings);
    for f in &imp.flows {
        if !kept.contains(f.from.as_str()) {
            if !imp.skipped.contains(&f.from) {
                warnings.push(ImportWarning {
                    element: "sequenceFlow".into(),
                    id: None,
                    message: format!("flow from unknown element `{}` skipped", f.from),
                });
            }
            continue;
        }
        if kept.contains(f.to.as_str()) {
            flows.push(Flow {
                from: f.from.clone(),
                to: f.to.clone(),
                condition: f.condition.clone(),
            });
        } else if imp.skipped.contains(&f.to) {
            // Follow flows through skipped elements to the next kept ones.
            let mut stack = vec![f.to.as_str()];
            let mut seen = HashSet::new();
            while let Some(s) = stack.pop() {
                if !seen.insert(s) {
                    continue;
                }
                for &j in out_of.get(s).map(Vec::as_slice).unwrap_or_default() {
                    let g = &imp.flows[j];
                    if kept.contains(g.to.as_str()) {
                        flows.push(Flow {
                            from: f.from.clone(),
                            to: g.to.clone(),
                            condition: f.condition.clone().or_else(|| g.condition.clone()),
                        });
                    } else if imp.skipped.contains(&g.to) {
                        stack.push(g.to.as_str());
                    }
                }
            }
        } else {
            warnings.push(ImportWarning {
                element: "sequenceFlow".into(),
                id: None,
                message: format!("flow to unknown element `{}` skipped", f.to),
            });
        }
    }

    let mut nodes = imp.nodes;
    normalize_terminal(&mut nodes, &mut flows, &mut warnings, true)?;
    normalize_terminal(&mut nodes, &mut flows, &mut warnings, false)?;

    let mut graph = FlatGraph::default();
    for (id, pending) in &nodes {
        let kind = match pending {
            Pending::Start => FlatKind::Start,
            Pending::End => FlatKind::End,
            Pending::Activity => FlatKind::Activity(normalize_label(
                imp.details.get(id).map(|d| d.name.as_str()).unwrap_or_default(),
            )),
            Pending::Gateway(k, dir) => {
                let split = dir.unwrap_or_else(|| flows.iter().filter(|f| &f.from == id).count() > 1);
                if split {
                    FlatKind::Split(*k)
                } else {
                    FlatKind::Join(*k)
                }
            }
        };
        graph.add_node(id.clone(), kind);
    }
    for f in &flows {
        graph.add_edge(f.from.clone(), f.to.clone());
    }
    Ok(ImportedGraph {
        name,
        graph,
        flows,
        details: imp.details,
        warnings,
    })
}

/// Ensures exactly one start (or end) node, merging several into a fresh
/// one or adding one for the open ends of the graph.
fn normalize_terminal(
    nodes: &mut Vec<(String, Pending)>,
    flows: &mut Vec<Flow>,
    warnings: &mut Vec<ImportWarning>,
    start: bool,
) -> Result<(), ImportError> {
    let is_kind = |p: &Pending| if start { matches!(p, Pending::Start) } else { matches!(p, Pending::End) };
    let found: Vec<String> = nodes.iter().filter(|(_, p)| is_kind(p)).map(|(id, _)| id.clone()).collect();
    if found.len() == 1 {
        return Ok(());
    }
    let taken: HashSet<String> = nodes.iter().map(|(id, _)| id.clone()).collect();
    let mut fresh = if start { "start".to_owned() } else { "end".to_owned() };
    while taken.contains(&fresh) {
        fresh.push('_');
    }
    let what = if start { "start" } else { "end" };
    let pending = if start { Pending::Start } else { Pending::End };
    if found.len() > 1 {
        warnings.push(ImportWarning {
            element: if start { "startEvent" } else { "endEvent" }.into(),
            id: None,
            message: format!("{} {what} events merged into `{fresh}`", found.len()),
        });
        let first = nodes.iter().position(|(id, _)| found.contains(id)).unwrap();
        nodes.retain(|(id, _)| !found.contains(id));
        nodes.insert(first.min(nodes.len()), (fresh.clone(), pending));
        for f in flows.iter_mut() {
            if start && found.contains(&f.from) {
                f.from = fresh.clone();
            }
            if !start && found.contains(&f.to) {
                f.to = fresh.clone();
            }
        }
        return Ok(());
    }
    let open: Vec<String> = nodes
        .iter()
        .filter(|(id, p)| {
            let other_terminal = if start { matches!(p, Pending::End) } else { matches!(p, Pending::Start) };
            let linked = if start {
                flows.iter().any(|f| &f.to == id)
            } else {
                flows.iter().any(|f| &f.from == id)
            };
            !other_terminal && !linked
        })
        .map(|(id, _)| id.clone())
        .collect();
    if open.is_empty() {
        return Err(if start { ImportError::NoStart } else { ImportError::NoEnd });
    }
    warnings.push(ImportWarning {
        element: "process".into(),
        id: None,
        message: format!("no {what} event; added `{fresh}` linked to {} element(s)", open.len()),
    });
    for id in open {
        flows.push(if start {
            Flow { from: fresh.clone(), to: id, condition: None }
        } else {
            Flow { from: id, to: fresh.clone(), condition: None }
        });
    }
    if start {
        nodes.insert(0, (fresh, pending));
    } else {
        nodes.push((fresh, pending));
    }
    Ok(())
}
