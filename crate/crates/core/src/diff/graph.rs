use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{normalize_label, GatewayKind, Node, ProcessModel};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum FlatKind {
    Start,
    End,
    /// Activity with its normalized label.
    Activity(String),
    Split(GatewayKind),
    Join(GatewayKind),
}

impl FlatKind {
    /// Nodes may only be matched within the same class.
    pub fn class(&self) -> KindClass {
        match self {
            FlatKind::Start => KindClass::Start,
            FlatKind::End => KindClass::End,
            FlatKind::Activity(_) => KindClass::Activity,
            FlatKind::Split(k) => KindClass::Split(*k),
            FlatKind::Join(k) => KindClass::Join(*k),
        }
    }
}

impl fmt::Display for FlatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlatKind::Start => f.write_str("start"),
            FlatKind::End => f.write_str("end"),
            FlatKind::Activity(l) => write!(f, "activity({l})"),
            FlatKind::Split(k) => write!(f, "{k}-split"),
            FlatKind::Join(k) => write!(f, "{k}-join"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KindClass {
    Start,
    End,
    Activity,
    Split(GatewayKind),
    Join(GatewayKind),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatNode {
    pub id: String,
    pub kind: FlatKind,
}

/// Directed typed graph of a process: events, activities and gateway
/// splits/joins.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatGraph {
    pub nodes: Vec<FlatNode>,
    pub edges: BTreeSet<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph has {0} start nodes, expected exactly one")]
    StartCount(usize),
    #[error("graph has {0} end nodes, expected exactly one")]
    EndCount(usize),
    #[error("edge ({0}, {1}) references a missing node")]
    DanglingEdge(String, String),
    #[error("duplicate node id {0}")]
    DuplicateId(String),
    #[error("start node has incoming edges")]
    StartHasInput,
    #[error("end node has outgoing edges")]
    EndHasOutput,
}

impl FlatGraph {
    pub fn add_node(&mut self, id: impl Into<String>, kind: FlatKind) {
        self.nodes.push(FlatNode { id: id.into(), kind });
    }

    pub fn add_edge(&mut self, from: impl Into<String>, to: impl Into<String>) {
        self.edges.insert((from.into(), to.into()));
    }

    pub fn node(&self, id: &str) -> Option<&FlatNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn successors<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges
            .iter()
            .filter(move |(f, _)| f == id)
            .map(|(_, t)| t.as_str())
    }

    pub fn predecessors<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges
            .iter()
            .filter(move |(_, t)| t == id)
            .map(|(f, _)| f.as_str())
    }

    /// Checks the graph invariants: unique ids, one start and one end,
    /// no dangling edges, start without inputs and end without outputs.
    pub fn check(&self) -> Result<(), GraphError> {
        let mut ids = HashSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id.as_str()) {
                return Err(GraphError::DuplicateId(n.id.clone()));
            }
        }
        let starts: Vec<&FlatNode> = self.nodes.iter().filter(|n| n.kind == FlatKind::Start).collect();
        let ends: Vec<&FlatNode> = self.nodes.iter().filter(|n| n.kind == FlatKind::End).collect();
        if starts.len() != 1 {
            return Err(GraphError::StartCount(starts.len()));
        }
        if ends.len() != 1 {
            return Err(GraphError::EndCount(ends.len()));
        }
        for (f, t) in &self.edges {
            if !ids.contains(f.as_str()) || !ids.contains(t.as_str()) {
                return Err(GraphError::DanglingEdge(f.clone(), t.clone()));
            }
        }
        if self.predecessors(&starts[0].id).next().is_some() {
            return Err(GraphError::StartHasInput);
        }
        if self.successors(&ends[0].id).next().is_some() {
            return Err(GraphError::EndHasOutput);
        }
        Ok(())
    }
}

/// A sequence flow produced while flattening, in emission order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow {
    pub from: String,
    pub to: String,
    pub condition: Option<String>,
}

/// The flattened graph plus the ordered flows (which keep duplicates and
/// branch conditions that the edge set drops).
#[derive(Debug, Clone)]
pub struct Flattened {
    pub graph: FlatGraph,
    pub flows: Vec<Flow>,
    /// Flat split/join ids for each gateway id.
    pub gateway_nodes: Vec<(String, String, String)>,
}

struct Flattener {
    taken: HashSet<String>,
    out: Flattened,
}

impl Flattener {
    fn fresh(&mut self, base: &str) -> String {
        let mut id = base.to_owned();
        while self.taken.contains(&id) {
            id.push('_');
        }
        self.taken.insert(id.clone());
        id
    }

    fn flow(&mut self, from: &str, to: &str, condition: Option<String>) {
        self.out.graph.add_edge(from, to);
        self.out.flows.push(Flow {
            from: from.into(),
            to: to.into(),
            condition,
        });
    }

    /// Emits `nodes` after `prev`; the first flow carries `condition`.
    /// Returns the id of the last emitted node.
    fn sequence(&mut self, nodes: &[Node], prev: String, mut condition: Option<String>) -> String {
        let mut prev = prev;
        for node in nodes {
            match node {
                Node::Activity(a) => {
                    self.out
                        .graph
                        .add_node(a.id.clone(), FlatKind::Activity(normalize_label(&a.action)));
                    self.flow(&prev, &a.id, condition.take());
                    prev = a.id.clone();
                }
                Node::Gateway(g) => {
                    let split = self.fresh(&format!("{}_split", g.id));
                    let join = self.fresh(&format!("{}_join", g.id));
                    self.out
                        .gateway_nodes
                        .push((g.id.clone(), split.clone(), join.clone()));
                    self.out.graph.add_node(split.clone(), FlatKind::Split(g.kind));
                    self.flow(&prev, &split, condition.take());
                    for branch in &g.branches {
                        let exit = self.sequence(&branch.children, split.clone(), branch.condition.clone());
                        let cond = if branch.children.is_empty() {
                            branch.condition.clone()
                        } else {
                            None
                        };
                        self.flow(&exit, &join, cond);
                    }
                    self.out.graph.add_node(join.clone(), FlatKind::Join(g.kind));
                    prev = join;
                }
            }
        }
        prev
    }
}

/// Flattens a model and keeps the ordered flow list used by XML export.
pub fn flatten_detailed(model: &ProcessModel) -> Flattened {
    let mut f = Flattener {
        taken: model.collect_ids().into_iter().map(str::to_owned).collect(),
        out: Flattened {
            graph: FlatGraph::default(),
            flows: Vec::new(),
            gateway_nodes: Vec::new(),
        },
    };
    let start = f.fresh("start");
    let end = f.fresh("end");
    f.out.graph.add_node(start.clone(), FlatKind::Start);
    let exit = f.sequence(&model.nodes, start, None);
    f.out.graph.add_node(end.clone(), FlatKind::End);
    f.flow(&exit, &end, None);
    f.out
}

/// Converts a block-structured model into its flat graph.
pub fn flatten(model: &ProcessModel) -> FlatGraph {
    flatten_detailed(model).graph
}
