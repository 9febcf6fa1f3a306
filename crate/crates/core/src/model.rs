//! In-memory process-model tree.
//!
//! A [`ProcessModel`] is block-structured: gateways own their branches, and
//! branches own nested nodes. Start and end events are implicit; they only
//! materialize when the tree is flattened into a graph.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessModel {
    pub name: String,
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Activity(Activity),
    Gateway(Gateway),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Activity {
    pub id: String,
    /// Who performs the activity.
    pub role: String,
    /// The activity name.
    pub action: String,
    /// Resources the activity needs, if any.
    pub object: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatewayKind {
    Exclusive,
    Parallel,
    Inclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gateway {
    pub id: String,
    pub kind: GatewayKind,
    pub branches: Vec<Branch>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Branch {
    pub condition: Option<String>,
    pub children: Vec<Node>,
}

impl GatewayKind {
    pub const ALL: [GatewayKind; 3] = [Self::Exclusive, Self::Parallel, Self::Inclusive];

    /// Tag name used by the text format and by BPMN 2.0 XML.
    pub fn tag(self) -> &'static str {
        match self {
            Self::Exclusive => "exclusiveGateway",
            Self::Parallel => "parallelGateway",
            Self::Inclusive => "inclusiveGateway",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }

    /// Whether branches of this gateway must carry a condition.
    pub fn requires_condition(self) -> bool {
        !matches!(self, Self::Parallel)
    }
}

impl fmt::Display for GatewayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exclusive => "exclusive",
            Self::Parallel => "parallel",
            Self::Inclusive => "inclusive",
        })
    }
}

impl Node {
    pub fn id(&self) -> &str {
        match self {
            Node::Activity(a) => &a.id,
            Node::Gateway(g) => &g.id,
        }
    }

    pub fn as_activity(&self) -> Option<&Activity> {
        match self {
            Node::Activity(a) => Some(a),
            Node::Gateway(_) => None,
        }
    }
}

impl Activity {
    pub fn new(id: impl Into<String>, role: impl Into<String>, action: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            role: role.into(),
            action: action.into(),
            object: None,
        }
    }

    pub fn with_object(mut self, object: impl Into<String>) -> Self {
        self.object = Some(object.into());
        self
    }
}

impl Branch {
    pub fn new(condition: Option<&str>, children: Vec<Node>) -> Self {
        Self {
            condition: condition.map(str::to_owned),
            children,
        }
    }
}

impl From<Activity> for Node {
    fn from(a: Activity) -> Self {
        Node::Activity(a)
    }
}

impl From<Gateway> for Node {
    fn from(g: Gateway) -> Self {
        Node::Gateway(g)
    }
}

impl ProcessModel {
    pub fn new(name: impl Into<String>, nodes: Vec<Node>) -> Self {
        Self {
            name: name.into(),
            nodes,
        }
    }

    /// Every activity and gateway id in document order.
    pub fn collect_ids(&self) -> Vec<&str> {
        let mut ids = Vec::new();
        self.walk(|_, node| ids.push(node.id()));
        ids
    }

    /// All activities in document order.
    pub fn activities(&self) -> Vec<&Activity> {
        let mut out = Vec::new();
        self.walk(|_, node| {
            if let Node::Activity(a) = node {
                out.push(a);
            }
        });
        out
    }

    /// Visits every node depth-first in document order together with its tree path.
    pub fn walk<'a>(&'a self, mut visit: impl FnMut(&str, &'a Node)) {
        fn go<'a>(nodes: &'a [Node], prefix: &str, visit: &mut impl FnMut(&str, &'a Node)) {
            for (i, node) in nodes.iter().enumerate() {
                let path = format!("{prefix}/{i}");
                visit(&path, node);
                if let Node::Gateway(g) = node {
                    for (b, branch) in g.branches.iter().enumerate() {
                        go(
                            &branch.children,
                            &format!("{path}/branches/{b}/children"),
                            visit,
                        );
                    }
                }
            }
        }
        go(&self.nodes, "/nodes", &mut visit);
    }

    /// Looks up a node by id.
    pub fn find(&self, id: &str) -> Option<&Node> {
        let mut found = None;
        self.walk(|_, node| {
            if found.is_none() && node.id() == id {
                found = Some(node);
            }
        });
        found
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.find(id).is_some()
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.walk(|_, _| n += 1);
        n
    }

    /// Checks every structural invariant of the tree. An empty result means
    /// the model is valid.
    pub fn structural_check(&self) -> Vec<StructuralDefect> {
        let mut defects = Vec::new();
        if self.nodes.is_empty() {
            defects.push(StructuralDefect::new(
                DefectKind::EmptyProcess,
                "/nodes",
                "process contains no nodes",
            ));
        }
        let mut seen = HashSet::new();
        self.walk(|path, node| {
            let id = node.id();
            if id.trim().is_empty() {
                defects.push(StructuralDefect::new(
                    DefectKind::EmptyId,
                    path,
                    "node id is empty",
                ));
            } else if !seen.insert(id.to_owned()) {
                defects.push(StructuralDefect::new(
                    DefectKind::DuplicateId,
                    path,
                    format!("id \"{id}\" is used more than once"),
                ));
            }
            match node {
                Node::Activity(a) => {
                    if a.action.trim().is_empty() {
                        defects.push(StructuralDefect::new(
                            DefectKind::EmptyAction,
                            path,
                            format!("activity \"{}\" has an empty action", a.id),
                        ));
                    }
                }
                Node::Gateway(g) => {
                    if g.branches.len() < 2 {
                        defects.push(StructuralDefect::new(
                            DefectKind::BranchCount,
                            path,
                            format!(
                                "{} gateway \"{}\" has {} branch(es), at least 2 required",
                                g.kind,
                                g.id,
                                g.branches.len()
                            ),
                        ));
                    }
                    if g.kind.requires_condition() {
                        for (b, branch) in g.branches.iter().enumerate() {
                            let missing = branch
                                .condition
                                .as_deref()
                                .is_none_or(|c| c.trim().is_empty());
                            if missing {
                                defects.push(StructuralDefect::new(
                                    DefectKind::MissingCondition,
                                    format!("{path}/branches/{b}"),
                                    format!(
                                        "branch {b} of {} gateway \"{}\" has no condition",
                                        g.kind, g.id
                                    ),
                                ));
                            }
                        }
                    }
                }
            }
        });
        defects
    }

    pub fn is_valid(&self) -> bool {
        self.structural_check().is_empty()
    }
}

/// Canonical form of an activity label: case-folded, whitespace collapsed,
/// trailing punctuation removed. Idempotent.
pub fn normalize_label(label: &str) -> String {
    let mut s: String = label
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");
    loop {
        let trimmed = s.trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace());
        if trimmed.len() == s.len() {
            return s;
        }
        s.truncate(trimmed.len());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DefectKind {
    EmptyProcess,
    EmptyId,
    DuplicateId,
    EmptyAction,
    BranchCount,
    MissingCondition,
}

impl DefectKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::EmptyProcess => "empty-process",
            Self::EmptyId => "empty-id",
            Self::DuplicateId => "duplicate-id",
            Self::EmptyAction => "empty-action",
            Self::BranchCount => "branch-count",
            Self::MissingCondition => "missing-condition",
        }
    }
}

/// A violated tree invariant together with where it was found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralDefect {
    pub kind: DefectKind,
    pub path: String,
    pub message: String,
}

impl StructuralDefect {
    fn new(kind: DefectKind, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            kind,
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for StructuralDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.kind.as_str(), self.path, self.message)
    }
}
