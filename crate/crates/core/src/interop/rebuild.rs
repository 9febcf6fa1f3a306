use std::collections::{HashMap, HashSet};

use super::{ImportedGraph, RebuildError};
use crate::diff::FlatKind;
use crate::model::{Activity, Branch, Gateway, GatewayKind, Node, ProcessModel};

const DEFAULT_ROLE: &str = "performer";

struct Rebuilder<'g> {
    g: &'g ImportedGraph,
    kinds: HashMap<&'g str, &'g FlatKind>,
    succ: HashMap<&'g str, Vec<(&'g str, Option<&'g str>)>>,
    visited: HashSet<&'g str>,
    warnings: Vec<String>,
}

enum Exit<'g> {
    End,
    Join(&'g str),
}

impl<'g> Rebuilder<'g> {
    fn fail(node: &str, reason: impl Into<String>) -> RebuildError {
        RebuildError::NonBlockStructured {
            node: node.to_owned(),
            reason: reason.into(),
        }
    }

    fn single_successor(&self, id: &'g str) -> Result<&'g str, RebuildError> {
        match self.succ.get(id).map(Vec::as_slice).unwrap_or_default() {
            [(next, _)] => Ok(next),
            [] => Err(Self::fail(id, "has no outgoing flow")),
            _ => Err(Self::fail(id, "has several outgoing flows but is not a split gateway")),
        }
    }

    fn activity(&self, id: &str) -> Activity {
        let detail = self.g.details.get(id);
        let name = detail.map(|d| d.name.trim()).filter(|n| !n.is_empty());
        Activity {
            id: id.to_owned(),
            role: detail
                .and_then(|d| d.role.clone())
                .filter(|r| !r.trim().is_empty())
                .unwrap_or_else(|| DEFAULT_ROLE.to_owned()),
            action: name.unwrap_or(id).to_owned(),
            object: detail.and_then(|d| d.object.clone()),
        }
    }

    /// Walks a sequence starting at `cur` until the end event or an
    /// unmatched join.
    fn sequence(&mut self, mut cur: &'g str) -> Result<(Vec<Node>, Exit<'g>), RebuildError> {
        let mut nodes = Vec::new();
        loop {
            let kind = *self.kinds.get(cur).ok_or_else(|| Self::fail(cur, "unknown node"))?;
            if self.visited.contains(cur) {
                return Err(Self::fail(cur, "is reached twice (cycle or unstructured merge)"));
            }
            match kind {
                FlatKind::End => return Ok((nodes, Exit::End)),
                FlatKind::Join(_) => return Ok((nodes, Exit::Join(cur))),
                FlatKind::Start => return Err(Self::fail(cur, "start event has an incoming flow")),
                FlatKind::Activity(_) => {
                    self.visited.insert(cur);
                    nodes.push(self.activity(cur).into());
                    cur = self.single_successor(cur)?;
                }
                FlatKind::Split(k) => {
                    self.visited.insert(cur);
                    let (gateway, join) = self.gateway(cur, *k)?;
                    nodes.push(gateway.into());
                    self.visited.insert(join);
                    cur = self.single_successor(join)?;
                }
            }
        }
    }

    fn gateway(&mut self, split: &'g str, kind: GatewayKind) -> Result<(Gateway, &'g str), RebuildError> {
        let outs = self.succ.get(split).cloned().unwrap_or_default();
        if outs.is_empty() {
            return Err(Self::fail(split, "split gateway has no outgoing flow"));
        }
        let mut branches = Vec::new();
        let mut join: Option<&'g str> = None;
        for (i, (next, cond)) in outs.into_iter().enumerate() {
            let (children, exit) = self.sequence(next)?;
            let Exit::Join(j) = exit else {
                return Err(Self::fail(split, "a branch reaches the end event without joining"));
            };
            match join {
                None => join = Some(j),
                Some(prev) if prev != j => {
                    return Err(Self::fail(split, format!("branches join at both `{prev}` and `{j}`")));
                }
                Some(_) => {}
            }
            let condition = if kind.requires_condition() {
                Some(cond.map(str::to_owned).unwrap_or_else(|| {
                    self.warnings
                        .push(format!("branch {} of `{split}` has no condition; a placeholder was used", i + 1));
                    format!("condition {}", i + 1)
                }))
            } else {
                None
            };
            branches.push(Branch { condition, children });
        }
        let join = join.expect("at least one branch");
        if *self.kinds[join] != FlatKind::Join(kind) {
            return Err(Self::fail(join, format!("does not close the {kind} split `{split}`")));
        }
        let id = split
            .strip_suffix("_split")
            .filter(|base| join.strip_suffix("_join") == Some(*base))
            .unwrap_or(split);
        Ok((
            Gateway {
                id: id.to_owned(),
                kind,
                branches,
            },
            join,
        ))
    }
}

/// Rebuilds a block-structured model from an imported graph. Returns the
/// model and notes about placeholders or dropped nodes.
pub fn graph_to_model(g: &ImportedGraph) -> Result<(ProcessModel, Vec<String>), RebuildError> {
    let mut succ: HashMap<&str, Vec<(&str, Option<&str>)>> = HashMap::new();
    for f in &g.flows {
        succ.entry(f.from.as_str())
            .or_default()
            .push((f.to.as_str(), f.condition.as_deref()));
    }
    let mut r = Rebuilder {
        g,
        kinds: g.graph.nodes.iter().map(|n| (n.id.as_str(), &n.kind)).collect(),
        succ,
        visited: HashSet::new(),
        warnings: Vec::new(),
    };
    let start = g
        .graph
        .nodes
        .iter()
        .find(|n| n.kind == FlatKind::Start)
        .ok_or_else(|| Rebuilder::fail("start", "graph has no start event"))?;
    let first = r.single_successor(&start.id)?;
    let (nodes, exit) = r.sequence(first)?;
    if let Exit::Join(j) = exit {
        return Err(Rebuilder::fail(j, "join without a matching split"));
    }
    let reached = r.visited.len() + 2;
    if reached < g.graph.nodes.len() {
        r.warnings.push(format!(
            "{} node(s) not reachable from the start event were dropped",
            g.graph.nodes.len() - reached
        ));
    }
    Ok((ProcessModel::new(g.name.clone(), nodes), r.warnings))
}
