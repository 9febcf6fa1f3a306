//! Seeded random process models for property tests, benchmarks and demos.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{Activity, Branch, Gateway, GatewayKind, Node, ProcessModel};

#[derive(Debug, Clone, Copy)]
pub struct ModelShape {
    /// Maximum gateway nesting depth.
    pub max_depth: usize,
    /// Maximum number of activities plus gateways.
    pub max_nodes: usize,
    /// Use awkward characters (`&<>"'`, non-ASCII, inner whitespace) in strings.
    pub exotic_text: bool,
}

impl Default for ModelShape {
    fn default() -> Self {
        Self {
            max_depth: 4,
            max_nodes: 30,
            exotic_text: true,
        }
    }
}

const WORDS: &[&str] = &[
    "check", "order", "ship", "parcel", "invoice", "approve", "reject", "pack", "goods",
    "notify", "customer", "assign", "courier", "archive", "claim", "review", "pay", "bill",
];
const EXOTIC: &[&str] = &["a&b", "<x>", "\"q\"", "it's", "café", "naïve  spaced", "tab\tin", "50%"];
const ROLES: &[&str] = &["clerk", "system", "customer", "manager", "courier"];

fn phrase<R: Rng>(rng: &mut R, exotic: bool) -> String {
    let n = rng.gen_range(1..=3);
    (0..n)
        .map(|_| {
            if exotic && rng.gen_bool(0.15) {
                *EXOTIC.choose(rng).unwrap()
            } else {
                *WORDS.choose(rng).unwrap()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

struct Gen<'r, R> {
    rng: &'r mut R,
    shape: ModelShape,
    budget: usize,
    next_id: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn id(&mut self, prefix: &str) -> String {
        self.next_id += 1;
        format!("{prefix}{}", self.next_id)
    }

    fn activity(&mut self) -> Node {
        self.budget -= 1;
        let exotic = self.shape.exotic_text;
        let mut a = Activity::new(
            self.id("a"),
            *ROLES.choose(self.rng).unwrap(),
            phrase(self.rng, exotic),
        );
        if self.rng.gen_bool(0.3) {
            a.object = Some(phrase(self.rng, exotic));
        }
        a.into()
    }

    fn sequence(&mut self, depth: usize, min: usize) -> Vec<Node> {
        let len = self.rng.gen_range(min..=3);
        let mut out = Vec::new();
        for _ in 0..len {
            if self.budget == 0 {
                break;
            }
            let gateway = depth < self.shape.max_depth && self.budget >= 3 && self.rng.gen_bool(0.3);
            out.push(if gateway { self.gateway(depth + 1) } else { self.activity() });
        }
        out
    }

    fn gateway(&mut self, depth: usize) -> Node {
        self.budget -= 1;
        let kind = *GatewayKind::ALL.choose(self.rng).unwrap();
        let id = self.id("g");
        let n = self.rng.gen_range(2..=3);
        let exotic = self.shape.exotic_text;
        let branches = (0..n)
            .map(|_| {
                let condition = if kind.requires_condition() {
                    Some(phrase(self.rng, exotic))
                } else {
                    None
                };
                let children = if self.rng.gen_bool(0.15) {
                    Vec::new()
                } else {
                    self.sequence(depth, 1)
                };
                Branch { condition, children }
            })
            .collect();
        Gateway { id, kind, branches }.into()
    }
}

/// A structurally valid random model.
pub fn random_model<R: Rng>(rng: &mut R, shape: ModelShape) -> ProcessModel {
    let mut g = Gen {
        rng,
        shape,
        budget: shape.max_nodes.max(1),
        next_id: 0,
    };
    let mut nodes = g.sequence(0, 1);
    if nodes.is_empty() {
        nodes.push(g.activity());
    }
    let name = phrase(g.rng, shape.exotic_text);
    ProcessModel { name, nodes }
}

/// Applies one random edit (relabel, insert, delete, or gateway-kind change),
/// keeping the model structurally valid.
pub fn mutate<R: Rng>(rng: &mut R, model: &mut ProcessModel) {
    // Every node sequence is addressed by the (node, branch) steps leading to it.
    fn seqs(nodes: &[Node], prefix: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        out.push(prefix.clone());
        for (i, n) in nodes.iter().enumerate() {
            if let Node::Gateway(g) = n {
                for (b, branch) in g.branches.iter().enumerate() {
                    prefix.push((i, b));
                    seqs(&branch.children, prefix, out);
                    prefix.pop();
                }
            }
        }
    }
    fn resolve<'m>(mut nodes: &'m mut Vec<Node>, steps: &[(usize, usize)]) -> &'m mut Vec<Node> {
        for &(i, b) in steps {
            match &mut nodes[i] {
                Node::Gateway(g) => nodes = &mut g.branches[b].children,
                Node::Activity(_) => unreachable!("sequence steps only pass through gateways"),
            }
        }
        nodes
    }

    let fresh = (model.node_count()..)
        .map(|n| format!("m{n}"))
        .find(|id| !model.contains_id(id))
        .unwrap();
    let mut all = Vec::new();
    seqs(&model.nodes, &mut Vec::new(), &mut all);
    let steps = &all[rng.gen_range(0..all.len())];
    let seq = resolve(&mut model.nodes, steps);
    match rng.gen_range(0..4) {
        0 if !seq.is_empty() => {
            let i = rng.gen_range(0..seq.len());
            match &mut seq[i] {
                Node::Activity(a) => a.action = phrase(rng, false),
                Node::Gateway(g) => {
                    g.kind = *GatewayKind::ALL.choose(rng).unwrap();
                    for b in &mut g.branches {
                        b.condition = g
                            .kind
                            .requires_condition()
                            .then(|| b.condition.clone().unwrap_or_else(|| phrase(rng, false)));
                    }
                }
            }
        }
        1 if seq.len() > 1 => {
            let i = rng.gen_range(0..seq.len());
            seq.remove(i);
        }
        _ => {
            let i = rng.gen_range(0..=seq.len());
            seq.insert(
                i,
                Activity::new(fresh, *ROLES.choose(rng).unwrap(), phrase(rng, false)).into(),
            );
        }
    }
}
