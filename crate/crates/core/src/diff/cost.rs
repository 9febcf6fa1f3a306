use serde::{Deserialize, Serialize};

use super::graph::{FlatGraph, FlatKind, KindClass};
use super::DiffError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSimilarity {
    /// Normalized Levenshtein similarity of the labels.
    #[default]
    Levenshtein,
    /// 1 when labels are equal, 0 otherwise.
    Exact,
}

impl LabelSimilarity {
    pub fn similarity(self, a: &str, b: &str) -> f64 {
        match self {
            LabelSimilarity::Levenshtein => strsim::normalized_levenshtein(a, b),
            LabelSimilarity::Exact => f64::from(u8::from(a == b)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    pub w_del: f64,
    pub w_ins: f64,
    pub w_edge: f64,
    pub similarity: LabelSimilarity,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            w_del: 1.0,
            w_ins: 1.0,
            w_edge: 0.5,
            similarity: LabelSimilarity::Levenshtein,
        }
    }
}

impl CostModel {
    pub fn check(&self) -> Result<(), DiffError> {
        for (name, w) in [("w_del", self.w_del), ("w_ins", self.w_ins), ("w_edge", self.w_edge)] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(DiffError::BadWeight(name, w));
            }
        }
        Ok(())
    }

    /// Cost of matching two nodes, `None` when their kinds differ.
    pub fn substitution(&self, a: &FlatKind, b: &FlatKind) -> Option<f64> {
        if a.class() != b.class() {
            return None;
        }
        Some(match (a, b) {
            (FlatKind::Activity(x), FlatKind::Activity(y)) => {
                (self.w_del + self.w_ins) * (1.0 - self.similarity.similarity(x, y))
            }
            _ => 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub substitution: f64,
    pub deletion: f64,
    pub insertion: f64,
    pub edge: f64,
}

impl CostBreakdown {
    pub fn total(&self) -> f64 {
        self.substitution + self.deletion + self.insertion + self.edge
    }
}

pub(crate) const NONE: u32 = u32::MAX;

/// Index-based view of a graph pair shared by all solvers.
pub(crate) struct Problem<'a> {
    pub g1: &'a FlatGraph,
    pub g2: &'a FlatGraph,
    pub n1: usize,
    pub n2: usize,
    pub cost: CostModel,
    /// `sub[u * n2 + v]`, NaN when the kinds differ.
    sub: Vec<f64>,
    adj2: Vec<bool>,
    pub out1: Vec<Vec<usize>>,
    pub in1: Vec<Vec<usize>>,
    pub out2: Vec<Vec<usize>>,
    pub in2: Vec<Vec<usize>>,
    pub loop1: Vec<bool>,
    pub loop2: Vec<bool>,
    pub edges1: Vec<(usize, usize)>,
    pub e2: usize,
    pub class1: Vec<KindClass>,
    pub class2: Vec<KindClass>,
    /// Start/End pairs that every solver keeps fixed.
    pub anchors: Vec<(usize, usize)>,
    /// All same-kind non-anchor pairs, sorted by (id1, id2).
    pub candidates: Vec<(usize, usize)>,
}

fn adjacency(g: &FlatGraph) -> (Vec<Vec<usize>>, Vec<Vec<usize>>, Vec<bool>, Vec<(usize, usize)>) {
    let n = g.nodes.len();
    let index: std::collections::HashMap<&str, usize> =
        g.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let mut out = vec![Vec::new(); n];
    let mut inc = vec![Vec::new(); n];
    let mut lp = vec![false; n];
    let mut edges = Vec::new();
    for (f, t) in &g.edges {
        let (Some(&a), Some(&b)) = (index.get(f.as_str()), index.get(t.as_str())) else {
            continue;
        };
        edges.push((a, b));
        if a == b {
            lp[a] = true;
        } else {
            out[a].push(b);
            inc[b].push(a);
        }
    }
    (out, inc, lp, edges)
}

impl<'a> Problem<'a> {
    pub fn new(g1: &'a FlatGraph, g2: &'a FlatGraph, cost: CostModel) -> Result<Self, DiffError> {
        cost.check()?;
        for g in [g1, g2] {
            let mut seen = std::collections::HashSet::new();
            for n in &g.nodes {
                if !seen.insert(n.id.as_str()) {
                    return Err(DiffError::DuplicateNode(n.id.clone()));
                }
            }
            for (f, t) in &g.edges {
                if g.node(f).is_none() || g.node(t).is_none() {
                    return Err(DiffError::DanglingEdge(f.clone(), t.clone()));
                }
            }
        }
        let (n1, n2) = (g1.nodes.len(), g2.nodes.len());
        let mut sub = vec![f64::NAN; n1 * n2];
        for (u, a) in g1.nodes.iter().enumerate() {
            for (v, b) in g2.nodes.iter().enumerate() {
                if let Some(c) = cost.substitution(&a.kind, &b.kind) {
                    sub[u * n2 + v] = c;
                }
            }
        }
        let (out1, in1, loop1, edges1) = adjacency(g1);
        let (out2, in2, loop2, edges2) = adjacency(g2);
        let mut adj2 = vec![false; n2 * n2];
        for &(a, b) in &edges2 {
            adj2[a * n2 + b] = true;
        }
        let class1: Vec<KindClass> = g1.nodes.iter().map(|n| n.kind.class()).collect();
        let class2: Vec<KindClass> = g2.nodes.iter().map(|n| n.kind.class()).collect();

        let mut anchors = Vec::new();
        for class in [KindClass::Start, KindClass::End] {
            let a: Vec<usize> = (0..n1).filter(|&u| class1[u] == class).collect();
            let b: Vec<usize> = (0..n2).filter(|&v| class2[v] == class).collect();
            if a.len() == 1 && b.len() == 1 {
                anchors.push((a[0], b[0]));
            }
        }
        let mut candidates: Vec<(usize, usize)> = (0..n1)
            .flat_map(|u| (0..n2).map(move |v| (u, v)))
            .filter(|&(u, v)| !sub[u * n2 + v].is_nan())
            .filter(|&(u, v)| !anchors.iter().any(|&(a, b)| a == u || b == v))
            .collect();
        candidates.sort_by(|&(u1, v1), &(u2, v2)| {
            (g1.nodes[u1].id.as_str(), g2.nodes[v1].id.as_str())
                .cmp(&(g1.nodes[u2].id.as_str(), g2.nodes[v2].id.as_str()))
        });

        Ok(Self {
            g1,
            g2,
            n1,
            n2,
            cost,
            sub,
            adj2,
            out1,
            in1,
            out2,
            in2,
            loop1,
            loop2,
            edges1,
            e2: edges2.len(),
            class1,
            class2,
            anchors,
            candidates,
        })
    }

    #[inline]
    pub fn sub(&self, u: usize, v: usize) -> Option<f64> {
        let c = self.sub[u * self.n2 + v];
        (!c.is_nan()).then_some(c)
    }

    #[inline]
    pub fn has_edge2(&self, a: usize, b: usize) -> bool {
        self.adj2[a * self.n2 + b]
    }

    pub fn is_anchor1(&self, u: usize) -> bool {
        self.anchors.iter().any(|&(a, _)| a == u)
    }

    /// Number of g1 edges between `u` and already mapped nodes that would be
    /// preserved by adding `u -> v`. Self-loops count once.
    pub fn preserved_with(&self, m: &Mapping, u: usize, v: usize) -> usize {
        let mut p = usize::from(self.loop1[u] && self.loop2[v]);
        for &x in &self.out1[u] {
            let y = m.fwd[x];
            if y != NONE && self.has_edge2(v, y as usize) {
                p += 1;
            }
        }
        for &x in &self.in1[u] {
            let y = m.fwd[x];
            if y != NONE && self.has_edge2(y as usize, v) {
                p += 1;
            }
        }
        p
    }

    /// Edges incident to `u` in g1 and `v` in g2 whose other endpoint is
    /// already mapped, counting self-loops.
    pub fn incident_mapped(&self, m: &Mapping, u: usize, v: usize) -> (usize, usize) {
        let d1 = usize::from(self.loop1[u])
            + self.out1[u].iter().chain(&self.in1[u]).filter(|&&x| m.fwd[x] != NONE).count();
        let d2 = usize::from(self.loop2[v])
            + self.out2[v].iter().chain(&self.in2[v]).filter(|&&y| m.bwd[y] != NONE).count();
        (d1, d2)
    }

    /// Cost change of adding `u -> v` to `m`.
    pub fn add_delta(&self, m: &Mapping, u: usize, v: usize) -> Option<f64> {
        let s = self.sub(u, v)?;
        let p = self.preserved_with(m, u, v) as f64;
        Some(s - self.cost.w_del - self.cost.w_ins - 2.0 * self.cost.w_edge * p)
    }

    pub fn breakdown(&self, m: &Mapping) -> CostBreakdown {
        let mut b = CostBreakdown::default();
        let mut unmapped1 = 0usize;
        for u in 0..self.n1 {
            match m.fwd[u] {
                NONE => unmapped1 += 1,
                v => b.substitution += self.sub(u, v as usize).unwrap_or(f64::INFINITY),
            }
        }
        let unmapped2 = m.bwd.iter().filter(|&&u| u == NONE).count();
        let preserved = self
            .edges1
            .iter()
            .filter(|&&(a, c)| {
                let (x, y) = (m.fwd[a], m.fwd[c]);
                x != NONE && y != NONE && self.has_edge2(x as usize, y as usize)
            })
            .count();
        b.deletion = self.cost.w_del * unmapped1 as f64;
        b.insertion = self.cost.w_ins * unmapped2 as f64;
        b.edge = self.cost.w_edge * ((self.edges1.len() - preserved) + (self.e2 - preserved)) as f64;
        b
    }

    pub fn evaluate(&self, m: &Mapping) -> f64 {
        self.breakdown(m).total()
    }

    pub fn anchored(&self) -> Mapping {
        let mut m = Mapping::empty(self.n1, self.n2);
        for &(u, v) in &self.anchors {
            m.set(u, v);
        }
        m
    }

    pub fn pairs(&self, m: &Mapping) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = (0..self.n1)
            .filter(|&u| m.fwd[u] != NONE)
            .map(|u| {
                (
                    self.g1.nodes[u].id.clone(),
                    self.g2.nodes[m.fwd[u] as usize].id.clone(),
                )
            })
            .collect();
        out.sort();
        out
    }
}

/// Partial injective node mapping in both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Mapping {
    pub fwd: Vec<u32>,
    pub bwd: Vec<u32>,
}

impl Mapping {
    pub fn empty(n1: usize, n2: usize) -> Self {
        Self {
            fwd: vec![NONE; n1],
            bwd: vec![NONE; n2],
        }
    }

    pub fn set(&mut self, u: usize, v: usize) {
        self.fwd[u] = v as u32;
        self.bwd[v] = u as u32;
    }

    pub fn unset(&mut self, u: usize) {
        let v = self.fwd[u];
        if v != NONE {
            self.bwd[v as usize] = NONE;
            self.fwd[u] = NONE;
        }
    }

    pub fn target(&self, u: usize) -> Option<usize> {
        (self.fwd[u] != NONE).then(|| self.fwd[u] as usize)
    }

    pub fn is_free2(&self, v: usize) -> bool {
        self.bwd[v] == NONE
    }
}
