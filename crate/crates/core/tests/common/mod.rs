#![allow(dead_code)]

use std::collections::HashSet;

use mao::diff::{flatten, CostModel, FlatGraph, FlatKind};
use mao::model::ProcessModel;
use mao::synth::{mutate, random_model, ModelShape};
use rand::Rng;

/// Exhaustive minimum edit distance: tries every injective, kind-preserving
/// partial mapping and prices it straight from the definition.
pub fn brute_force_ged(g1: &FlatGraph, g2: &FlatGraph, c: &CostModel) -> f64 {
    fn same_kind(a: &FlatKind, b: &FlatKind) -> bool {
        std::mem::discriminant(a) == std::mem::discriminant(b)
            && match (a, b) {
                (FlatKind::Split(x), FlatKind::Split(y)) | (FlatKind::Join(x), FlatKind::Join(y)) => x == y,
                _ => true,
            }
    }
    fn price(g1: &FlatGraph, g2: &FlatGraph, c: &CostModel, map: &[Option<usize>]) -> f64 {
        let mut total = 0.0;
        let mut used = HashSet::new();
        for (u, t) in map.iter().enumerate() {
            match t {
                None => total += c.w_del,
                Some(v) => {
                    used.insert(*v);
                    if let (FlatKind::Activity(a), FlatKind::Activity(b)) = (&g1.nodes[u].kind, &g2.nodes[*v].kind) {
                        total += (c.w_del + c.w_ins) * (1.0 - strsim::normalized_levenshtein(a, b));
                    }
                }
            }
        }
        total += c.w_ins * (g2.nodes.len() - used.len()) as f64;
        let img = |id: &str| -> Option<&str> {
            let u = g1.nodes.iter().position(|n| n.id == id)?;
            map[u].map(|v| g2.nodes[v].id.as_str())
        };
        let pre = |id: &str| -> Option<&str> {
            let v = g2.nodes.iter().position(|n| n.id == id)?;
            let u = map.iter().position(|t| *t == Some(v))?;
            Some(g1.nodes[u].id.as_str())
        };
        for (a, b) in &g1.edges {
            let kept = matches!((img(a), img(b)), (Some(x), Some(y)) if g2.edges.contains(&(x.to_string(), y.to_string())));
            if !kept {
                total += c.w_edge;
            }
        }
        for (a, b) in &g2.edges {
            let kept = matches!((pre(a), pre(b)), (Some(x), Some(y)) if g1.edges.contains(&(x.to_string(), y.to_string())));
            if !kept {
                total += c.w_edge;
            }
        }
        total
    }
    fn go(
        g1: &FlatGraph,
        g2: &FlatGraph,
        c: &CostModel,
        map: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        best: &mut f64,
    ) {
        let u = map.len();
        if u == g1.nodes.len() {
            *best = best.min(price(g1, g2, c, map));
            return;
        }
        map.push(None);
        go(g1, g2, c, map, used, best);
        map.pop();
        for v in 0..g2.nodes.len() {
            if !used[v] && same_kind(&g1.nodes[u].kind, &g2.nodes[v].kind) {
                used[v] = true;
                map.push(Some(v));
                go(g1, g2, c, map, used, best);
                map.pop();
                used[v] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(g1, g2, c, &mut Vec::new(), &mut vec![false; g2.nodes.len()], &mut best);
    best
}

pub fn small_shape() -> ModelShape {
    ModelShape {
        max_depth: 2,
        max_nodes: 4,
        exotic_text: false,
    }
}

/// A model and a lightly edited copy, both flattening to at most `cap` nodes.
pub fn oracle_pair<R: Rng>(rng: &mut R, cap: usize) -> (ProcessModel, ProcessModel) {
    loop {
        let a = random_model(rng, small_shape());
        let mut b = a.clone();
        for _ in 0..rng.gen_range(1..=3) {
            mutate(rng, &mut b);
        }
        if flatten(&a).len() <= cap && flatten(&b).len() <= cap {
            return (a, b);
        }
    }
}

pub fn approx(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}
