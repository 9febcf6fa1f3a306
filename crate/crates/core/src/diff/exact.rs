use super::cost::{Mapping, Problem, NONE};
use super::graph::KindClass;

struct Search<'p, 'a> {
    p: &'p Problem<'a>,
    order: Vec<usize>,
    pos: Vec<usize>,
    class_of1: Vec<usize>,
    class_of2: Vec<usize>,
    /// Remaining undecided g1 nodes per class.
    rem1: Vec<usize>,
    /// Free g2 nodes per class.
    free2: Vec<usize>,
    m: Mapping,
    best: f64,
    best_map: Mapping,
    expanded: u64,
}

impl Search<'_, '_> {
    fn bound(&self) -> f64 {
        let c = &self.p.cost;
        self.rem1
            .iter()
            .zip(&self.free2)
            .map(|(&r, &f)| {
                c.w_del * r.saturating_sub(f) as f64 + c.w_ins * f.saturating_sub(r) as f64
            })
            .sum()
    }

    /// Edge cost settled by mapping `u -> v` (or deleting `u` when `v` is
    /// `None`), plus the number of g2 edges that become fully mapped.
    fn settle(&self, u: usize, v: Option<usize>, d: usize) -> (f64, usize) {
        let p = self.p;
        let w = p.cost.w_edge;
        let mut cost = 0.0;
        let decided = |x: usize| self.pos[x] < d;
        let img = |x: usize| (self.m.fwd[x] != NONE).then(|| self.m.fwd[x] as usize);
        for &x in &p.out1[u] {
            if decided(x) {
                let ok = matches!((v, img(x)), (Some(v), Some(y)) if p.has_edge2(v, y));
                if !ok {
                    cost += w;
                }
            }
        }
        for &x in &p.in1[u] {
            if decided(x) {
                let ok = matches!((v, img(x)), (Some(v), Some(y)) if p.has_edge2(y, v));
                if !ok {
                    cost += w;
                }
            }
        }
        if p.loop1[u] && !matches!(v, Some(v) if p.loop2[v]) {
            cost += w;
        }
        let mut resolved = 0;
        if let Some(v) = v {
            let has1 = |a: usize, b: usize| p.out1[a].contains(&b);
            for &y in &p.out2[v] {
                let x = self.m.bwd[y];
                if x != NONE {
                    resolved += 1;
                    if !has1(u, x as usize) {
                        cost += w;
                    }
                }
            }
            for &y in &p.in2[v] {
                let x = self.m.bwd[y];
                if x != NONE {
                    resolved += 1;
                    if !has1(x as usize, u) {
                        cost += w;
                    }
                }
            }
            if p.loop2[v] {
                resolved += 1;
                if !p.loop1[u] {
                    cost += w;
                }
            }
        }
        (cost, resolved)
    }

    fn dfs(&mut self, d: usize, g: f64, resolved2: usize) {
        self.expanded += 1;
        if g + self.bound() >= self.best - 1e-12 {
            return;
        }
        let p = self.p;
        if d == self.order.len() {
            let free = self.m.bwd.iter().filter(|&&x| x == NONE).count();
            let total = g + p.cost.w_ins * free as f64 + p.cost.w_edge * (p.e2 - resolved2) as f64;
            if total < self.best - 1e-12 {
                self.best = total;
                self.best_map = self.m.clone();
            }
            return;
        }
        let u = self.order[d];
        let cu = self.class_of1[u];
        let mut options: Vec<(f64, Option<usize>, usize)> = Vec::new();
        for v in 0..p.n2 {
            if !self.m.is_free2(v) {
                continue;
            }
            if let Some(s) = p.sub(u, v) {
                let (e, r) = self.settle(u, Some(v), d);
                options.push((s + e, Some(v), r));
            }
        }
        let (e, _) = self.settle(u, None, d);
        options.push((p.cost.w_del + e, None, 0));
        options.sort_by(|a, b| a.0.total_cmp(&b.0));

        self.rem1[cu] -= 1;
        for (inc, v, r) in options {
            match v {
                Some(v) => {
                    self.m.set(u, v);
                    self.free2[self.class_of2[v]] -= 1;
                    self.dfs(d + 1, g + inc, resolved2 + r);
                    self.free2[self.class_of2[v]] += 1;
                    self.m.unset(u);
                }
                None => self.dfs(d + 1, g + inc, resolved2),
            }
        }
        self.rem1[cu] += 1;
    }
}

/// Branch-and-bound search over all injective same-kind mappings, seeded
/// with `incumbent` as the initial upper bound. Returns the optimal mapping
/// and the number of search nodes expanded.
pub(crate) fn solve(p: &Problem<'_>, incumbent: Mapping) -> (Mapping, u64) {
    let mut classes: Vec<KindClass> = p.class1.iter().chain(&p.class2).copied().collect();
    classes.sort();
    classes.dedup();
    let idx = |c: &KindClass| classes.binary_search(c).unwrap();
    let class_of1: Vec<usize> = p.class1.iter().map(idx).collect();
    let class_of2: Vec<usize> = p.class2.iter().map(idx).collect();
    let mut rem1 = vec![0; classes.len()];
    let mut free2 = vec![0; classes.len()];
    for &c in &class_of1 {
        rem1[c] += 1;
    }
    for &c in &class_of2 {
        free2[c] += 1;
    }
    // Visit nodes with the most edges first so edge costs settle early.
    let mut order: Vec<usize> = (0..p.n1).collect();
    order.sort_by_key(|&u| std::cmp::Reverse(p.out1[u].len() + p.in1[u].len()));
    let mut pos = vec![0; p.n1];
    for (i, &u) in order.iter().enumerate() {
        pos[u] = i;
    }
    let best = p.evaluate(&incumbent) + 1e-9;
    let mut s = Search {
        p,
        order,
        pos,
        class_of1,
        class_of2,
        rem1,
        free2,
        m: Mapping::empty(p.n1, p.n2),
        best,
        best_map: incumbent,
        expanded: 0,
    };
    s.dfs(0, 0.0, 0);
    (s.best_map, s.expanded)
}
