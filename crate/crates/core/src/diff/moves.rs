use rand::seq::SliceRandom;
use rand::Rng;

use super::cost::{Mapping, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Move {
    Add(usize, usize),
    Remove(usize),
    Retarget(usize, usize),
    Exchange(usize, usize),
}

/// Undo record for a move applied to a mapping.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Applied {
    mv: Move,
    old: [Option<usize>; 2],
}

impl Move {
    /// Pairs the move creates and the pairs it destroys.
    pub fn pairs(self, m: &Mapping) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
        match self {
            Move::Add(u, v) => (vec![(u, v)], vec![]),
            Move::Remove(u) => (vec![], vec![(u, m.target(u).unwrap())]),
            Move::Retarget(u, v) => (vec![(u, v)], vec![(u, m.target(u).unwrap())]),
            Move::Exchange(a, b) => {
                let (x, y) = (m.target(a).unwrap(), m.target(b).unwrap());
                (vec![(a, y), (b, x)], vec![(a, x), (b, y)])
            }
        }
    }

    pub fn apply(self, m: &mut Mapping) -> Applied {
        match self {
            Move::Add(u, v) => {
                m.set(u, v);
                Applied { mv: self, old: [None, None] }
            }
            Move::Remove(u) => {
                let old = m.target(u);
                m.unset(u);
                Applied { mv: self, old: [old, None] }
            }
            Move::Retarget(u, v) => {
                let old = m.target(u);
                m.unset(u);
                m.set(u, v);
                Applied { mv: self, old: [old, None] }
            }
            Move::Exchange(a, b) => {
                let (x, y) = (m.target(a).unwrap(), m.target(b).unwrap());
                m.set(a, y);
                m.set(b, x);
                Applied { mv: self, old: [Some(x), Some(y)] }
            }
        }
    }
}

impl Applied {
    pub fn undo(self, m: &mut Mapping) {
        match self.mv {
            Move::Add(u, _) => m.unset(u),
            Move::Remove(u) => m.set(u, self.old[0].unwrap()),
            Move::Retarget(u, _) => {
                m.unset(u);
                m.set(u, self.old[0].unwrap());
            }
            Move::Exchange(a, b) => {
                m.set(a, self.old[0].unwrap());
                m.set(b, self.old[1].unwrap());
            }
        }
    }
}

/// Every feasible move from `m`, in a fixed order.
pub(crate) fn neighborhood(p: &Problem<'_>, m: &Mapping) -> Vec<Move> {
    let mut out = Vec::new();
    for &(u, v) in &p.candidates {
        if !m.is_free2(v) {
            continue;
        }
        if m.target(u).is_some() {
            out.push(Move::Retarget(u, v));
        } else {
            out.push(Move::Add(u, v));
        }
    }
    let mapped: Vec<usize> = (0..p.n1)
        .filter(|&u| m.target(u).is_some() && !p.is_anchor1(u))
        .collect();
    out.extend(mapped.iter().map(|&u| Move::Remove(u)));
    for (i, &a) in mapped.iter().enumerate() {
        for &b in &mapped[i + 1..] {
            if p.class1[a] == p.class1[b] {
                out.push(Move::Exchange(a, b));
            }
        }
    }
    out
}

/// A uniformly chosen feasible move touching a random g1 node, if any.
pub(crate) fn random_move<R: Rng>(p: &Problem<'_>, m: &Mapping, rng: &mut R) -> Option<Move> {
    let mut nodes: Vec<usize> = (0..p.n1).filter(|&u| !p.is_anchor1(u)).collect();
    nodes.shuffle(rng);
    for u in nodes {
        let free: Vec<usize> = (0..p.n2)
            .filter(|&v| m.is_free2(v) && p.sub(u, v).is_some())
            .collect();
        let mut options = Vec::new();
        match m.target(u) {
            None => {
                if let Some(&v) = free.choose(rng) {
                    options.push(Move::Add(u, v));
                }
            }
            Some(_) => {
                options.push(Move::Remove(u));
                if let Some(&v) = free.choose(rng) {
                    options.push(Move::Retarget(u, v));
                }
                let partners: Vec<usize> = (0..p.n1)
                    .filter(|&w| w != u && m.target(w).is_some() && !p.is_anchor1(w))
                    .filter(|&w| p.class1[w] == p.class1[u])
                    .collect();
                if let Some(&w) = partners.choose(rng) {
                    options.push(Move::Exchange(u, w));
                }
            }
        }
        if let Some(&mv) = options.choose(rng) {
            return Some(mv);
        }
    }
    None
}
