use super::cost::{Mapping, Problem};
use super::moves::neighborhood;

#[derive(Debug, Clone, Copy)]
pub struct TabuParams {
    pub tenure: u64,
    pub iterations: u64,
}

impl Default for TabuParams {
    fn default() -> Self {
        Self {
            tenure: 7,
            iterations: 200,
        }
    }
}

/// Best-improvement tabu search over add/remove/retarget/exchange moves.
/// Recently removed pairs may not be re-added and recently added pairs may
/// not be removed, unless the move beats the best cost seen so far.
pub(crate) fn solve(p: &Problem<'_>, start: Mapping, params: TabuParams) -> (Mapping, u64) {
    let idx = |(u, v): (usize, usize)| u * p.n2 + v;
    let mut no_add = vec![0u64; p.n1 * p.n2];
    let mut no_remove = vec![0u64; p.n1 * p.n2];
    let mut cur = start;
    let mut best_cost = p.evaluate(&cur);
    let mut best = cur.clone();
    let mut iter = 0;
    while iter < params.iterations && best_cost > 1e-12 {
        iter += 1;
        let mut chosen = None;
        for mv in neighborhood(p, &cur) {
            let (added, removed) = mv.pairs(&cur);
            let undo = mv.apply(&mut cur);
            let c = p.evaluate(&cur);
            undo.undo(&mut cur);
            let tabu = added.iter().any(|&q| no_add[idx(q)] >= iter)
                || removed.iter().any(|&q| no_remove[idx(q)] >= iter);
            if tabu && c >= best_cost - 1e-12 {
                continue;
            }
            if chosen.is_none_or(|(_, bc)| c < bc - 1e-12) {
                chosen = Some((mv, c));
            }
        }
        let Some((mv, c)) = chosen else { break };
        let (added, removed) = mv.pairs(&cur);
        for q in removed {
            no_add[idx(q)] = iter + params.tenure;
        }
        for q in added {
            no_remove[idx(q)] = iter + params.tenure;
        }
        mv.apply(&mut cur);
        if c < best_cost - 1e-12 {
            best_cost = c;
            best = cur.clone();
        }
    }
    (best, iter)
}
