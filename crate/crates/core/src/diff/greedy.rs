use super::cost::{Mapping, Problem};

/// Best marginal pair to add, ties broken by candidate order.
pub(crate) fn best_addition(p: &Problem<'_>, m: &Mapping) -> Option<((usize, usize), f64)> {
    let mut best: Option<((usize, usize), f64)> = None;
    for &(u, v) in &p.candidates {
        if m.target(u).is_some() || !m.is_free2(v) {
            continue;
        }
        let Some(d) = p.add_delta(m, u, v) else { continue };
        if best.is_none_or(|(_, b)| d < b - 1e-12) {
            best = Some(((u, v), d));
        }
    }
    best
}

/// Starts from the anchors and keeps adding the pair with the most negative
/// marginal cost. Returns the mapping and the number of pairs added.
pub(crate) fn solve(p: &Problem<'_>) -> (Mapping, u64) {
    let mut m = p.anchored();
    let mut added = 0;
    while let Some(((u, v), d)) = best_addition(p, &m) {
        if d >= -1e-12 {
            break;
        }
        m.set(u, v);
        added += 1;
    }
    (m, added)
}
