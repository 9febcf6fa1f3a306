use rand::Rng;

use super::cost::{Mapping, Problem};

#[derive(Debug, Clone, Copy)]
pub struct AntParams {
    pub ants: usize,
    pub iterations: u64,
    pub alpha: f64,
    pub beta: f64,
    pub evaporation: f64,
}

impl Default for AntParams {
    fn default() -> Self {
        Self {
            ants: 20,
            iterations: 100,
            alpha: 1.0,
            beta: 2.0,
            evaporation: 0.1,
        }
    }
}

/// One ant: extend the anchored mapping with pairs of negative marginal
/// cost, picked by roulette over pheromone and a local-cost heuristic.
fn construct<R: Rng>(p: &Problem<'_>, tau: &[f64], params: &AntParams, rng: &mut R) -> Mapping {
    let mut m = p.anchored();
    let mut options: Vec<((usize, usize), f64)> = Vec::new();
    loop {
        options.clear();
        for &(u, v) in &p.candidates {
            if m.target(u).is_some() || !m.is_free2(v) {
                continue;
            }
            let Some(delta) = p.add_delta(&m, u, v) else { continue };
            if delta >= -1e-12 {
                continue;
            }
            let s = p.sub(u, v).unwrap_or(0.0);
            let kept = p.preserved_with(&m, u, v);
            let (d1, d2) = p.incident_mapped(&m, u, v);
            let unpreserved = (d1 + d2).saturating_sub(2 * kept);
            let eta = 1.0 / (1.0 + s + p.cost.w_edge * unpreserved as f64);
            let w = tau[u * p.n2 + v].powf(params.alpha) * eta.powf(params.beta);
            options.push(((u, v), w));
        }
        if options.is_empty() {
            return m;
        }
        let total: f64 = options.iter().map(|o| o.1).sum();
        let mut pick = rng.gen::<f64>() * total;
        let mut chosen = options[options.len() - 1].0;
        for &(pair, w) in &options {
            if pick < w {
                chosen = pair;
                break;
            }
            pick -= w;
        }
        m.set(chosen.0, chosen.1);
    }
}

/// Ant colony search starting from `incumbent`; pheromone evaporates every
/// iteration and the best-so-far mapping deposits `1 / cost` on its pairs.
pub(crate) fn solve<R: Rng>(
    p: &Problem<'_>,
    incumbent: Mapping,
    params: AntParams,
    rng: &mut R,
) -> (Mapping, u64) {
    let mut tau = vec![1.0; p.n1 * p.n2];
    let mut best = incumbent;
    let mut best_cost = p.evaluate(&best);
    let mut iter = 0;
    while iter < params.iterations && best_cost > 1e-12 {
        iter += 1;
        for _ in 0..params.ants {
            let m = construct(p, &tau, &params, rng);
            let c = p.evaluate(&m);
            if c < best_cost - 1e-12 {
                best_cost = c;
                best = m;
            }
        }
        for t in &mut tau {
            *t = (*t * (1.0 - params.evaporation)).max(1e-9);
        }
        if best_cost > 1e-12 {
            let deposit = 1.0 / best_cost;
            for u in 0..p.n1 {
                if let Some(v) = best.target(u) {
                    tau[u * p.n2 + v] += deposit;
                }
            }
        }
    }
    (best, iter)
}
