use rand::Rng;

use super::cost::{Mapping, Problem};
use super::moves::random_move;

#[derive(Debug, Clone, Copy)]
pub struct AnnealParams {
    pub cooling: f64,
    pub epoch: u64,
    pub min_temperature: f64,
    pub max_stagnant_epochs: u64,
    pub calibration_moves: u64,
}

impl Default for AnnealParams {
    fn default() -> Self {
        Self {
            cooling: 0.95,
            epoch: 100,
            min_temperature: 1e-3,
            max_stagnant_epochs: 50,
            calibration_moves: 100,
        }
    }
}

/// Simulated annealing with geometric cooling per epoch. The initial
/// temperature is the mean absolute cost change of random moves.
pub(crate) fn solve<R: Rng>(
    p: &Problem<'_>,
    start: Mapping,
    params: AnnealParams,
    rng: &mut R,
) -> (Mapping, u64) {
    let mut cur = start;
    let mut cur_cost = p.evaluate(&cur);

    let mut sum = 0.0;
    let mut samples = 0u32;
    for _ in 0..params.calibration_moves {
        let Some(mv) = random_move(p, &cur, rng) else { break };
        let undo = mv.apply(&mut cur);
        sum += (p.evaluate(&cur) - cur_cost).abs();
        undo.undo(&mut cur);
        samples += 1;
    }
    let mut t = if samples > 0 && sum > 0.0 {
        sum / f64::from(samples)
    } else {
        p.cost.w_edge.max(1e-2)
    };

    let mut best = cur.clone();
    let mut best_cost = cur_cost;
    let mut stagnant = 0;
    let mut moves = 0;
    if samples == 0 {
        return (best, 0);
    }
    while t >= params.min_temperature && stagnant < params.max_stagnant_epochs && best_cost > 1e-12 {
        let mut improved = false;
        for _ in 0..params.epoch {
            let Some(mv) = random_move(p, &cur, rng) else { break };
            moves += 1;
            let undo = mv.apply(&mut cur);
            let c = p.evaluate(&cur);
            let delta = c - cur_cost;
            if delta <= 0.0 || rng.gen::<f64>() < (-delta / t).exp() {
                cur_cost = c;
                if c < best_cost - 1e-12 {
                    best_cost = c;
                    best = cur.clone();
                    improved = true;
                }
            } else {
                undo.undo(&mut cur);
            }
        }
        stagnant = if improved { 0 } else { stagnant + 1 };
        t *= params.cooling;
    }
    (best, moves)
}
