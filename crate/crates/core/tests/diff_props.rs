mod common;

use common::{brute_force_ged, oracle_pair, small_shape};
use mao::diff::{exact_ged, flatten, solve, Algorithm, CostModel, FlatGraph, FlatKind, SolverParams};
use mao::synth::{random_model, ModelShape};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn kinds_preserved(g1: &FlatGraph, g2: &FlatGraph, pairs: &[(String, String)]) -> bool {
    pairs.iter().all(|(a, b)| {
        let (x, y) = (g1.node(a).unwrap(), g2.node(b).unwrap());
        x.kind.class() == y.kind.class()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn self_distance_is_zero(seed in any::<u64>(), solver_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = ModelShape { max_nodes: 12, ..ModelShape::default() };
        let g = flatten(&random_model(&mut rng, shape));
        for alg in Algorithm::ALL {
            let r = solve(&g, &g, &CostModel::default(), alg, &SolverParams::default(), solver_seed).unwrap();
            prop_assert_eq!(r.distance, 0.0, "{}", alg);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn solvers_never_beat_the_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = oracle_pair(&mut rng, 8);
        let (g1, g2) = (flatten(&a), flatten(&b));
        let c = CostModel::default();
        let best = brute_force_ged(&g1, &g2, &c);
        for alg in Algorithm::ALL {
            let r = solve(&g1, &g2, &c, alg, &SolverParams::default(), seed).unwrap();
            prop_assert!(r.distance >= best - 1e-9);
            prop_assert!(kinds_preserved(&g1, &g2, &r.mapping.pairs));
            let sum = r.breakdown.substitution + r.breakdown.deletion + r.breakdown.insertion + r.breakdown.edge;
            prop_assert!((sum - r.distance).abs() < 1e-9);
        }
    }

    #[test]
    fn one_inserted_activity_is_a_bounded_change(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g1 = flatten(&random_model(&mut rng, small_shape()));
        prop_assume!(g1.len() <= 9);
        let mut g2 = g1.clone();
        // Splice a new activity into a random edge.
        let edges: Vec<_> = g2.edges.iter().cloned().collect();
        let (from, to) = edges[rng.gen_range(0..edges.len())].clone();
        g2.edges.remove(&(from.clone(), to.clone()));
        g2.add_node("inserted", FlatKind::Activity("inserted step".into()));
        g2.add_edge(from, "inserted");
        g2.add_edge("inserted", to);
        let c = CostModel::default();
        let d = exact_ged(&g1, &g2, &c).unwrap().distance;
        prop_assert!(d <= c.w_ins + 3.0 * c.w_edge + 1e-9, "distance {}", d);
        prop_assert!(d > 0.0);
    }

    #[test]
    fn results_depend_only_on_inputs_and_seed(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = oracle_pair(&mut rng, 12);
        let (g1, g2) = (flatten(&a), flatten(&b));
        for alg in Algorithm::ALL {
            let x = solve(&g1, &g2, &CostModel::default(), alg, &SolverParams::default(), seed).unwrap();
            let y = solve(&g1, &g2, &CostModel::default(), alg, &SolverParams::default(), seed).unwrap();
            prop_assert_eq!(x, y);
        }
    }
}
