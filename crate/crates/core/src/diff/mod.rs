//! Graph edit distance between process models.
//!
//! Models are flattened into typed graphs and compared under a [`CostModel`].
//! [`exact_ged`] finds the optimum for small graphs; [`solve`] runs one of
//! four heuristics on graphs of any size.

mod anneal;
mod ants;
mod cost;
mod exact;
mod graph;
mod greedy;
mod moves;
mod tabu;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anneal::AnnealParams;
pub use ants::AntParams;
pub use cost::{CostBreakdown, CostModel, LabelSimilarity};
pub use graph::{flatten, flatten_detailed, FlatGraph, FlatKind, FlatNode, Flattened, Flow, GraphError, KindClass};
pub use tabu::TabuParams;

use cost::{Mapping, Problem};

/// Largest graph (in nodes) accepted by [`exact_ged`].
pub const EXACT_CAP: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiffError {
    #[error("exact search is limited to {cap} nodes per graph, got {n1} and {n2}")]
    SizeExceeded { n1: usize, n2: usize, cap: usize },
    #[error("unknown algorithm `{0}` (expected greedy, tabu, ants or sa)")]
    UnknownAlgorithm(String),
    #[error("mapping refers to unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` is mapped more than once")]
    NotInjective(String),
    #[error("cannot map `{0}` to `{1}`: node kinds differ")]
    KindMismatch(String, String),
    #[error("weight {0} must be a finite non-negative number, got {1}")]
    BadWeight(&'static str, f64),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("edge ({0}, {1}) references a missing node")]
    DanglingEdge(String, String),
}

/// Injective, kind-preserving partial node map from the first graph to the
/// second, as `(id1, id2)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EditMapping {
    pub pairs: Vec<(String, String)>,
}

impl EditMapping {
    pub fn new<I, A, B>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        Self {
            pairs: pairs.into_iter().map(|(a, b)| (a.into(), b.into())).collect(),
        }
    }

    pub fn get(&self, id1: &str) -> Option<&str> {
        self.pairs.iter().find(|(a, _)| a == id1).map(|(_, b)| b.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    Greedy,
    TabuSearch,
    Ants,
    SimulatedAnnealing,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Greedy,
        Algorithm::TabuSearch,
        Algorithm::Ants,
        Algorithm::SimulatedAnnealing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Greedy => "Greedy",
            Algorithm::TabuSearch => "TabuSearch",
            Algorithm::Ants => "Ants",
            Algorithm::SimulatedAnnealing => "SimulatedAnnealing",
        }
    }

    /// Mixed into the seed so every solver has its own random stream.
    fn tag(self) -> u64 {
        match self {
            Algorithm::Greedy => 0x4752_4545_4459_0001,
            Algorithm::TabuSearch => 0x5441_4255_0000_0002,
            Algorithm::Ants => 0x414e_5453_0000_0003,
            Algorithm::SimulatedAnnealing => 0x5341_0000_0000_0004,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = DiffError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "greedy" => Algorithm::Greedy,
            "tabu" | "tabusearch" | "ts" => Algorithm::TabuSearch,
            "ants" | "ant" | "aco" | "antcolony" => Algorithm::Ants,
            "sa" | "anneal" | "annealing" | "simulatedannealing" => Algorithm::SimulatedAnnealing,
            _ => return Err(DiffError::UnknownAlgorithm(s.to_owned())),
        })
    }
}

/// Tunables for the heuristic solvers.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolverParams {
    pub tabu: TabuParams,
    pub anneal: AnnealParams,
    pub ants: AntParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffResult {
    pub distance: f64,
    pub algorithm: String,
    pub seed: u64,
    pub iterations: u64,
    pub breakdown: CostBreakdown,
    pub mapping: EditMapping,
}

impl DiffResult {
    fn from_mapping(p: &Problem<'_>, m: &Mapping, algorithm: &str, seed: u64, iterations: u64) -> Self {
        let breakdown = p.breakdown(m);
        Self {
            distance: breakdown.total(),
            algorithm: algorithm.to_owned(),
            seed,
            iterations,
            breakdown,
            mapping: EditMapping { pairs: p.pairs(m) },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diff result serializes")
    }
}

fn to_indexed(p: &Problem<'_>, mapping: &EditMapping) -> Result<Mapping, DiffError> {
    let mut m = Mapping::empty(p.n1, p.n2);
    for (a, b) in &mapping.pairs {
        let u = p.g1.index_of(a).ok_or_else(|| DiffError::UnknownNode(a.clone()))?;
        let v = p.g2.index_of(b).ok_or_else(|| DiffError::UnknownNode(b.clone()))?;
        if m.target(u).is_some() {
            return Err(DiffError::NotInjective(a.clone()));
        }
        if !m.is_free2(v) {
            return Err(DiffError::NotInjective(b.clone()));
        }
        if p.sub(u, v).is_none() {
            return Err(DiffError::KindMismatch(a.clone(), b.clone()));
        }
        m.set(u, v);
    }
    Ok(m)
}

/// Cost of a given mapping between two graphs.
pub fn mapping_cost(
    g1: &FlatGraph,
    g2: &FlatGraph,
    mapping: &EditMapping,
    cost: &CostModel,
) -> Result<DiffResult, DiffError> {
    let p = Problem::new(g1, g2, *cost)?;
    let m = to_indexed(&p, mapping)?;
    Ok(DiffResult::from_mapping(&p, &m, "mapping", 0, 0))
}

/// Minimum edit distance by branch and bound. Limited to [`EXACT_CAP`]
/// nodes per graph.
pub fn exact_ged(g1: &FlatGraph, g2: &FlatGraph, cost: &CostModel) -> Result<DiffResult, DiffError> {
    if g1.len() > EXACT_CAP || g2.len() > EXACT_CAP {
        return Err(DiffError::SizeExceeded {
            n1: g1.len(),
            n2: g2.len(),
            cap: EXACT_CAP,
        });
    }
    let p = Problem::new(g1, g2, *cost)?;
    let (start, _) = greedy::solve(&p);
    let (m, expanded) = exact::solve(&p, start);
    Ok(DiffResult::from_mapping(&p, &m, "Exact", 0, expanded))
}

/// Runs one heuristic solver. The same inputs and seed always give the same
/// result.
pub fn solve(
    g1: &FlatGraph,
    g2: &FlatGraph,
    cost: &CostModel,
    algorithm: Algorithm,
    params: &SolverParams,
    seed: u64,
) -> Result<DiffResult, DiffError> {
    let p = Problem::new(g1, g2, *cost)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ algorithm.tag());
    let (m, iterations) = match algorithm {
        Algorithm::Greedy => greedy::solve(&p),
        Algorithm::TabuSearch => {
            let (start, _) = greedy::solve(&p);
            tabu::solve(&p, start, params.tabu)
        }
        Algorithm::SimulatedAnnealing => {
            let (start, _) = greedy::solve(&p);
            anneal::solve(&p, start, params.anneal, &mut rng)
        }
        Algorithm::Ants => {
            let (start, _) = greedy::solve(&p);
            ants::solve(&p, start, params.ants, &mut rng)
        }
    };
    Ok(DiffResult::from_mapping(&p, &m, algorithm.name(), seed, iterations))
}

/// Results of all four solvers and their mean distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub results: BTreeMap<Algorithm, DiffResult>,
    pub benchmark: f64,
}

impl SuiteResult {
    pub fn to_json(&self) -> String {
        let results: BTreeMap<&str, &DiffResult> =
            self.results.iter().map(|(a, r)| (a.name(), r)).collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "benchmark": self.benchmark,
            "results": results,
        }))
        .expect("suite result serializes")
    }
}

/// Runs the four solvers concurrently and averages their distances.
pub fn distance_suite(
    g1: &FlatGraph,
    g2: &FlatGraph,
    cost: &CostModel,
    params: &SolverParams,
    seed: u64,
) -> Result<SuiteResult, DiffError> {
    Problem::new(g1, g2, *cost)?;
    let outcomes: Vec<Result<DiffResult, DiffError>> = std::thread::scope(|s| {
        let handles: Vec<_> = Algorithm::ALL
            .iter()
            .map(|&a| s.spawn(move || solve(g1, g2, cost, a, params, seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });
    let mut results = BTreeMap::new();
    for (a, r) in Algorithm::ALL.iter().zip(outcomes) {
        results.insert(*a, r?);
    }
    let benchmark = results.values().map(|r| r.distance).sum::<f64>() / results.len() as f64;
    Ok(SuiteResult { results, benchmark })
}
