//! Evaluation of generated models against a reference and human models.
//!
//! A case directory holds `requirement.txt`, `reference.bpmn` or
//! `reference.bpmt`, and optional `humans/` and `candidates/` folders.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{distance_suite, flatten, Algorithm, CostModel, DiffError, FlatGraph, SolverParams};
use crate::dsl;
use crate::interop::{import_xml, ImportError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("missing reference: expected {0}")]
    MissingReference(PathBuf),
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("cannot import {path}: {source}")]
    Import { path: PathBuf, source: ImportError },
    #[error("statistics need at least one value")]
    Empty,
    #[error("surpass proportion needs at least one human distance")]
    NoHumans,
    #[error("distance for {entity}: {source}")]
    Diff { entity: String, source: DiffError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedGraph {
    pub name: String,
    pub graph: FlatGraph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalCase {
    pub id: String,
    pub requirement: String,
    pub reference: FlatGraph,
    pub humans: Vec<NamedGraph>,
    pub candidates: Vec<NamedGraph>,
    /// Import warnings, prefixed with the file they came from.
    pub warnings: Vec<String>,
}

fn read(path: &Path) -> Result<String, EvalError> {
    std::fs::read_to_string(path).map_err(|e| EvalError::Read {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

/// Loads a `.bpmt` or `.bpmn` file as a graph.
pub fn load_graph(path: &Path, warnings: &mut Vec<String>) -> Result<FlatGraph, EvalError> {
    let text = read(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("bpmn") | Some("xml") => {
            let imported = import_xml(&text).map_err(|source| EvalError::Import {
                path: path.to_owned(),
                source,
            })?;
            warnings.extend(
                imported
                    .warnings
                    .iter()
                    .map(|w| format!("{}: {} {}", path.display(), w.element, w.message)),
            );
            Ok(imported.graph)
        }
        _ => {
            let model = dsl::parse(&text).map_err(|errs| EvalError::Parse {
                path: path.to_owned(),
                message: errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "),
            })?;
            let defects = model.structural_check();
            if let Some(d) = defects.first() {
                return Err(EvalError::Parse {
                    path: path.to_owned(),
                    message: d.message.clone(),
                });
            }
            Ok(flatten(&model))
        }
    }
}

fn load_dir(dir: &Path, exts: &[&str], warnings: &mut Vec<String>) -> Result<Vec<NamedGraph>, EvalError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let entries = std::fs::read_dir(dir).map_err(|e| EvalError::Read {
        path: dir.to_owned(),
        message: e.to_string(),
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file() && p.extension().and_then(|e| e.to_str()).is_some_and(|e| exts.contains(&e))
        })
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            Ok(NamedGraph {
                name: p.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
                graph: load_graph(&p, warnings)?,
            })
        })
        .collect()
}

pub fn load_case(dir: impl AsRef<Path>) -> Result<EvalCase, EvalError> {
    let dir = dir.as_ref();
    let mut warnings = Vec::new();
    let requirement_path = dir.join("requirement.txt");
    let requirement = if requirement_path.exists() {
        read(&requirement_path)?
    } else {
        String::new()
    };
    let reference_path = ["reference.bpmn", "reference.bpmt"]
        .iter()
        .map(|n| dir.join(n))
        .find(|p| p.is_file())
        .ok_or_else(|| EvalError::MissingReference(dir.join("reference.bpmn")))?;
    let reference = load_graph(&reference_path, &mut warnings)?;
    let humans = load_dir(&dir.join("humans"), &["bpmn"], &mut warnings)?;
    let candidates = load_dir(&dir.join("candidates"), &["bpmn", "bpmt"], &mut warnings)?;
    let id = dir
        .canonicalize()
        .ok()
        .as_deref()
        .unwrap_or(dir)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "case".into());
    Ok(EvalCase {
        id,
        requirement,
        reference,
        humans,
        candidates,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

pub fn stats(values: &[f64]) -> Result<DistanceStats, EvalError> {
    if values.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    };
    Ok(DistanceStats {
        mean: v.iter().sum::<f64>() / n as f64,
        median,
        min: v[0],
        max: v[n - 1],
    })
}

/// Fraction of humans whose distance is strictly greater than the
/// candidate's. Ties do not count.
pub fn surpass_proportion(candidate: f64, humans: &[f64]) -> Result<f64, EvalError> {
    if humans.is_empty() {
        return Err(EvalError::NoHumans);
    }
    Ok(humans.iter().filter(|&&h| h > candidate).count() as f64 / humans.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityResult {
    pub name: String,
    pub benchmark: f64,
    pub per_algorithm: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surpass: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub case: String,
    pub seed: u64,
    /// Which entities the statistics are over: `humans`, or `candidates`
    /// when the case has no human models.
    pub stats_over: String,
    pub per_algorithm_stats: BTreeMap<String, DistanceStats>,
    pub humans: Vec<EntityResult>,
    pub candidates: Vec<EntityResult>,
    pub warnings: Vec<String>,
}

/// Seed for one entity, independent of evaluation order.
pub fn entity_seed(seed: u64, entity: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in entity.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h
}

pub const BENCHMARK: &str = "benchmark";

fn column(entities: &[EntityResult], key: &str) -> Vec<f64> {
    entities
        .iter()
        .map(|e| if key == BENCHMARK { e.benchmark } else { e.per_algorithm[key] })
        .collect()
}

/// Distances of every human and candidate model to the reference, with
/// summary statistics and surpass proportions.
pub fn evaluate_case(
    case: &EvalCase,
    cost: &CostModel,
    params: &SolverParams,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    let jobs: Vec<(String, &NamedGraph)> = case
        .humans
        .iter()
        .map(|h| (format!("human {}", h.name), h))
        .chain(case.candidates.iter().map(|c| (format!("candidate {}", c.name), c)))
        .collect();
    let outcomes: Vec<Result<EntityResult, EvalError>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(label, entity)| {
                s.spawn(move || {
                    let suite = distance_suite(&entity.graph, &case.reference, cost, params, entity_seed(seed, label))
                        .map_err(|source| EvalError::Diff {
                            entity: label.clone(),
                            source,
                        })?;
                    Ok(EntityResult {
                        name: entity.name.clone(),
                        benchmark: suite.benchmark,
                        per_algorithm: suite
                            .results
                            .iter()
                            .map(|(a, r)| (a.name().to_owned(), r.distance))
                            .collect(),
                        surpass: None,
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("evaluation thread panicked")).collect()
    });
    let mut results = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut candidates = results.split_off(case.humans.len());
    let humans = results;

    let human_benchmarks = column(&humans, BENCHMARK);
    if !humans.is_empty() {
        for c in &mut candidates {
            c.surpass = Some(surpass_proportion(c.benchmark, &human_benchmarks)?);
        }
    }
    let (basis, stats_over) = if humans.is_empty() {
        (&candidates, "candidates")
    } else {
        (&humans, "humans")
    };
    let mut per_algorithm_stats = BTreeMap::new();
    if !basis.is_empty() {
        for key in Algorithm::ALL.iter().map(|a| a.name()).chain([BENCHMARK]) {
            per_algorithm_stats.insert(key.to_owned(), stats(&column(basis, key))?);
        }
    }
    Ok(EvalReport {
        case: case.id.clone(),
        seed,
        stats_over: stats_over.into(),
        per_algorithm_stats,
        humans,
        candidates,
        warnings: case.warnings.clone(),
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text tables: distance statistics, then candidates.
    pub fn to_table(&self) -> String {
        let mut t = String::new();
        let basis_len = if self.stats_over == "humans" { self.humans.len() } else { self.candidates.len() };
        let _ = writeln!(t, "case {} (seed {})", self.case, self.seed);
        let _ = writeln!(t, "distance to reference over {basis_len} {}", self.stats_over);
        let _ = writeln!(t, "{:<20} {:>8} {:>8} {:>8} {:>8}", "algorithm", "mean", "median", "min", "max");
        for key in Algorithm::ALL.iter().map(|a| a.name()).chain([BENCHMARK]) {
            if let Some(s) = self.per_algorithm_stats.get(key) {
                let _ = writeln!(
                    t,
                    "{:<20} {:>8.3} {:>8.3} {:>8.3} {:>8.3}",
                    key, s.mean, s.median, s.min, s.max
                );
            }
        }
        if !self.candidates.is_empty() {
            t.push('\n');
            let _ = writeln!(t, "{:<20} {:>10} {:>8}", "candidate", "benchmark", "surpass");
            for c in &self.candidates {
                let surpass = c.surpass.map_or_else(|| "-".to_owned(), |s| format!("{:.1}%", s * 100.0));
                let _ = writeln!(t, "{:<20} {:>10.3} {:>8}", c.name, c.benchmark, surpass);
            }
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_examples() {
        let s = stats(&[2.0, 4.0, 6.0]).unwrap();
        assert_eq!((s.mean, s.median, s.min, s.max), (4.0, 4.0, 2.0, 6.0));
        assert_eq!(stats(&[1.0, 2.0, 3.0, 4.0]).unwrap().median, 2.5);
        let s = stats(&[5.0]).unwrap();
        assert_eq!((s.mean, s.median, s.min, s.max), (5.0, 5.0, 5.0, 5.0));
        assert_eq!(stats(&[]), Err(EvalError::Empty));
    }

    #[test]
    fn surpass_examples() {
        let h = [2.0, 4.0, 6.0];
        assert!((surpass_proportion(3.0, &h).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(surpass_proportion(1.0, &h).unwrap(), 1.0);
        assert_eq!(surpass_proportion(6.0, &h).unwrap(), 0.0);
        assert_eq!(surpass_proportion(1.0, &[]), Err(EvalError::NoHumans));
    }
}
