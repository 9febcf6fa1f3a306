//! Acceptance run: one PASS/FAIL line per criterion, with timings.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use common::{approx, brute_force_ged, oracle_pair, small_shape};
use mao::diff::{exact_ged, flatten, solve, Algorithm, CostModel, SolverParams};
use mao::dsl::{parse, serialize};
use mao::eval::{evaluate_case, load_case};
use mao::interop::{export_xml, import_xml};
use mao::orchestrator::{
    run_pipeline, Phase, PipelineConfig, ReplayBackend, ReplayEntry, ReviewOutcome, Role, Transcript,
};
use mao::synth::{random_model, ModelShape};
use mao::validator::validate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn fixtures(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn dsl_round_trip() -> Outcome {
    let start = Instant::now();
    let n = 1000;
    for seed in 0..n {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed), ModelShape::default());
        let text = serialize(&m).map_err(|e| format!("seed {seed}: {e}"))?;
        let back = parse(&text).map_err(|e| format!("seed {seed}: {}", e[0]))?;
        ensure(back == m, || format!("seed {seed}: parse(serialize(m)) != m"))?;
        let again = serialize(&back).map_err(|e| e.to_string())?;
        ensure(again == text, || format!("seed {seed}: canonical form not idempotent"))?;
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("{n} models, 0 failures"))
}

fn corpus(sub: &str) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(fixtures(&format!("validator/{sub}")))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
}

fn validator_corpus() -> Outcome {
    let faults = corpus("fault");
    let clean = corpus("clean");
    ensure(faults.len() >= 20 && clean.len() >= 20, || {
        format!("corpus too small: {} faults, {} clean", faults.len(), clean.len())
    })?;
    for f in &faults {
        let stem = f.file_stem().unwrap().to_string_lossy();
        let expected = stem.split('_').next().unwrap();
        let report = validate(&std::fs::read_to_string(f).unwrap());
        let mut codes = report.rule_codes();
        codes.dedup();
        ensure(codes == [expected], || format!("{stem}: flagged {codes:?}"))?;
    }
    for f in &clean {
        let report = validate(&std::fs::read_to_string(f).unwrap());
        ensure(report.violations.is_empty(), || {
            format!("{}: false positive {:?}", f.display(), report.rule_codes())
        })?;
    }
    Ok(format!("{} single-fault fixtures exact, {} clean without findings", faults.len(), clean.len()))
}

fn ged_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cost = CostModel::default();
    let params = SolverParams::default();
    let n = 50;
    let mut hits = [0usize; 4];
    for i in 0..n {
        let (a, b) = oracle_pair(&mut rng, 8);
        let (g1, g2) = (flatten(&a), flatten(&b));
        let exact = exact_ged(&g1, &g2, &cost).map_err(|e| e.to_string())?.distance;
        let oracle = brute_force_ged(&g1, &g2, &cost);
        ensure(approx(exact, oracle), || format!("pair {i}: exact {exact} vs enumeration {oracle}"))?;
        for (k, alg) in Algorithm::ALL.iter().enumerate() {
            let d = solve(&g1, &g2, &cost, *alg, &params, i).map_err(|e| e.to_string())?.distance;
            ensure(d >= exact - 1e-9, || format!("pair {i}: {alg} {d} below exact {exact}"))?;
            if *alg == Algorithm::Greedy {
                ensure(d <= 1.5 * exact + 1e-9, || format!("pair {i}: greedy {d} > 1.5 x {exact}"))?;
            }
            hits[k] += usize::from(approx(d, exact));
        }
    }
    for (k, alg) in Algorithm::ALL.iter().enumerate() {
        if *alg != Algorithm::Greedy {
            ensure(hits[k] * 10 >= n as usize * 9, || format!("{alg} exact on {}/{n}", hits[k]))?;
        }
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    let summary: Vec<String> = Algorithm::ALL
        .iter()
        .zip(hits)
        .map(|(a, h)| format!("{a} {h}/{n}"))
        .collect();
    Ok(summary.join(", "))
}

fn ged_metric_properties() -> Outcome {
    let cost = CostModel::default();
    let params = SolverParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 200;
    for i in 0..n {
        let g = flatten(&random_model(&mut rng, ModelShape::default()));
        for alg in Algorithm::ALL {
            let d = solve(&g, &g, &cost, alg, &params, i).map_err(|e| e.to_string())?.distance;
            ensure(d == 0.0, || format!("model {i}: {alg} gives d(g,g) = {d}"))?;
        }
    }
    let mut pairs = 0;
    for _ in 0..50 {
        let (a, b) = oracle_pair(&mut rng, 8);
        let (g1, g2) = (flatten(&a), flatten(&b));
        let ab = exact_ged(&g1, &g2, &cost).unwrap().distance;
        let ba = exact_ged(&g2, &g1, &cost).unwrap().distance;
        ensure((ab - ba).abs() <= 1e-9, || format!("asymmetric: {ab} vs {ba}"))?;
        for alg in Algorithm::ALL {
            let x = solve(&g1, &g2, &cost, alg, &params, 99).unwrap().to_json();
            let y = solve(&g1, &g2, &cost, alg, &params, 99).unwrap().to_json();
            ensure(x == y, || format!("{alg} not deterministic"))?;
        }
        pairs += 1;
    }
    Ok(format!("d(g,g)=0 on {n} models x 4 solvers; symmetry and determinism on {pairs} pairs"))
}

fn requirement() -> String {
    std::fs::read_to_string(fixtures("pipeline/requirement.txt")).unwrap()
}

fn replay_run(cfg: &PipelineConfig) -> Result<mao::orchestrator::PipelineResult, String> {
    let mut b = ReplayBackend::from_path(fixtures("pipeline/replay.jsonl")).map_err(|e| e.to_string())?;
    run_pipeline(&requirement(), cfg, &mut b).map_err(|e| e.to_string())
}

fn phase_sequence(t: &Transcript) -> Vec<Phase> {
    let mut seq: Vec<Phase> = t.messages.iter().map(|m| m.phase).collect();
    seq.dedup();
    seq
}

fn pipeline_golden() -> Outcome {
    let golden = std::fs::read_to_string(fixtures("pipeline/final.bpmt")).unwrap();
    let r = replay_run(&PipelineConfig::default())?;
    ensure(r.final_text == golden, || "model.bpmt differs from golden".into())?;
    ensure(replay_run(&PipelineConfig::default())?.to_json() == r.to_json(), || "replay not byte-identical".into())?;
    ensure(phase_sequence(&r.transcript) == Phase::ALL, || {
        format!("phase sequence {:?}", phase_sequence(&r.transcript))
    })?;
    let review = r.reports.reviewing.as_ref().ok_or("no reviewing log")?;
    ensure(review.rounds.len() == 2 && review.outcome == ReviewOutcome::NoIssues, || {
        format!("reviewing: {} rounds, {:?}", review.rounds.len(), review.outcome)
    })?;
    let testing = r.reports.testing.as_ref().ok_or("no testing log")?;
    ensure(testing.fix_turns == 0 && testing.reports.len() == 1, || "testing rounds differ from script".into())?;

    for off in [Phase::Refinement, Phase::Reviewing, Phase::Testing] {
        let a = replay_run(&PipelineConfig::default().without(off))?;
        let expected: Vec<Phase> = Phase::ALL.into_iter().filter(|p| *p != off).collect();
        ensure(phase_sequence(&a.transcript) == expected, || {
            format!("{off} off: phases {:?}", phase_sequence(&a.transcript))
        })?;
        for p in Phase::ALL.into_iter().filter(|p| *p < off) {
            let x: Vec<_> = a.transcript.in_phase(p).map(|m| &m.content).collect();
            let y: Vec<_> = r.transcript.in_phase(p).map(|m| &m.content).collect();
            ensure(x == y, || format!("{off} off changed {p} messages"))?;
        }
    }
    Ok("golden model.bpmt, Generation>Refinement>Reviewing>Testing, 2 review rounds, 3 ablations".into())
}

const ONE_BRANCH: &str = r#"<process name="dispatch"><parallelGateway id="g1"><branch><activity role="clerk" action="print label" id="a1"/></branch></parallelGateway></process>"#;
const ONE_BRANCH_B: &str = r#"<process name="dispatch"><parallelGateway id="g1"><branch><activity role="clerk" action="print the label" id="a1"/></branch></parallelGateway></process>"#;
const FIXED: &str = r#"<process name="dispatch"><parallelGateway id="g1"><branch><activity role="clerk" action="print the label" id="a1"/></branch><branch><activity role="clerk" action="book the courier" id="a2"/></branch></parallelGateway></process>"#;

fn repair_loops() -> Outcome {
    let cfg = PipelineConfig::default();
    let script = [
        ReplayEntry::new(Phase::Generation, ONE_BRANCH),
        ReplayEntry::new(Phase::Refinement, ONE_BRANCH),
        ReplayEntry::new(Phase::Reviewing, "SH1 | a1 | the label text should say what is printed"),
        ReplayEntry::new(Phase::Reviewing, ONE_BRANCH_B),
        ReplayEntry::new(Phase::Reviewing, "NO_ISSUES"),
        ReplayEntry::new(Phase::Testing, ONE_BRANCH_B),
        ReplayEntry::new(Phase::Testing, FIXED),
    ];
    let mut b = ReplayBackend::new(script);
    let r = run_pipeline("Dispatch: print a label and book a courier in parallel.", &cfg, &mut b)
        .map_err(|e| e.to_string())?;
    let testing = r.reports.testing.as_ref().ok_or("no testing log")?;
    let first = testing.reports.first().ok_or("no reports")?;
    ensure(first.rule_codes() == ["C2"], || format!("first report {:?}", first.rule_codes()))?;
    ensure(r.clean == Some(true), || "final text not clean".into())?;
    ensure(testing.fix_turns <= cfg.max_test_rounds, || "test cap exceeded".into())?;
    let review = r.reports.reviewing.as_ref().ok_or("no reviewing log")?;
    ensure(review.outcome == ReviewOutcome::NoIssues, || format!("review ended {:?}", review.outcome))?;
    let reviewer_turns = r.transcript.turns(Phase::Reviewing, Role::ProcessReviewer);
    ensure(reviewer_turns as u32 <= cfg.max_review_rounds, || "review cap exceeded".into())?;
    let fix_turns = r.transcript.turns(Phase::Testing, Role::ProcessDesignExpert);
    ensure(fix_turns as u32 == testing.fix_turns, || "transcript and log disagree on fix turns".into())?;

    let stubborn = std::iter::once(ReplayEntry::new(Phase::Generation, ONE_BRANCH))
        .chain([ONE_BRANCH; 8].map(|t| ReplayEntry::new(Phase::Testing, t)));
    let mut b = ReplayBackend::new(stubborn);
    let only_testing = cfg.clone().without(Phase::Refinement).without(Phase::Reviewing);
    let capped = run_pipeline("x", &only_testing, &mut b).map_err(|e| e.to_string())?;
    let log = capped.reports.testing.as_ref().ok_or("no testing log")?;
    ensure(log.fix_turns == cfg.max_test_rounds && capped.clean == Some(false), || {
        format!("stubborn expert: {} fix turns, clean {:?}", log.fix_turns, capped.clean)
    })?;
    ensure(b.remaining() == 8 - cfg.max_test_rounds as usize, || "extra fix turns consumed".into())?;
    Ok(format!(
        "C2 repaired in {} fix turn(s); reviewing ended on NO_ISSUES after {reviewer_turns} round(s); caps held",
        testing.fix_turns
    ))
}

fn interop_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cost = CostModel::default();
    let mut n = 0;
    while n < 100 {
        let m = random_model(&mut rng, small_shape());
        let g = flatten(&m);
        if g.len() > 10 {
            continue;
        }
        let xml = export_xml(&m).map_err(|e| e.to_string())?;
        let imported = import_xml(&xml).map_err(|e| e.to_string())?;
        let d = exact_ged(&imported.graph, &g, &cost).map_err(|e| e.to_string())?.distance;
        ensure(d == 0.0, || format!("model {n}: distance {d} after round trip"))?;
        n += 1;
    }
    Ok(format!("{n} models isomorphic after export/import"))
}

fn eval_harness() -> Outcome {
    let start = Instant::now();
    let case = load_case(fixtures("eval/synthetic")).map_err(|e| e.to_string())?;
    let cost = CostModel::default();
    let oracle: Vec<f64> = case.humans.iter().map(|h| brute_force_ged(&h.graph, &case.reference, &cost)).collect();
    ensure(oracle == [2.0, 4.0, 6.0], || format!("oracle human distances {oracle:?}"))?;
    let report = evaluate_case(&case, &cost, &SolverParams::default(), 7).map_err(|e| e.to_string())?;
    for (alg, s) in &report.per_algorithm_stats {
        ensure(s.mean == 4.0 && s.median == 4.0 && s.min == 2.0 && s.max == 6.0, || format!("{alg}: {s:?}"))?;
    }
    let c = report.candidates.iter().find(|c| c.name == "mao").ok_or("candidate missing")?;
    ensure(c.benchmark == 3.0 && c.surpass == Some(2.0 / 3.0), || {
        format!("candidate benchmark {} surpass {:?}", c.benchmark, c.surpass)
    })?;
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok("humans [2,4,6] -> mean 4, median 4; candidate 3 -> surpass 2/3".into())
}

enum Live {
    Ran(Outcome),
    Skipped(&'static str),
}

fn live_backend() -> Live {
    if std::env::var("MAO_LIVE_TEST").as_deref() != Ok("1") || std::env::var("MAO_API_KEY").is_err() {
        return Live::Skipped("network-gated; set MAO_LIVE_TEST=1 and MAO_API_KEY");
    }
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_mao"))
        .args(["generate", "--backend", "http", "--out"])
        .arg(dir.path())
        .arg("-r")
        .arg(fixtures("pipeline/requirement.txt"))
        .output()
        .unwrap();
    Live::Ran(match out.status.code() {
        Some(0) => {
            let t = Transcript::from_jsonl(&std::fs::read_to_string(dir.path().join("transcript.jsonl")).unwrap())
                .unwrap();
            ensure(phase_sequence(&t) == Phase::ALL, || format!("phases {:?}", phase_sequence(&t)))
                .map(|_| "all phases ran, final text clean".into())
        }
        code => Err(format!("exit {code:?}: {}", String::from_utf8_lossy(&out.stderr))),
    })
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("dsl round trip", dsl_round_trip),
        ("validator corpus", validator_corpus),
        ("ged oracle equivalence", ged_oracle_equivalence),
        ("ged metric properties", ged_metric_properties),
        ("pipeline golden run", pipeline_golden),
        ("hallucination repair loops", repair_loops),
        ("xml interop round trip", interop_round_trip),
        ("eval harness", eval_harness),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let t = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name:<28} {t:>7.2}s  {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<28} {t:>7.2}s  {why}");
            }
        }
    }
    let start = Instant::now();
    match live_backend() {
        Live::Skipped(why) => println!("SKIP  {:<28} {:>7.2}s  {why}", "live backend smoke", 0.0),
        Live::Ran(Ok(d)) => println!("PASS  {:<28} {:>7.2}s  {d}", "live backend smoke", start.elapsed().as_secs_f64()),
        Live::Ran(Err(e)) => {
            failed += 1;
            println!("FAIL  {:<28} {:>7.2}s  {e}", "live backend smoke", start.elapsed().as_secs_f64());
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
