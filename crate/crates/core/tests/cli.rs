use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mao::diff::{exact_ged, CostModel};
use mao::dsl::serialize;
use mao::interop::import_xml;
use mao::orchestrator::{Phase, Transcript};
use mao::synth::{random_model, ModelShape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

fn mao(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mao"))
        .args(args)
        .env_remove("MAO_API_KEY")
        .env_remove("MAO_API_BASE")
        .env_remove("MAO_MODEL")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(out: &Path, extra: &[&str]) -> Output {
    let req = fixture("pipeline/requirement.txt");
    let replay = fixture("pipeline/replay.jsonl");
    let mut args = vec!["generate", "-r", s(&req), "--backend", "replay", "--replay", s(&replay), "--out", s(out)];
    args.extend_from_slice(extra);
    mao(&args)
}

#[test]
fn generate_with_replay_matches_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = generate(dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let read = |n: &str| std::fs::read_to_string(dir.path().join(n)).unwrap();
    assert_eq!(read("model.bpmt"), std::fs::read_to_string(fixture("pipeline/final.bpmt")).unwrap());
    assert_eq!(read("model.bpmn"), std::fs::read_to_string(fixture("pipeline/final.bpmn")).unwrap());
    let report: serde_json::Value = serde_json::from_str(&read("report.json")).unwrap();
    assert_eq!(report["clean"], true);
    let t = Transcript::from_jsonl(&read("transcript.jsonl")).unwrap();
    for phase in Phase::ALL {
        assert!(t.in_phase(phase).count() > 0);
    }

    let again = tempfile::tempdir().unwrap();
    generate(again.path(), &[]);
    for n in ["model.bpmt", "model.bpmn", "transcript.jsonl", "report.json"] {
        assert_eq!(read(n), std::fs::read_to_string(again.path().join(n)).unwrap(), "{n}");
    }
}

#[test]
fn phase_flags_remove_their_messages() {
    for (flag, phase) in [
        ("--no-refinement", Phase::Refinement),
        ("--no-reviewing", Phase::Reviewing),
        ("--no-testing", Phase::Testing),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let o = generate(dir.path(), &[flag]);
        assert_eq!(o.status.code(), Some(0), "{flag}: {}", stderr(&o));
        let t = Transcript::from_jsonl(&std::fs::read_to_string(dir.path().join("transcript.jsonl")).unwrap()).unwrap();
        assert_eq!(t.in_phase(phase).count(), 0, "{flag}");
        assert!(t.in_phase(Phase::Generation).count() > 0);
    }
}

#[test]
fn http_backend_without_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = mao(&["generate", "-r", "ship parcels", "--backend", "http", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("MAO_API_KEY"), "{}", stderr(&o));
    assert!(!dir.path().join("model.bpmt").exists());
}

#[test]
fn exhausted_script_is_a_pipeline_failure() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("short.jsonl");
    std::fs::write(
        &script,
        "{\"phase\":\"generation\",\"content\":\"<process name=\\\"p\\\"><activity role=\\\"r\\\" action=\\\"x\\\" id=\\\"a1\\\"/></process>\"}\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = mao(&["generate", "-r", "x", "--backend", "replay", "--replay", s(&script), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(out.join("transcript.jsonl").exists());
}

#[test]
fn validate_exit_codes() {
    let o = mao(&["validate", s(&fixture("pipeline/final.bpmt"))]);
    assert_eq!(o.status.code(), Some(0));
    let o = mao(&["validate", s(&fixture("validator/fault/C2_exclusive_single_branch.bpmt"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("C2"));
    let o = mao(&["validate", "--json", s(&fixture("validator/fault/C2_exclusive_single_branch.bpmt"))]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["violations"][0]["rule"], "C2");
    assert_eq!(mao(&["validate", "/no/such/file.bpmt"]).status.code(), Some(3));
}

#[test]
fn diff_commands() {
    let m = fixture("pipeline/final.bpmt");
    let o = mao(&["diff", s(&m), s(&m)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["benchmark"], 0.0);
    for (_, r) in v["results"].as_object().unwrap() {
        assert_eq!(r["distance"], 0.0);
    }

    let xml = fixture("pipeline/final.bpmn");
    let a = mao(&["diff", s(&m), s(&xml), "--algo", "tabu", "--seed", "42"]);
    let b = mao(&["diff", s(&m), s(&xml), "--algo", "tabu", "--seed", "42"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).contains("\"seed\": 42"));

    let dir = tempfile::tempdir().unwrap();
    let big = dir.path().join("big.bpmt");
    let shape = ModelShape { max_depth: 2, max_nodes: 30, exotic_text: false };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let model = std::iter::repeat_with(|| random_model(&mut rng, shape))
        .find(|m| mao::diff::flatten(m).len() >= 30)
        .unwrap();
    std::fs::write(&big, serialize(&model).unwrap()).unwrap();
    let o = mao(&["diff", "--exact", s(&big), s(&big)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("limited to 10 nodes"), "{}", stderr(&o));

    let o = mao(&["diff", "--exact", s(&m), s(&xml), "--w-edge", "-1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn convert_commands() {
    let dir = tempfile::tempdir().unwrap();
    let src = fixture("pipeline/final.bpmt");
    let xml = dir.path().join("m.bpmn");
    let o = mao(&["convert", s(&src), "--to", "bpmn", "-o", s(&xml)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let model = mao::dsl::parse(&std::fs::read_to_string(&src).unwrap()).unwrap();
    let imported = import_xml(&std::fs::read_to_string(&xml).unwrap()).unwrap();
    let g = mao::diff::flatten(&model);
    assert_eq!(imported.graph, g);

    let messy = dir.path().join("messy.bpmt");
    std::fs::write(&messy, "<process   name='p'><activity id='a1' action='ship' role='clerk'></activity></process>").unwrap();
    let o = mao(&["convert", s(&messy), "--to", "bpmt"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "<process name=\"p\">\n  <activity role=\"clerk\" action=\"ship\" id=\"a1\"/>\n</process>\n"
    );

    let back = mao(&["convert", s(&xml), "--to", "bpmt"]);
    assert_eq!(stdout(&back), std::fs::read_to_string(&src).unwrap());

    let cyclic = dir.path().join("loop.bpmn");
    std::fs::write(
        &cyclic,
        r#"<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL"><process id="P">
<startEvent id="s"/><exclusiveGateway id="j"/><task id="a" name="A"/><exclusiveGateway id="x"/><endEvent id="e"/>
<sequenceFlow id="1" sourceRef="s" targetRef="j"/><sequenceFlow id="2" sourceRef="j" targetRef="a"/>
<sequenceFlow id="3" sourceRef="a" targetRef="x"/><sequenceFlow id="4" sourceRef="x" targetRef="j"/>
<sequenceFlow id="5" sourceRef="x" targetRef="e"/></process></definitions>"#,
    )
    .unwrap();
    let o = mao(&["convert", s(&cyclic), "--to", "bpmt"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("not block-structured"), "{}", stderr(&o));
    let d = exact_ged(&imported.graph, &g, &CostModel::default()).unwrap();
    assert_eq!(d.distance, 0.0);
}

#[test]
fn eval_report_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let o = mao(&["eval", s(&fixture("eval/synthetic")), "--seed", "7", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert_eq!(report, std::fs::read_to_string(fixture("eval/synthetic_report.json")).unwrap());
    assert!(stdout(&o).contains("66.7%"));
    assert_eq!(std::fs::read_to_string(dir.path().join("report.txt")).unwrap().trim_end(), stdout(&o).trim_end());

    let again = tempfile::tempdir().unwrap();
    mao(&["eval", s(&fixture("eval/synthetic")), "--seed", "7", "--out", s(again.path())]);
    assert_eq!(report, std::fs::read_to_string(again.path().join("report.json")).unwrap());
}

#[test]
fn eval_layout_errors_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let o = mao(&["eval", s(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("reference"), "{}", stderr(&o));
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(mao(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(mao(&["convert", "x.bpmt", "--to", "pdf"]).status.code(), Some(3));
    assert_eq!(mao(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_and_verbose_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mao.toml");
    std::fs::write(&cfg, format!("backend = \"replay\"\nreplay = {:?}\nseed = 11\n", s(&fixture("pipeline/replay.jsonl")))).unwrap();
    let out = dir.path().join("out");
    let req = fixture("pipeline/requirement.txt");
    let o = mao(&["--config", s(&cfg), "-v", "generate", "-r", s(&req), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("backend = \"replay\""));
    assert!(stderr(&o).contains("seed = 11"));
}
