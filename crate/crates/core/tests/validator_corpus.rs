use std::path::{Path, PathBuf};

use mao::validator::{render_report, validate, ReportFormat};

fn corpus(sub: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/validator").join(sub);
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
}

#[test]
fn each_fault_is_flagged_with_its_rule_only() {
    let files = corpus("fault");
    assert!(files.len() >= 20);
    let mut failures = Vec::new();
    for f in &files {
        let stem = f.file_stem().unwrap().to_str().unwrap();
        let expected = stem.split('_').next().unwrap();
        let report = validate(&std::fs::read_to_string(f).unwrap());
        let mut codes = report.rule_codes();
        codes.dedup();
        if codes != [expected] {
            failures.push(format!("{stem}: {codes:?}\n{}", render_report(&report, ReportFormat::Human)));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn clean_models_have_no_findings() {
    let files = corpus("clean");
    assert!(files.len() >= 20);
    for f in &files {
        let report = validate(&std::fs::read_to_string(f).unwrap());
        assert!(
            report.violations.is_empty() && report.clean,
            "{}: {}",
            f.display(),
            render_report(&report, ReportFormat::Human)
        );
    }
}
