//! Run the four-phase pipeline against scripted replies, print the
//! transcript, then run it again with reviewing switched off.

use mao::orchestrator::{run_pipeline, Phase, PipelineConfig, ReplayBackend};

fn fixtures() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/pipeline")
}

fn main() {
    let requirement = std::fs::read_to_string(fixtures().join("requirement.txt")).unwrap();
    let mut backend = ReplayBackend::from_path(fixtures().join("replay.jsonl")).unwrap();
    let result = run_pipeline(&requirement, &PipelineConfig::default(), &mut backend).expect("scripted run succeeds");

    for m in &result.transcript.messages {
        let first = m.content.lines().next().unwrap_or("");
        println!("[{:>2}] {:<10} {:?} -> {:?}: {first}", m.index, m.phase, m.speaker, m.to);
    }
    println!("\nclean: {:?}\n{}", result.clean, result.final_text);

    let mut backend = ReplayBackend::from_path(fixtures().join("replay.jsonl")).unwrap();
    let ablated = run_pipeline(&requirement, &PipelineConfig::default().without(Phase::Reviewing), &mut backend).unwrap();
    println!(
        "without reviewing: {} messages instead of {}",
        ablated.transcript.messages.len(),
        result.transcript.messages.len()
    );
}
