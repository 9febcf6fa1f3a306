//! Score the candidates of an evaluation case against its reference and
//! human models.
//!
//! `cargo run --example eval_case -- path/to/case` (defaults to the bundled
//! synthetic case).

use mao::diff::{CostModel, SolverParams};
use mao::eval::{evaluate_case, load_case};

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/eval/synthetic").to_owned()
    });
    let case = load_case(&dir).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(1);
    });
    println!("requirement: {}", case.requirement.trim());
    let report = evaluate_case(&case, &CostModel::default(), &SolverParams::default(), 7).unwrap();
    print!("\n{}", report.to_table());
}
