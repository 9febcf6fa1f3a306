//! Graph edit distance between two versions of a model, with every solver
//! and the exact search for comparison.

use mao::diff::{distance_suite, exact_ged, flatten, solve, Algorithm, CostModel, SolverParams};
use mao::dsl::parse;

fn main() {
    let before = parse(
        r#"<process name="claims">
  <activity role="clerk" action="register claim" id="a1"/>
  <exclusiveGateway id="g1">
    <branch condition="small"><activity role="clerk" action="pay out" id="a2"/></branch>
    <branch condition="large"><activity role="assessor" action="inspect damage" id="a3"/></branch>
  </exclusiveGateway>
</process>"#,
    )
    .unwrap();
    let after = parse(
        r#"<process name="claims">
  <activity role="clerk" action="register the claim" id="a1"/>
  <activity role="clerk" action="check policy" id="a5"/>
  <exclusiveGateway id="g1">
    <branch condition="small"><activity role="clerk" action="pay out" id="a2"/></branch>
    <branch condition="large"><activity role="assessor" action="inspect damages" id="a3"/></branch>
  </exclusiveGateway>
</process>"#,
    )
    .unwrap();
    let (g1, g2) = (flatten(&before), flatten(&after));
    let cost = CostModel::default();

    let exact = exact_ged(&g1, &g2, &cost).unwrap();
    println!("exact: {:.4} ({:?})", exact.distance, exact.breakdown);

    let suite = distance_suite(&g1, &g2, &cost, &SolverParams::default(), 42).unwrap();
    for (alg, r) in &suite.results {
        println!("{:<20} {:.4}", alg.name(), r.distance);
    }
    println!("benchmark            {:.4}", suite.benchmark);

    let tabu = solve(&g1, &g2, &cost, "tabu".parse::<Algorithm>().unwrap(), &SolverParams::default(), 7).unwrap();
    println!("\ntabu mapping:");
    for (a, b) in &tabu.mapping.pairs {
        println!("  {a} -> {b}");
    }
}
