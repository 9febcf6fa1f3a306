use mao::diff::{exact_ged, flatten, CostModel, LabelSimilarity};
use mao::dsl::parse;

fn main() {
    let a = parse(r#"<process name="p"><activity role="r" action="approve invoice" id="a1"/></process>"#).unwrap();
    let b = parse(r#"<process name="p"><activity role="r" action="approve invoices" id="a1"/></process>"#).unwrap();
    let (g1, g2) = (flatten(&a), flatten(&b));

    for (name, cost) in [
        ("levenshtein", CostModel::default()),
        ("exact labels", CostModel { similarity: LabelSimilarity::Exact, ..CostModel::default() }),
        ("cheap edges", CostModel { w_edge: 0.1, ..CostModel::default() }),
    ] {
        let r = exact_ged(&g1, &g2, &cost).unwrap();
        println!("{name:<14} {:.4}  {:?}", r.distance, r.breakdown);
    }
}
