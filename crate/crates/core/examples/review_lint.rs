//! Semantic review helpers: deterministic lint, the reviewer prompt, and
//! parsing of reviewer replies.

use mao::dsl::parse;
use mao::lint::{build_review_prompt, categories, deterministic_lint, parse_review_reply, ReviewReply};

fn main() {
    let model = parse(
        r#"<process name="pizza">
  <activity role="customer" action="order pizza" id="a1"/>
  <activity role="customer" action="order pizza" id="a2"/>
  <parallelGateway id="g1">
    <branch><activity role="cook" action="bake" id="a3"/></branch>
    <branch><activity role="cook" action="bake" id="a4"/></branch>
  </parallelGateway>
</process>"#,
    )
    .unwrap();

    let hints = deterministic_lint(&model);
    for h in &hints {
        println!("{}", h.to_line());
    }

    let prompt = build_review_prompt(&model, &categories(), &hints);
    println!("\n--- reviewer prompt ({} chars) ---\n{}", prompt.len(), &prompt[..prompt.len().min(400)]);

    let reply = "SH2 | a1,a2 | the order is placed once; drop a2\nSH1 | a9 | nonsense";
    match parse_review_reply(reply, &model) {
        Ok(ReviewReply::Suggestions { suggestions, warnings }) => {
            println!("\n{} suggestion(s), dropped: {warnings:?}", suggestions.len());
        }
        Ok(ReviewReply::NoIssues) => println!("no issues"),
        Err(e) => println!("{e}"),
    }
    assert_eq!(parse_review_reply("NO_ISSUES", &model), Ok(ReviewReply::NoIssues));
}
