//! Generate a model with a real chat-completions endpoint.
//!
//! Needs `MAO_API_KEY`; `MAO_API_BASE` and `MAO_MODEL` are optional.
//!
//! ```text
//! MAO_API_KEY=sk-... cargo run --example http_generate -- "A customer orders a pizza ..."
//! ```

use mao::orchestrator::{run_pipeline, HttpBackend, HttpConfig, PipelineConfig, ENV_API_KEY};

fn main() {
    let config = HttpConfig::from_env();
    if config.api_key.is_none() {
        eprintln!("set {ENV_API_KEY} to run this example");
        std::process::exit(3);
    }
    let requirement = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    let requirement = if requirement.is_empty() {
        "A customer prepares a package. For home pickup the system assigns a courier; otherwise the \
         customer brings it to a mailing point. The courier then delivers the package."
            .to_owned()
    } else {
        requirement
    };
    let mut backend = HttpBackend::new(config);
    match run_pipeline(&requirement, &PipelineConfig::default(), &mut backend) {
        Ok(r) => {
            println!("{}", r.final_text);
            println!("clean: {:?}, messages: {}", r.clean, r.transcript.messages.len());
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    }
}
