//! Check BPMN text for format hallucinations and print both report forms.
//! Extra pattern rules can be added to the registry as JSON.

use mao::validator::{render_report, ConstraintRegistry, ReportFormat, ValidateOptions, Validator};

const FAULTY: &str = r#"<process name="loan">
  <activity role="officer" action="check credit" id="a1"/>
  <exclusiveGateway id="g1">
    <branch condition="score above 700">
      <activity role="officer" action="approve loan" id="a2"/>
    </branch>
  </exclusiveGateway>
  <task id="t1" name="archive"/>
</process>"#;

const EXTRA: &str = r#"[{
  "code": "X1",
  "description": "Activity ids start with the letter a.",
  "severity": "Warning",
  "suggestion": "rename the id to a1, a2, ...",
  "check": {"kind": "attribute_pattern", "element": "activity", "attribute": "id", "pattern": "^a"}
}]"#;

fn main() {
    let registry = ConstraintRegistry::with_extra_json(EXTRA).expect("valid rules");
    println!("{}\n", registry.render_numbered());

    let strict = Validator::new(registry.clone(), ValidateOptions::default());
    let report = strict.validate(FAULTY);
    println!("{}\n", render_report(&report, ReportFormat::Human));
    println!("{}\n", render_report(&report, ReportFormat::Machine));

    let lenient = Validator::new(registry, ValidateOptions { lenient: true });
    let report = lenient.validate(FAULTY);
    println!("lenient: clean={} codes={:?}", report.clean, report.rule_codes());
}
