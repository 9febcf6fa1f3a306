//! Format checker for BPMN text.
//!
//! Checks text against the format description and a registry of process
//! constraints, producing a located report with a repair suggestion per
//! finding. The registry is plain data: extra [`RuleCheck::AttributePattern`]
//! rules can be loaded from JSON without touching code.

use std::collections::BTreeMap;
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dsl::{self, ParseDetail, ParseError, ParseErrorKind, ParseOptions, SourceSpan};
use crate::model::{DefectKind, Node, ProcessModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Checks implemented in code. Each maps to one default rule code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    WellFormed,
    UniqueIds,
    BranchCount,
    ActionPresent,
    BranchCondition,
    BranchPlacement,
    KnownVocabulary,
    NonEmptyProcess,
    RequiredAttributes,
    ParallelConditions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleCheck {
    Builtin { check: Builtin },
    /// Every `element` carrying `attribute` must have a value matching `pattern`.
    /// `element` is `process`, `activity`, `gateway` or `branch`.
    AttributePattern {
        element: String,
        attribute: String,
        pattern: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintRule {
    pub code: String,
    pub description: String,
    pub severity: Severity,
    /// Default repair advice shown with each finding.
    pub suggestion: String,
    pub check: RuleCheck,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("duplicate rule code {0}")]
    DuplicateCode(String),
    #[error("rule {code}: invalid pattern: {source}")]
    BadPattern {
        code: String,
        #[source]
        source: regex::Error,
    },
    #[error("rule {0}: unknown element; expected process, activity, gateway or branch")]
    UnknownElement(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Ordered set of constraint rules with unique codes.
#[derive(Debug, Clone)]
pub struct ConstraintRegistry {
    rules: Vec<ConstraintRule>,
    patterns: BTreeMap<String, Regex>,
}

fn builtin(code: &str, check: Builtin, severity: Severity, description: &str, suggestion: &str) -> ConstraintRule {
    ConstraintRule {
        code: code.into(),
        description: description.into(),
        severity,
        suggestion: suggestion.into(),
        check: RuleCheck::Builtin { check },
    }
}

impl Default for ConstraintRegistry {
    fn default() -> Self {
        use Builtin::*;
        use Severity::*;
        let rules = vec![
            builtin("C0", WellFormed, Error,
                "The text must be well-formed BPMN text: one <process> element, properly nested and closed tags, double-quoted attribute values.",
                "fix the markup so every element is closed and properly nested"),
            builtin("C1", UniqueIds, Error,
                "Every activity and gateway must have a non-empty id that is unique within the process.",
                "give every activity and gateway its own non-empty id"),
            builtin("C2", BranchCount, Error,
                "Every gateway (exclusive, parallel or inclusive) must include at least two branches.",
                "add a second branch or remove the gateway"),
            builtin("C3", ActionPresent, Error,
                "Every activity must have a non-empty action naming what is done.",
                "set the action attribute to the name of the activity"),
            builtin("C4", BranchCondition, Error,
                "Every branch of an exclusive or inclusive gateway must have a non-empty condition.",
                "add a condition attribute stating when this branch is taken"),
            builtin("C5", BranchPlacement, Error,
                "A <branch> may only appear directly inside an exclusiveGateway, parallelGateway or inclusiveGateway.",
                "move the branch inside a gateway or remove it"),
            builtin("C6", KnownVocabulary, Error,
                "Only the elements process, activity, exclusiveGateway, parallelGateway, inclusiveGateway and branch, with their documented attributes, may be used.",
                "remove the unsupported element or attribute"),
            builtin("C7", NonEmptyProcess, Error,
                "The process must contain at least one activity or gateway.",
                "add the activities of the process"),
            builtin("C8", RequiredAttributes, Error,
                "Required attributes must be present: name on process, role on activity.",
                "add the missing attribute"),
            builtin("C9", ParallelConditions, Warning,
                "Branches of a parallel gateway always run and should not carry a condition.",
                "drop the condition or use an exclusive or inclusive gateway"),
        ];
        Self::new(rules).expect("default registry is valid")
    }
}

impl ConstraintRegistry {
    pub fn new(rules: Vec<ConstraintRule>) -> Result<Self, RegistryError> {
        let mut patterns = BTreeMap::new();
        for (i, rule) in rules.iter().enumerate() {
            if rules[..i].iter().any(|r| r.code == rule.code) {
                return Err(RegistryError::DuplicateCode(rule.code.clone()));
            }
            if let RuleCheck::AttributePattern { element, pattern, .. } = &rule.check {
                if !matches!(element.as_str(), "process" | "activity" | "gateway" | "branch") {
                    return Err(RegistryError::UnknownElement(rule.code.clone()));
                }
                let re = Regex::new(pattern).map_err(|source| RegistryError::BadPattern {
                    code: rule.code.clone(),
                    source,
                })?;
                patterns.insert(rule.code.clone(), re);
            }
        }
        Ok(Self { rules, patterns })
    }

    /// Default rules plus the rules in a JSON array.
    pub fn with_extra_json(json: &str) -> Result<Self, RegistryError> {
        let extra: Vec<ConstraintRule> = serde_json::from_str(json)?;
        let mut rules = Self::default().rules;
        rules.extend(extra);
        Self::new(rules)
    }

    pub fn rules(&self) -> &[ConstraintRule] {
        &self.rules
    }

    pub fn get(&self, code: &str) -> Option<&ConstraintRule> {
        self.rules.iter().find(|r| r.code == code)
    }

    fn for_builtin(&self, check: Builtin) -> Option<&ConstraintRule> {
        self.rules
            .iter()
            .find(|r| matches!(r.check, RuleCheck::Builtin { check: c } if c == check))
    }

    /// Numbered rule list for prompts.
    pub fn render_numbered(&self) -> String {
        self.rules
            .iter()
            .map(|r| format!("{}: {}", r.code, r.description))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    /// Tree path such as `/nodes/1/branches/0`, or `/` for document-level findings.
    pub path: String,
    pub span: Option<SourceSpan>,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.span {
            Some(span) => write!(f, "{} (line {})", self.path, span.start.line),
            None => f.write_str(&self.path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: String,
    pub severity: Severity,
    pub location: Location,
    pub message: String,
    pub suggestion: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// SHA-256 of the checked text, hex encoded.
    pub subject: String,
    pub violations: Vec<Violation>,
    pub clean: bool,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Error)
    }

    pub fn rule_codes(&self) -> Vec<&str> {
        self.violations.iter().map(|v| v.rule.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ValidateOptions {
    /// Downgrade unknown tags and attributes (C6) to warnings.
    pub lenient: bool,
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Validates BPMN text against the default registry in strict mode.
pub fn validate(text: &str) -> ValidationReport {
    Validator::default().validate(text)
}

#[derive(Debug, Clone, Default)]
pub struct Validator {
    pub registry: ConstraintRegistry,
    pub options: ValidateOptions,
}

struct Finding {
    rule: String,
    severity: Severity,
    path: String,
    span: Option<SourceSpan>,
    message: String,
    suggestion: String,
    order: usize,
}

impl Validator {
    pub fn new(registry: ConstraintRegistry, options: ValidateOptions) -> Self {
        Self { registry, options }
    }

    pub fn validate(&self, text: &str) -> ValidationReport {
        let outcome = dsl::parse_document(text, ParseOptions::lenient());
        let mut findings = Vec::new();

        for w in &outcome.warnings {
            self.parse_finding(w, &mut findings);
        }
        if outcome.errors.is_empty() {
            if let Some(model) = &outcome.model {
                self.model_findings(model, &outcome.spans, &mut findings);
            }
        } else {
            for e in &outcome.errors {
                self.parse_finding(e, &mut findings);
            }
        }

        findings.sort_by(|a, b| {
            let ka = a.span.map_or(usize::MAX, |s| s.start.offset);
            let kb = b.span.map_or(usize::MAX, |s| s.start.offset);
            ka.cmp(&kb).then(a.order.cmp(&b.order))
        });
        let violations: Vec<Violation> = findings
            .into_iter()
            .map(|f| Violation {
                rule: f.rule,
                severity: f.severity,
                location: Location {
                    path: f.path,
                    span: f.span,
                },
                message: f.message,
                suggestion: f.suggestion,
            })
            .collect();
        let clean = !violations.iter().any(|v| v.severity == Severity::Error);
        ValidationReport {
            subject: sha256_hex(text),
            violations,
            clean,
        }
    }

    fn push(
        &self,
        check: Builtin,
        path: String,
        span: Option<SourceSpan>,
        message: String,
        suggestion: Option<String>,
        findings: &mut Vec<Finding>,
    ) {
        // Markup problems are always reported, even if the specific rule was removed.
        let rule = self
            .registry
            .for_builtin(check)
            .or_else(|| {
                matches!(
                    check,
                    Builtin::UniqueIds
                        | Builtin::ActionPresent
                        | Builtin::BranchCondition
                        | Builtin::BranchPlacement
                        | Builtin::KnownVocabulary
                        | Builtin::RequiredAttributes
                )
                .then(|| self.registry.for_builtin(Builtin::WellFormed))
                .flatten()
            });
        let Some(rule) = rule else { return };
        let mut severity = rule.severity;
        if check == Builtin::KnownVocabulary && self.options.lenient {
            severity = Severity::Warning;
        }
        findings.push(Finding {
            rule: rule.code.clone(),
            severity,
            path,
            span,
            message,
            suggestion: suggestion.unwrap_or_else(|| rule.suggestion.clone()),
            order: findings.len(),
        });
    }

    fn parse_finding(&self, e: &ParseError, findings: &mut Vec<Finding>) {
        let (check, suggestion) = match (&e.kind, &e.detail) {
            (_, ParseDetail::UnknownTag { tag }) => (
                Builtin::KnownVocabulary,
                Some(format!(
                    "remove <{tag}> or replace it with activity, exclusiveGateway, parallelGateway, inclusiveGateway or branch"
                )),
            ),
            (_, ParseDetail::Unknown { element, attribute }) => (
                Builtin::KnownVocabulary,
                Some(format!("remove attribute \"{attribute}\" from <{element}>")),
            ),
            (_, ParseDetail::BranchOutsideGateway) => (Builtin::BranchPlacement, None),
            (_, ParseDetail::Missing { element, attribute }) => {
                let check = match attribute.as_str() {
                    "id" => Builtin::UniqueIds,
                    "action" => Builtin::ActionPresent,
                    "condition" => Builtin::BranchCondition,
                    _ => Builtin::RequiredAttributes,
                };
                (
                    check,
                    Some(format!("add the \"{attribute}\" attribute to <{element}>")),
                )
            }
            (ParseErrorKind::UnclosedTag, _) => (
                Builtin::WellFormed,
                Some("close the element: use a matching end tag, or \"/>\" for activities".into()),
            ),
            _ => (Builtin::WellFormed, None),
        };
        let path = e.path.clone().filter(|p| !p.is_empty()).unwrap_or_else(|| "/".into());
        self.push(check, path, Some(e.span), e.message.clone(), suggestion, findings);
    }

    fn model_findings(
        &self,
        model: &ProcessModel,
        spans: &BTreeMap<String, SourceSpan>,
        findings: &mut Vec<Finding>,
    ) {
        for d in model.structural_check() {
            let check = match d.kind {
                DefectKind::EmptyProcess => Builtin::NonEmptyProcess,
                DefectKind::EmptyId | DefectKind::DuplicateId => Builtin::UniqueIds,
                DefectKind::EmptyAction => Builtin::ActionPresent,
                DefectKind::BranchCount => Builtin::BranchCount,
                DefectKind::MissingCondition => Builtin::BranchCondition,
            };
            let span = spans.get(&d.path).copied();
            self.push(check, d.path, span, d.message, None, findings);
        }

        model.walk(|path, node| {
            if let Node::Gateway(g) = node {
                if !g.kind.requires_condition() {
                    for (b, branch) in g.branches.iter().enumerate() {
                        if branch.condition.is_some() {
                            let bpath = format!("{path}/branches/{b}");
                            let span = spans.get(&bpath).copied();
                            self.push(
                                Builtin::ParallelConditions,
                                bpath,
                                span,
                                format!("branch {b} of parallel gateway \"{}\" has a condition", g.id),
                                None,
                                findings,
                            );
                        }
                    }
                }
            }
        });

        for rule in &self.registry.rules {
            let RuleCheck::AttributePattern {
                element,
                attribute,
                ..
            } = &rule.check
            else {
                continue;
            };
            let re = &self.registry.patterns[&rule.code];
            let mut check = |path: &str, value: Option<&str>| {
                if let Some(v) = value {
                    if !re.is_match(v) {
                        findings.push(Finding {
                            rule: rule.code.clone(),
                            severity: rule.severity,
                            path: path.to_owned(),
                            span: spans.get(path).copied(),
                            message: format!("{element} {attribute} \"{v}\" violates: {}", rule.description),
                            suggestion: rule.suggestion.clone(),
                            order: findings.len(),
                        });
                    }
                }
            };
            if element == "process" && attribute == "name" {
                check("/", Some(&model.name));
            }
            model.walk(|path, node| match (element.as_str(), node) {
                ("activity", Node::Activity(a)) => {
                    let value = match attribute.as_str() {
                        "id" => Some(a.id.as_str()),
                        "role" => Some(a.role.as_str()),
                        "action" => Some(a.action.as_str()),
                        "object" => a.object.as_deref(),
                        _ => None,
                    };
                    check(path, value);
                }
                ("gateway", Node::Gateway(g)) if attribute == "id" => check(path, Some(&g.id)),
                ("branch", Node::Gateway(g)) if attribute == "condition" => {
                    for (b, branch) in g.branches.iter().enumerate() {
                        check(&format!("{path}/branches/{b}"), branch.condition.as_deref());
                    }
                }
                _ => {}
            });
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Human,
    Machine,
}

#[derive(Serialize)]
struct MachineViolation<'a> {
    rule: &'a str,
    severity: Severity,
    location: &'a str,
    line: Option<u32>,
    message: &'a str,
    suggestion: &'a str,
}

#[derive(Serialize)]
struct MachineReport<'a> {
    subject: &'a str,
    clean: bool,
    violations: Vec<MachineViolation<'a>>,
}

/// Renders a report for people (one finding per line) or as JSON.
pub fn render_report(report: &ValidationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Human => {
            if report.violations.is_empty() {
                return "OK: no format hallucinations found".into();
            }
            report
                .violations
                .iter()
                .map(|v| format!("{} at {}: {} — {}", v.rule, v.location, v.message, v.suggestion))
                .collect::<Vec<_>>()
                .join("\n")
        }
        ReportFormat::Machine => {
            let machine = MachineReport {
                subject: &report.subject,
                clean: report.clean,
                violations: report
                    .violations
                    .iter()
                    .map(|v| MachineViolation {
                        rule: &v.rule,
                        severity: v.severity,
                        location: &v.location.path,
                        line: v.location.span.map(|s| s.start.line),
                        message: &v.message,
                        suggestion: &v.suggestion,
                    })
                    .collect(),
            };
            serde_json::to_string(&machine).expect("report serializes")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DELIVERY: &str = r#"<process name="delivery">
  <activity role="customer" action="prepare to send a package" id="a1"/>
  <exclusiveGateway id="g1">
    <branch condition="home pickup">
      <activity role="system" action="assign a courier for pickup" id="a2"/>
    </branch>
    <branch condition="self-service">
      <activity role="customer" action="go to the mailing point to send" id="a3"/>
    </branch>
  </exclusiveGateway>
</process>
"#;

    #[test]
    fn clean_model() {
        let r = validate(DELIVERY);
        assert!(r.clean);
        assert!(r.violations.is_empty());
        assert_eq!(render_report(&r, ReportFormat::Human), "OK: no format hallucinations found");
    }

    #[test]
    fn single_branch_parallel_gateway() {
        let text = r#"<process name="p"><parallelGateway id="g"><branch><activity role="r" action="a" id="a"/></branch></parallelGateway></process>"#;
        let r = validate(text);
        assert!(!r.clean);
        assert_eq!(r.rule_codes(), vec!["C2"]);
        assert_eq!(r.violations[0].suggestion, "add a second branch or remove the gateway");
        assert_eq!(r.violations[0].location.path, "/nodes/0");
        let human = render_report(&r, ReportFormat::Human);
        assert_eq!(human.lines().count(), 1);
        assert!(human.contains("C2") && human.contains("add a second branch"));
    }

    #[test]
    fn exclusive_branch_without_condition() {
        let text = r#"<process name="p"><exclusiveGateway id="g"><branch condition="x"/><branch><activity role="r" action="a" id="a"/></branch></exclusiveGateway></process>"#;
        assert_eq!(validate(text).rule_codes(), vec!["C4"]);
        let blank = r#"<process name="p"><exclusiveGateway id="g"><branch condition="x"/><branch condition=" "/></exclusiveGateway></process>"#;
        assert_eq!(validate(blank).rule_codes(), vec!["C4"]);
    }

    #[test]
    fn machine_form_keys() {
        let text = r#"<process name="p"><parallelGateway id="g"><branch/></parallelGateway></process>"#;
        let json = render_report(&validate(text), ReportFormat::Machine);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["clean"], false);
        assert_eq!(v["subject"].as_str().unwrap().len(), 64);
        let first = &v["violations"][0];
        for key in ["rule", "location", "line", "message", "suggestion"] {
            assert!(first.get(key).is_some(), "missing {key}");
        }
        assert_eq!(first["rule"], "C2");
        assert_eq!(first["line"], 1);
    }

    #[test]
    fn violations_sorted_by_position() {
        let text = "<process name=\"p\">\n<activity role=\"r\" action=\"\" id=\"a\"/>\n<activity role=\"r\" action=\"b\" id=\"a\"/>\n</process>";
        let r = validate(text);
        assert_eq!(r.rule_codes(), vec!["C3", "C1"]);
        assert_eq!(r.violations[0].location.span.unwrap().start.line, 2);
    }

    #[test]
    fn lenient_downgrades_vocabulary() {
        let text = r#"<process name="p"><activity role="r" action="a" id="a" color="red"/></process>"#;
        assert!(!validate(text).clean);
        let lenient = Validator::new(ConstraintRegistry::default(), ValidateOptions { lenient: true });
        let r = lenient.validate(text);
        assert!(r.clean);
        assert_eq!(r.violations[0].severity, Severity::Warning);
    }

    #[test]
    fn parallel_condition_is_warning_only() {
        let text = r#"<process name="p"><parallelGateway id="g"><branch condition="x"/><branch/></parallelGateway></process>"#;
        let r = validate(text);
        assert!(r.clean);
        assert_eq!(r.rule_codes(), vec!["C9"]);
    }

    #[test]
    fn extra_rules_from_json() {
        let json = r#"[{"code": "C10", "description": "ids are lowercase", "severity": "Error",
            "suggestion": "use lowercase ids",
            "check": {"kind": "attribute_pattern", "element": "activity", "attribute": "id", "pattern": "^[a-z0-9_]+$"}}]"#;
        let reg = ConstraintRegistry::with_extra_json(json).unwrap();
        assert!(reg.render_numbered().contains("C10: ids are lowercase"));
        let v = Validator::new(reg, ValidateOptions::default());
        let r = v.validate(r#"<process name="p"><activity role="r" action="a" id="A1"/></process>"#);
        assert_eq!(r.rule_codes(), vec!["C10"]);
        assert!(v.validate(DELIVERY).clean);
    }

    #[test]
    fn registry_rejects_duplicates_and_bad_patterns() {
        let dup = r#"[{"code": "C1", "description": "x", "severity": "Error", "suggestion": "x",
            "check": {"kind": "builtin", "check": "unique_ids"}}]"#;
        assert!(matches!(
            ConstraintRegistry::with_extra_json(dup),
            Err(RegistryError::DuplicateCode(_))
        ));
        let bad = r#"[{"code": "X", "description": "x", "severity": "Error", "suggestion": "x",
            "check": {"kind": "attribute_pattern", "element": "activity", "attribute": "id", "pattern": "("}}]"#;
        assert!(matches!(
            ConstraintRegistry::with_extra_json(bad),
            Err(RegistryError::BadPattern { .. })
        ));
    }

    #[test]
    fn registry_codes_unique() {
        let reg = ConstraintRegistry::default();
        let mut codes: Vec<_> = reg.rules().iter().map(|r| r.code.as_str()).collect();
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), reg.rules().len());
        for r in reg.rules() {
            if r.severity == Severity::Error {
                assert!(!r.suggestion.is_empty());
            }
        }
    }
}
