//! Semantic hallucination taxonomy and reviewer protocol.
//!
//! Four categories of logic errors (SH1 to SH4) are checked partly by
//! deterministic detectors and partly by a reviewer agent. The reviewer
//! answers with either the line `NO_ISSUES` or suggestion lines of the form
//! `SHk | id[,id...] | proposal`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl;
use crate::model::{normalize_label, Node, ProcessModel};

/// Reviewer sentinel meaning "nothing to fix".
pub const NO_ISSUES: &str = "NO_ISSUES";
/// Field separator of a suggestion line.
pub const SEPARATOR: &str = " | ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LintCode {
    #[serde(rename = "SH1")]
    OutOfSequence,
    #[serde(rename = "SH2")]
    IrrelevantActivity,
    #[serde(rename = "SH3")]
    GatewayKindError,
    #[serde(rename = "SH4")]
    BranchMembershipError,
}

impl LintCode {
    pub const ALL: [LintCode; 4] = [
        Self::OutOfSequence,
        Self::IrrelevantActivity,
        Self::GatewayKindError,
        Self::BranchMembershipError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::OutOfSequence => "SH1",
            Self::IrrelevantActivity => "SH2",
            Self::GatewayKindError => "SH3",
            Self::BranchMembershipError => "SH4",
        }
    }
}

impl fmt::Display for LintCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LintCode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Self::ALL.into_iter().find(|c| c.as_str() == s).ok_or(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LintCategory {
    pub code: LintCode,
    pub name: &'static str,
    pub description: &'static str,
    pub example: &'static str,
}

/// The four semantic hallucination categories, illustrated on a parcel
/// delivery process.
pub fn categories() -> [LintCategory; 4] {
    [
        LintCategory {
            code: LintCode::OutOfSequence,
            name: "activities occurring out of sequence",
            description: "Two activities are placed in an order that contradicts how the work is actually done.",
            example: "\"prepare to send a package\" has to come before \"go to the mailing point to send\"; a model placing it afterwards is wrong.",
        },
        LintCategory {
            code: LintCode::IrrelevantActivity,
            name: "irrelevant activities",
            description: "An activity sounds related to the domain but contributes nothing to the process, or duplicates another activity.",
            example: "\"delivery system\" names a system, not a step of the delivery process, and should be removed.",
        },
        LintCategory {
            code: LintCode::GatewayKindError,
            name: "wrong gateway kind",
            description: "A gateway's kind does not match reality, e.g. a choice where both paths must run, or parallel paths where only one applies.",
            example: "\"confirm the pickup location\" and \"assign a courier for pickup\" must both happen, so an exclusive choice between them is wrong.",
        },
        LintCategory {
            code: LintCode::BranchMembershipError,
            name: "activity inside or outside the wrong branch",
            description: "An activity sits in the wrong branch of a gateway, or inside a gateway when it belongs before or after it (or the reverse).",
            example: "\"assign a courier for pickup\" belongs to the home-pickup branch of the exclusive gateway, not to the self-service branch with \"go to the mailing point to send\".",
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewSuggestion {
    pub category: LintCode,
    pub targets: Vec<String>,
    pub proposal: String,
}

impl ReviewSuggestion {
    /// The suggestion in reviewer line syntax.
    pub fn to_line(&self) -> String {
        format!(
            "{}{SEPARATOR}{}{SEPARATOR}{}",
            self.category,
            self.targets.join(","),
            self.proposal
        )
    }
}

/// Structural signature of a node sequence with ids erased.
fn signature(nodes: &[Node]) -> String {
    let mut out = String::new();
    for n in nodes {
        match n {
            Node::Activity(a) => {
                out.push_str("A(");
                out.push_str(&a.role);
                out.push('\u{1f}');
                out.push_str(&normalize_label(&a.action));
                out.push('\u{1f}');
                out.push_str(a.object.as_deref().unwrap_or(""));
                out.push(')');
            }
            Node::Gateway(g) => {
                out.push_str(g.kind.tag());
                out.push('[');
                for b in &g.branches {
                    out.push('{');
                    out.push_str(b.condition.as_deref().unwrap_or(""));
                    out.push(':');
                    out.push_str(&signature(&b.children));
                    out.push('}');
                }
                out.push(']');
            }
        }
    }
    out
}

/// Cheap deterministic detectors whose findings seed the reviewer prompt:
/// duplicate activities (SH2), empty branches (SH4) and gateways whose
/// branches are identical (SH3).
pub fn deterministic_lint(model: &ProcessModel) -> Vec<ReviewSuggestion> {
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut first_seen: Vec<String> = Vec::new();
    for a in model.activities() {
        let key = normalize_label(&a.action);
        if key.is_empty() {
            continue;
        }
        let entry = groups.entry(key.clone()).or_default();
        if entry.is_empty() {
            first_seen.push(key);
        }
        entry.push(a.id.clone());
    }
    let mut out: Vec<ReviewSuggestion> = first_seen
        .into_iter()
        .filter_map(|key| {
            let ids = &groups[&key];
            (ids.len() >= 2).then(|| ReviewSuggestion {
                category: LintCode::IrrelevantActivity,
                targets: ids.clone(),
                proposal: format!(
                    "activity \"{key}\" appears {} times; keep one occurrence unless the repetition is intended",
                    ids.len()
                ),
            })
        })
        .collect();

    let mut empty = Vec::new();
    let mut identical = Vec::new();
    model.walk(|_, node| {
        let Node::Gateway(g) = node else { return };
        for (b, branch) in g.branches.iter().enumerate() {
            if branch.children.is_empty() {
                empty.push(ReviewSuggestion {
                    category: LintCode::BranchMembershipError,
                    targets: vec![g.id.clone()],
                    proposal: format!(
                        "branch {b} of gateway \"{}\" is empty; move the activities that belong to it inside, or confirm the skip path",
                        g.id
                    ),
                });
            }
        }
        let sigs: Vec<String> = g
            .branches
            .iter()
            .map(|b| signature(&b.children))
            .collect();
        let dup = (0..sigs.len()).any(|i| (i + 1..sigs.len()).any(|j| sigs[i] == sigs[j]));
        if dup {
            identical.push(ReviewSuggestion {
                category: LintCode::GatewayKindError,
                targets: vec![g.id.clone()],
                proposal: format!(
                    "gateway \"{}\" has identical branches; check whether a gateway is needed and whether its kind is right",
                    g.id
                ),
            });
        }
    });
    out.extend(empty);
    out.extend(identical);
    out
}

/// Prompt asking the reviewer to look for semantic hallucinations.
pub fn build_review_prompt(model: &ProcessModel, categories: &[LintCategory], hints: &[ReviewSuggestion]) -> String {
    let mut p = String::new();
    p.push_str("Review the following BPMN text for semantic hallucinations, i.e. logic errors in the process.\n\n");
    p.push_str("BPMN text:\n");
    p.push_str(&dsl::write_text(model));
    p.push_str("\nCategories of semantic hallucinations:\n");
    for c in categories {
        p.push_str(&format!(
            "{} ({}): {} Example: {}\n",
            c.code, c.name, c.description, c.example
        ));
    }
    if !hints.is_empty() {
        p.push_str("\nAutomatic checks flagged these candidates (confirm or dismiss them):\n");
        for h in hints {
            p.push_str(&h.to_line());
            p.push('\n');
        }
    }
    p.push_str(&format!(
        "\nAnswer format: if the model has no semantic hallucinations, answer with the single line {NO_ISSUES}. \
Otherwise answer with one line per problem, exactly:\nSHk{SEPARATOR}<comma-separated ids of the affected activities or gateways>{SEPARATOR}<what the expert should change>\n\
for example:\nSH1{SEPARATOR}a3{SEPARATOR}move a3 before a2\n"
    ));
    p
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReviewReply {
    NoIssues,
    Suggestions {
        suggestions: Vec<ReviewSuggestion>,
        /// Lines dropped because they named ids not present in the model.
        warnings: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("reviewer reply contains neither {NO_ISSUES} nor a well-formed suggestion line")]
pub struct ReviewParseFailure;

fn parse_line(line: &str) -> Option<(LintCode, Vec<String>, String)> {
    let line = line
        .trim()
        .trim_start_matches(['-', '*', '•'])
        .trim_start();
    let mut parts = line.splitn(3, '|');
    let code: LintCode = parts.next()?.trim().parse().ok()?;
    let ids: Vec<String> = parts
        .next()?
        .split(',')
        .map(|s| s.trim().to_owned())
        .filter(|s| !s.is_empty())
        .collect();
    let proposal = parts.next()?.trim().to_owned();
    if ids.is_empty() || proposal.is_empty() {
        return None;
    }
    Some((code, ids, proposal))
}

/// Interprets a reviewer reply against the model under review.
pub fn parse_review_reply(reply: &str, model: &ProcessModel) -> Result<ReviewReply, ReviewParseFailure> {
    if reply.lines().any(|l| l.trim().trim_matches('`') == NO_ISSUES) {
        return Ok(ReviewReply::NoIssues);
    }
    let mut suggestions = Vec::new();
    let mut warnings = Vec::new();
    let mut well_formed = 0;
    for line in reply.lines() {
        let Some((category, targets, proposal)) = parse_line(line) else {
            continue;
        };
        well_formed += 1;
        let unknown: Vec<&str> = targets
            .iter()
            .filter(|id| !model.contains_id(id))
            .map(String::as_str)
            .collect();
        if unknown.is_empty() {
            suggestions.push(ReviewSuggestion {
                category,
                targets,
                proposal,
            });
        } else {
            warnings.push(format!(
                "dropped suggestion naming unknown id(s) {}: {}",
                unknown.join(","),
                line.trim()
            ));
        }
    }
    if well_formed == 0 {
        return Err(ReviewParseFailure);
    }
    Ok(ReviewReply::Suggestions {
        suggestions,
        warnings,
    })
}
