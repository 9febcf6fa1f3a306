use serde::{Deserialize, Serialize};

use super::PipelineConfig;
use crate::lint::ReviewSuggestion;
use crate::validator::{render_report, ReportFormat, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    TeamLeader,
    ProcessDesignExpert,
    ProcessReviewer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stance {
    Instructor,
    Assistant,
}

impl Role {
    pub fn stance(self) -> Stance {
        match self {
            Role::TeamLeader => Stance::Instructor,
            Role::ProcessDesignExpert | Role::ProcessReviewer => Stance::Assistant,
        }
    }
}

/// An agent's identity and inception prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleCard {
    pub role: Role,
    pub stance: Stance,
    pub system_prompt: String,
}

/// Short description of BPMN shared by every role.
pub const BPMN_PRIMER: &str = "\
BPMN (Business Process Model and Notation) describes a business process as activities connected by sequence flow. \
An activity is a unit of work done by a role. Gateways split and merge the flow: an exclusive gateway takes exactly \
one of its branches, an inclusive gateway takes one or more, and a parallel gateway takes all of them at once. \
Every gateway has at least two branches and they meet again after the gateway.";

/// Grammar summary of the text format used for models.
pub const FORMAT_DESCRIPTION: &str = "\
Process format (BPMN text):
<process name=\"...\"> ... </process> is the single root element and contains the process in execution order.
<activity role=\"...\" action=\"...\" object=\"...\" id=\"...\"/> is one activity: the role performs the action on the object. object is optional; id is unique.
<exclusiveGateway id=\"...\">, <inclusiveGateway id=\"...\"> and <parallelGateway id=\"...\"> contain the branches of a gateway.
<branch condition=\"...\"> ... </branch> is one path of the enclosing gateway. Exclusive and inclusive branches need a condition; parallel branches have none. A branch holds activities and nested gateways in order and may be empty.
Elements are executed from top to bottom. Attribute values are double-quoted; write &amp; &lt; &gt; &quot; for & < > \".";

pub const STEP_BY_STEP: &str = "Let's think step by step.";

/// The example model used when no few-shot examples are configured.
pub const DEFAULT_EXAMPLE: &str = r#"<process name="parcel delivery">
  <activity role="customer" action="place a delivery order" object="parcel" id="a1"/>
  <exclusiveGateway id="g1">
    <branch condition="home pickup">
      <activity role="service" action="assign a courier for pickup" id="a2"/>
      <activity role="courier" action="pick up the parcel" object="parcel" id="a3"/>
    </branch>
    <branch condition="self service">
      <activity role="customer" action="go to the mailing point to send" object="parcel" id="a4"/>
    </branch>
  </exclusiveGateway>
  <parallelGateway id="g2">
    <branch>
      <activity role="courier" action="deliver the parcel" object="parcel" id="a5"/>
    </branch>
    <branch>
      <activity role="service" action="notify the recipient" id="a6"/>
    </branch>
  </parallelGateway>
  <activity role="recipient" action="sign for the parcel" object="parcel" id="a7"/>
</process>
"#;

/// A before/after pair showing how an activity is refined.
pub const DEFAULT_REFINEMENT_EXAMPLE: &str = r#"Before:
<process name="order handling">
  <activity role="clerk" action="handle the order" object="order" id="a1"/>
</process>
After:
<process name="order handling">
  <activity role="clerk" action="check the order" object="order" id="a1"/>
  <exclusiveGateway id="g1">
    <branch condition="order is complete">
      <activity role="clerk" action="confirm the order" object="order" id="a2"/>
    </branch>
    <branch condition="order is incomplete">
      <activity role="clerk" action="ask the customer for the missing details" id="a3"/>
    </branch>
  </exclusiveGateway>
</process>
"#;

pub fn role_card(role: Role) -> RoleCard {
    let duty = match role {
        Role::TeamLeader => {
            "You are the team leader of a process modeling team. You give instructions to the process design expert \
and the process reviewer, pass requirements and feedback between them, and decide when a phase is finished."
        }
        Role::ProcessDesignExpert => {
            "You are a process design expert. You turn requirements into BPMN process models written in BPMN text, \
and you revise models when given feedback. Always answer with one complete <process> block."
        }
        Role::ProcessReviewer => {
            "You are a process reviewer. You read BPMN text models critically, find logic errors in them, \
and report problems precisely so the expert can fix them."
        }
    };
    RoleCard {
        role,
        stance: role.stance(),
        system_prompt: format!("{duty}\n\n{BPMN_PRIMER}\n\n{FORMAT_DESCRIPTION}"),
    }
}

/// Prompt asking the expert for an initial model. Contains, in order: the
/// requirement, the format description, the numbered constraints, the
/// examples and the step-by-step trigger.
pub fn build_generation_prompt(requirement: &str, cfg: &PipelineConfig) -> String {
    let mut p = String::new();
    p.push_str("User requirement:\n");
    p.push_str(requirement.trim());
    p.push_str("\n\n");
    p.push_str(FORMAT_DESCRIPTION);
    p.push_str("\n\nProcess constraints:\n");
    p.push_str(&cfg.registry.render_numbered());
    p.push_str("\n\n");
    for (i, ex) in cfg.few_shot_examples.iter().enumerate() {
        p.push_str(&format!("Example {}:\n{}\n", i + 1, ex.trim_end()));
        p.push('\n');
    }
    p.push_str("Write the BPMN text for the user requirement and reply with a single <process> block.\n");
    p.push_str(STEP_BY_STEP);
    p
}

pub fn build_refinement_prompt(model_text: &str, requirement: &str, cfg: &PipelineConfig) -> String {
    let mut p = String::new();
    p.push_str("Refine the process model below. Split coarse activities into sub-activities where the requirement \
implies more detail, and add gateways where the flow branches. Keep everything that is already right.\n\n");
    p.push_str("User requirement:\n");
    p.push_str(requirement.trim());
    p.push_str("\n\nCurrent model:\n");
    p.push_str(model_text);
    p.push('\n');
    for ex in &cfg.refinement_examples {
        p.push_str("Refinement example:\n");
        p.push_str(ex.trim_end());
        p.push_str("\n\n");
    }
    p.push_str("Reply with the complete refined model as a single <process> block.");
    p
}

/// Asks for a corrected reply after the previous one could not be read.
pub fn build_repair_prompt(problems: &[String]) -> String {
    let mut p = String::from("Your reply could not be read as BPMN text:\n");
    for e in problems {
        p.push_str("- ");
        p.push_str(e);
        p.push('\n');
    }
    p.push_str("Reply again with the complete corrected model as a single <process> block.");
    p
}

pub fn build_reviewer_repair_prompt() -> String {
    format!(
        "Your reply did not follow the answer format. Answer with the single line {} or with lines of the form \
SHk | <ids> | <change>.",
        crate::lint::NO_ISSUES
    )
}

pub fn build_revision_prompt(model_text: &str, suggestions: &[ReviewSuggestion]) -> String {
    let mut p = String::from("The process reviewer found these semantic problems in the model:\n");
    for s in suggestions {
        p.push_str(&s.to_line());
        p.push('\n');
    }
    p.push_str("\nCurrent model:\n");
    p.push_str(model_text);
    p.push_str("\nRevise the model to address every point and reply with the complete model as a single <process> block.");
    p
}

/// Announces which tool the reviewer runs during testing.
pub fn build_tool_selection(tool: &str, description: &str) -> String {
    format!("Selected tool `{tool}`: {description}")
}

pub fn build_test_fix_prompt(model_text: &str, report: &ValidationReport) -> String {
    format!(
        "The validator found format hallucinations in the model. The report also provides suggestions for modifications.\n\n\
Report:\n{}\n\nModel:\n{}\nFix every reported problem and reply with the complete model as a single <process> block.",
        render_report(report, ReportFormat::Machine),
        model_text.trim_end()
    )
}
