//! The multi-agent modeling pipeline: a team leader, a process design expert
//! and a process reviewer generate, refine, review and test a model.
//!
//! Each phase is a chat chain in which an instructor prompts an assistant.
//! Assistant turns go to a [`ChatBackend`]; everything else is templated,
//! so a [`ReplayBackend`] makes whole runs reproducible.

mod backend;
mod phases;
mod prompts;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ProcessModel;
use crate::validator::{ConstraintRegistry, ValidateOptions, ValidationReport, Validator};

pub use backend::{
    BackendError, ChatBackend, HttpBackend, HttpConfig, ReplayBackend, ReplayEntry, RetryPolicy, SamplingParams,
    WireMessage, WireRole, DEFAULT_API_BASE, DEFAULT_MODEL, ENV_API_BASE, ENV_API_KEY, ENV_MODEL,
};
pub use phases::{
    run_generation, run_pipeline, run_refinement, run_reviewing, run_testing, RefinementLog, ReviewLog,
    ReviewOutcome, ReviewRound, TestLog, TestOutcome,
};
pub use prompts::{
    build_generation_prompt, build_refinement_prompt, build_repair_prompt, build_revision_prompt,
    build_test_fix_prompt, role_card, Role, RoleCard, Stance, BPMN_PRIMER, DEFAULT_EXAMPLE,
    DEFAULT_REFINEMENT_EXAMPLE, FORMAT_DESCRIPTION, STEP_BY_STEP,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    #[serde(alias = "Generation")]
    Generation,
    #[serde(alias = "Refinement")]
    Refinement,
    #[serde(alias = "Reviewing")]
    Reviewing,
    #[serde(alias = "Testing")]
    Testing,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Generation, Phase::Refinement, Phase::Reviewing, Phase::Testing];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Generation => "generation",
            Phase::Refinement => "refinement",
            Phase::Reviewing => "reviewing",
            Phase::Testing => "testing",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Phase::ALL
            .into_iter()
            .find(|p| p.as_str() == lower || (lower == "review" && *p == Phase::Reviewing) || (lower == "test" && *p == Phase::Testing))
            .ok_or_else(|| format!("unknown phase `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub index: u32,
    pub phase: Phase,
    pub speaker: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<Role>,
    pub content: String,
    /// Sampling parameters of the backend call that produced this message.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<SamplingParams>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transcript {
    pub messages: Vec<ChatMessage>,
}

impl Transcript {
    pub fn push(&mut self, phase: Phase, speaker: Role, to: Option<Role>, content: String, params: Option<SamplingParams>) {
        let index = self.messages.len() as u32;
        self.messages.push(ChatMessage {
            index,
            phase,
            speaker,
            to,
            content,
            params,
        });
    }

    pub fn in_phase(&self, phase: Phase) -> impl Iterator<Item = &ChatMessage> {
        self.messages.iter().filter(move |m| m.phase == phase)
    }

    /// Messages from `speaker` in `phase`.
    pub fn turns(&self, phase: Phase, speaker: Role) -> usize {
        self.in_phase(phase).filter(|m| m.speaker == speaker).count()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            out.push_str(&serde_json::to_string(m).expect("chat message serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let messages = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(Self { messages })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_jsonl())
    }
}

/// A checker the reviewer can run on model text during testing.
pub trait ModelTool: Send + Sync {
    fn name(&self) -> &str;
    fn description(&self) -> &str;
    fn run(&self, text: &str, registry: &ConstraintRegistry, options: ValidateOptions) -> ValidationReport;
}

/// The format validator as a reviewer tool.
#[derive(Debug, Clone, Copy, Default)]
pub struct ValidatorTool;

impl ModelTool for ValidatorTool {
    fn name(&self) -> &str {
        "validator"
    }

    fn description(&self) -> &str {
        "checks BPMN text against the process constraints and reports format hallucinations with suggested fixes"
    }

    fn run(&self, text: &str, registry: &ConstraintRegistry, options: ValidateOptions) -> ValidationReport {
        Validator::new(registry.clone(), options).validate(text)
    }
}

/// Tools available to the reviewer, keyed by name.
#[derive(Clone)]
pub struct ToolRegistry {
    tools: Vec<Arc<dyn ModelTool>>,
}

impl Default for ToolRegistry {
    fn default() -> Self {
        Self {
            tools: vec![Arc::new(ValidatorTool)],
        }
    }
}

impl fmt::Debug for ToolRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

impl ToolRegistry {
    pub fn empty() -> Self {
        Self { tools: Vec::new() }
    }

    /// Adds a tool, replacing any tool with the same name.
    pub fn register(&mut self, tool: Arc<dyn ModelTool>) {
        self.tools.retain(|t| t.name() != tool.name());
        self.tools.push(tool);
    }

    pub fn get(&self, name: &str) -> Option<&Arc<dyn ModelTool>> {
        self.tools.iter().find(|t| t.name() == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.tools.iter().map(|t| t.name()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub phases_enabled: BTreeSet<Phase>,
    pub max_review_rounds: u32,
    pub max_test_rounds: u32,
    pub max_parse_retries: u32,
    pub few_shot_examples: Vec<String>,
    pub refinement_examples: Vec<String>,
    pub registry: ConstraintRegistry,
    pub validate_options: ValidateOptions,
    pub tools: ToolRegistry,
    /// Name of the tool the reviewer runs in the testing phase.
    pub test_tool: String,
    pub sampling: SamplingParams,
    /// Keep the input model (with a warning) when refinement fails.
    pub refinement_fallback: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            phases_enabled: Phase::ALL.into_iter().collect(),
            max_review_rounds: 3,
            max_test_rounds: 3,
            max_parse_retries: 2,
            few_shot_examples: vec![DEFAULT_EXAMPLE.to_owned()],
            refinement_examples: vec![DEFAULT_REFINEMENT_EXAMPLE.to_owned()],
            registry: ConstraintRegistry::default(),
            validate_options: ValidateOptions::default(),
            tools: ToolRegistry::default(),
            test_tool: "validator".into(),
            sampling: SamplingParams::default(),
            refinement_fallback: true,
        }
    }
}

impl PipelineConfig {
    pub fn enabled(&self, phase: Phase) -> bool {
        self.phases_enabled.contains(&phase)
    }

    /// The configuration with one phase turned off.
    pub fn without(mut self, phase: Phase) -> Self {
        self.phases_enabled.remove(&phase);
        self
    }

    pub fn check(&self) -> Result<(), PhaseError> {
        if !self.enabled(Phase::Generation) {
            return Err(PhaseError::Config("the generation phase cannot be disabled".into()));
        }
        if self.max_review_rounds == 0 || self.max_test_rounds == 0 {
            return Err(PhaseError::Config("round caps must be at least 1".into()));
        }
        if self.enabled(Phase::Testing) && self.tools.get(&self.test_tool).is_none() {
            return Err(PhaseError::Config(format!("no tool named `{}` is registered", self.test_tool)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhaseError {
    #[error("generation failed: {}", .problems.join("; "))]
    GenerationFailed { problems: Vec<String> },
    #[error("refinement failed: {}", .problems.join("; "))]
    RefinementFailed { problems: Vec<String> },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// A failed run with the transcript up to the failure.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{phase} phase: {error}")]
pub struct PipelineError {
    pub phase: Phase,
    pub error: PhaseError,
    pub transcript: Transcript,
}

/// An assistant's side of a chat chain.
#[derive(Debug, Clone)]
pub struct Chain {
    pub instructor: Role,
    pub assistant: Role,
    pub messages: Vec<WireMessage>,
}

impl Chain {
    pub fn new(instructor: Role, assistant: Role) -> Self {
        Self {
            instructor,
            assistant,
            messages: vec![WireMessage::system(role_card(assistant).system_prompt)],
        }
    }
}

/// One pipeline run: the backend and the transcript so far.
pub struct Session<'b> {
    backend: &'b mut dyn ChatBackend,
    pub transcript: Transcript,
    pub sampling: SamplingParams,
    phase: Phase,
}

impl<'b> Session<'b> {
    pub fn new(backend: &'b mut dyn ChatBackend, sampling: SamplingParams) -> Self {
        Self {
            backend,
            transcript: Transcript::default(),
            sampling,
            phase: Phase::Generation,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn enter(&mut self, phase: Phase) {
        self.phase = phase;
        self.backend.set_phase(phase);
    }

    /// Records a templated message that involves no model call.
    pub fn note(&mut self, speaker: Role, to: Option<Role>, content: String) {
        self.transcript.push(self.phase, speaker, to, content, None);
    }

    /// Sends `instruction` down the chain and records both sides.
    pub fn ask(&mut self, chain: &mut Chain, instruction: String) -> Result<String, BackendError> {
        self.transcript
            .push(self.phase, chain.instructor, Some(chain.assistant), instruction.clone(), None);
        chain.messages.push(WireMessage::user(instruction));
        let reply = self.backend.complete(&chain.messages, &self.sampling)?;
        chain.messages.push(WireMessage::assistant(reply.clone()));
        self.transcript
            .push(self.phase, chain.assistant, Some(chain.instructor), reply.clone(), Some(self.sampling));
        Ok(reply)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseReports {
    /// Expert turns needed for a readable initial model.
    pub generation_attempts: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement: Option<RefinementLog>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reviewing: Option<ReviewLog>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub testing: Option<TestLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub final_model: ProcessModel,
    pub final_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_report: Option<ValidationReport>,
    /// Whether the final text passed validation; absent without testing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clean: Option<bool>,
    pub reports: PhaseReports,
    pub warnings: Vec<String>,
    pub transcript: Transcript,
}

impl PipelineResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pipeline result serializes")
    }
}
