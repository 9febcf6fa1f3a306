use serde::{Deserialize, Serialize};

use super::prompts::{
    build_generation_prompt, build_refinement_prompt, build_repair_prompt, build_reviewer_repair_prompt,
    build_revision_prompt, build_test_fix_prompt, build_tool_selection, Role,
};
use super::{Chain, ChatBackend, Phase, PhaseError, PhaseReports, PipelineConfig, PipelineError, PipelineResult, Session};
use crate::dsl::{extract_model_block, parse, write_text};
use crate::lint::{build_review_prompt, categories, deterministic_lint, parse_review_reply, ReviewReply, ReviewSuggestion};
use crate::model::ProcessModel;
use crate::validator::{sha256_hex, ValidationReport};

/// Pulls the model block out of a reply and parses it.
fn read_model(reply: &str) -> Result<(String, ProcessModel), Vec<String>> {
    let block = extract_model_block(reply).map_err(|_| vec!["the reply contains no <process> block".to_owned()])?;
    parse(block)
        .map(|m| (block.to_owned(), m))
        .map_err(|errs| errs.iter().map(|e| e.to_string()).collect())
}

/// Asks for a model, sending repair turns quoting the parse errors until a
/// reply parses or the retries run out.
fn ask_for_model(
    session: &mut Session<'_>,
    chain: &mut Chain,
    instruction: String,
    retries: u32,
) -> Result<Result<ProcessModel, Vec<String>>, PhaseError> {
    let mut reply = session.ask(chain, instruction)?;
    let mut repairs = 0;
    loop {
        match read_model(&reply) {
            Ok((_, m)) => return Ok(Ok(m)),
            Err(problems) if repairs >= retries => return Ok(Err(problems)),
            Err(problems) => {
                repairs += 1;
                reply = session.ask(chain, build_repair_prompt(&problems))?;
            }
        }
    }
}

/// Produces the first model from the requirement.
pub fn run_generation(
    requirement: &str,
    cfg: &PipelineConfig,
    session: &mut Session<'_>,
) -> Result<ProcessModel, PhaseError> {
    if requirement.trim().is_empty() {
        return Err(PhaseError::Config("the requirement is empty".into()));
    }
    session.enter(Phase::Generation);
    let mut chain = Chain::new(Role::TeamLeader, Role::ProcessDesignExpert);
    let prompt = build_generation_prompt(requirement, cfg);
    ask_for_model(session, &mut chain, prompt, cfg.max_parse_retries)?
        .map_err(|problems| PhaseError::GenerationFailed { problems })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementLog {
    /// Whether the input model was kept because refinement failed.
    pub fell_back: bool,
    pub problems: Vec<String>,
}

/// Lets the expert refine the model; a disabled phase passes it through.
pub fn run_refinement(
    model: &ProcessModel,
    requirement: &str,
    cfg: &PipelineConfig,
    session: &mut Session<'_>,
) -> Result<(ProcessModel, RefinementLog), PhaseError> {
    if !cfg.enabled(Phase::Refinement) {
        return Ok((model.clone(), RefinementLog::default()));
    }
    session.enter(Phase::Refinement);
    let mut chain = Chain::new(Role::TeamLeader, Role::ProcessDesignExpert);
    let prompt = build_refinement_prompt(&write_text(model), requirement, cfg);
    match ask_for_model(session, &mut chain, prompt, cfg.max_parse_retries)? {
        Ok(m) => Ok((m, RefinementLog::default())),
        Err(problems) if cfg.refinement_fallback => Ok((
            model.clone(),
            RefinementLog {
                fell_back: true,
                problems,
            },
        )),
        Err(problems) => Err(PhaseError::RefinementFailed { problems }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewOutcome {
    NoIssues,
    CapReached,
    /// The expert returned the model unchanged.
    Stalled,
    /// The reviewer never answered in the expected format.
    ReviewerUnreadable,
    /// The expert's revision could not be parsed.
    RevisionFailed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRound {
    pub round: u32,
    pub model_hash: String,
    /// Candidates from the automatic checks shown to the reviewer.
    pub hints: Vec<String>,
    pub no_issues: bool,
    pub suggestions: Vec<ReviewSuggestion>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revised_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewLog {
    pub rounds: Vec<ReviewRound>,
    pub outcome: ReviewOutcome,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub problems: Vec<String>,
}

fn model_hash(model: &ProcessModel) -> String {
    sha256_hex(&write_text(model))
}

fn ask_reviewer(
    session: &mut Session<'_>,
    chain: &mut Chain,
    prompt: String,
    model: &ProcessModel,
    retries: u32,
) -> Result<Option<ReviewReply>, PhaseError> {
    let mut reply = session.ask(chain, prompt)?;
    let mut repairs = 0;
    loop {
        match parse_review_reply(&reply, model) {
            Ok(r) => return Ok(Some(r)),
            Err(_) if repairs >= retries => return Ok(None),
            Err(_) => {
                repairs += 1;
                reply = session.ask(chain, build_reviewer_repair_prompt())?;
            }
        }
    }
}

/// Review rounds: the reviewer looks for semantic problems and the expert
/// revises until the reviewer is satisfied, the model stops changing or the
/// round cap is reached.
pub fn run_reviewing(
    model: &ProcessModel,
    cfg: &PipelineConfig,
    session: &mut Session<'_>,
) -> Result<(ProcessModel, ReviewLog), PhaseError> {
    session.enter(Phase::Reviewing);
    let cats = categories();
    let mut current = model.clone();
    let mut rounds = Vec::new();
    let mut outcome = ReviewOutcome::CapReached;
    let mut problems = Vec::new();
    let mut reviewer = Chain::new(Role::TeamLeader, Role::ProcessReviewer);
    let mut expert = Chain::new(Role::TeamLeader, Role::ProcessDesignExpert);

    for round in 1..=cfg.max_review_rounds {
        let hash = model_hash(&current);
        let hints = deterministic_lint(&current);
        let prompt = build_review_prompt(&current, &cats, &hints);
        let mut record = ReviewRound {
            round,
            model_hash: hash.clone(),
            hints: hints.iter().map(ReviewSuggestion::to_line).collect(),
            no_issues: false,
            suggestions: Vec::new(),
            warnings: Vec::new(),
            revised_hash: None,
        };
        let reply = ask_reviewer(session, &mut reviewer, prompt, &current, cfg.max_parse_retries)?;
        let (suggestions, warnings) = match reply {
            None => {
                rounds.push(record);
                outcome = ReviewOutcome::ReviewerUnreadable;
                break;
            }
            Some(ReviewReply::NoIssues) => {
                record.no_issues = true;
                rounds.push(record);
                outcome = ReviewOutcome::NoIssues;
                break;
            }
            Some(ReviewReply::Suggestions { suggestions, warnings }) => (suggestions, warnings),
        };
        record.suggestions = suggestions.clone();
        record.warnings = warnings;
        if suggestions.is_empty() {
            // Every line named unknown ids; nothing actionable is left.
            rounds.push(record);
            outcome = ReviewOutcome::NoIssues;
            break;
        }
        let prompt = build_revision_prompt(&write_text(&current), &suggestions);
        match ask_for_model(session, &mut expert, prompt, cfg.max_parse_retries)? {
            Err(p) => {
                problems = p;
                rounds.push(record);
                outcome = ReviewOutcome::RevisionFailed;
                break;
            }
            Ok(revised) => {
                let revised_hash = model_hash(&revised);
                record.revised_hash = Some(revised_hash.clone());
                rounds.push(record);
                if revised_hash == hash {
                    outcome = ReviewOutcome::Stalled;
                    break;
                }
                current = revised;
            }
        }
    }
    Ok((current, ReviewLog { rounds, outcome, problems }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestLog {
    pub tool: String,
    /// One report per validation, in order.
    pub reports: Vec<ValidationReport>,
    pub fix_turns: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub text: String,
    /// The last model that parsed, if any.
    pub model: Option<ProcessModel>,
    pub report: ValidationReport,
    pub log: TestLog,
}

/// Validates the text and lets the expert fix reported problems, at most
/// `max_test_rounds` times.
pub fn run_testing(text: &str, cfg: &PipelineConfig, session: &mut Session<'_>) -> Result<TestOutcome, PhaseError> {
    session.enter(Phase::Testing);
    let tool = cfg
        .tools
        .get(&cfg.test_tool)
        .ok_or_else(|| PhaseError::Config(format!("no tool named `{}` is registered", cfg.test_tool)))?
        .clone();
    session.note(
        Role::ProcessReviewer,
        None,
        build_tool_selection(tool.name(), tool.description()),
    );
    let mut expert = Chain::new(Role::ProcessReviewer, Role::ProcessDesignExpert);
    let mut text = text.to_owned();
    let mut model = parse(&text).ok();
    let mut reports = Vec::new();
    let mut fix_turns = 0;
    loop {
        let report = tool.run(&text, &cfg.registry, cfg.validate_options);
        reports.push(report.clone());
        if report.clean || fix_turns >= cfg.max_test_rounds {
            break;
        }
        fix_turns += 1;
        let reply = session.ask(&mut expert, build_test_fix_prompt(&text, &report))?;
        text = match extract_model_block(&reply) {
            Ok(block) => block.to_owned(),
            Err(_) => reply.trim().to_owned(),
        };
        if let Ok(m) = parse(&text) {
            model = Some(m);
        }
    }
    let report = reports.last().cloned().expect("at least one validation");
    Ok(TestOutcome {
        text,
        model,
        report,
        log: TestLog {
            tool: tool.name().to_owned(),
            reports,
            fix_turns,
        },
    })
}

/// Runs the enabled phases in order.
pub fn run_pipeline(
    requirement: &str,
    cfg: &PipelineConfig,
    backend: &mut dyn ChatBackend,
) -> Result<PipelineResult, PipelineError> {
    let mut session = Session::new(backend, cfg.sampling);
    let fail = |session: &Session<'_>, error: PhaseError| PipelineError {
        phase: session.phase(),
        error,
        transcript: session.transcript.clone(),
    };
    cfg.check().map_err(|e| fail(&session, e))?;

    let mut reports = PhaseReports::default();
    let mut warnings = Vec::new();

    let mut model = run_generation(requirement, cfg, &mut session).map_err(|e| fail(&session, e))?;
    reports.generation_attempts = session.transcript.turns(Phase::Generation, Role::ProcessDesignExpert) as u32;

    if cfg.enabled(Phase::Refinement) {
        let (m, log) = run_refinement(&model, requirement, cfg, &mut session).map_err(|e| fail(&session, e))?;
        if log.fell_back {
            warnings.push(format!(
                "refinement failed, keeping the generated model: {}",
                log.problems.join("; ")
            ));
        }
        model = m;
        reports.refinement = Some(log);
    }

    if cfg.enabled(Phase::Reviewing) {
        let (m, log) = run_reviewing(&model, cfg, &mut session).map_err(|e| fail(&session, e))?;
        match log.outcome {
            ReviewOutcome::Stalled => warnings.push("review stalled: the expert returned the model unchanged".into()),
            ReviewOutcome::ReviewerUnreadable => {
                warnings.push("review stopped: the reviewer reply could not be interpreted".into())
            }
            ReviewOutcome::RevisionFailed => warnings.push(format!(
                "review stopped: the revised model could not be parsed: {}",
                log.problems.join("; ")
            )),
            ReviewOutcome::NoIssues | ReviewOutcome::CapReached => {}
        }
        model = m;
        reports.reviewing = Some(log);
    }

    let mut final_text = write_text(&model);
    let mut final_report = None;
    let mut clean = None;
    if cfg.enabled(Phase::Testing) {
        let outcome = run_testing(&final_text, cfg, &mut session).map_err(|e| fail(&session, e))?;
        match outcome.model {
            Some(m) if parse(&outcome.text).is_ok() => model = m,
            _ => warnings.push("the final text does not parse; final_model is the last readable model".into()),
        }
        final_text = outcome.text;
        clean = Some(outcome.report.clean);
        final_report = Some(outcome.report);
        reports.testing = Some(outcome.log);
    }

    Ok(PipelineResult {
        final_model: model,
        final_text,
        final_report,
        clean,
        reports,
        warnings,
        transcript: session.transcript,
    })
}
