//! The `mao` command line.
//!
//! Settings come from an optional TOML file (`--config`), then the
//! `MAO_API_BASE`, `MAO_API_KEY` and `MAO_MODEL` environment variables, then
//! flags. Exit codes: 0 success or clean, 1 findings, 2 pipeline failure,
//! 3 usage, configuration or input errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diff::{self, exact_ged, solve, Algorithm, CostModel, DiffError, SolverParams};
use crate::dsl;
use crate::eval::{evaluate_case, load_case, load_graph};
use crate::interop::{export_xml, xml_to_model, ConvertError, RebuildError};
use crate::orchestrator::{
    run_pipeline, ChatBackend, HttpBackend, HttpConfig, Phase, PipelineConfig, ReplayBackend, DEFAULT_API_BASE,
    DEFAULT_MODEL, ENV_API_BASE, ENV_API_KEY, ENV_MODEL,
};
use crate::validator::{render_report, validate, ReportFormat, ValidateOptions, Validator};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_PIPELINE: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Pipeline(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Pipeline(_) => EXIT_PIPELINE,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Parser)]
#[command(name = "mao", version, about = "Generate, check, compare and convert BPMN process models")]
pub struct Cli {
    /// TOML file with default settings.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration to stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the multi-agent pipeline on a requirement.
    Generate(GenerateArgs),
    /// Check BPMN text for format errors.
    Validate(ValidateArgs),
    /// Graph edit distance between two models.
    Diff(DiffArgs),
    /// Convert between BPMN text and BPMN XML.
    Convert(ConvertArgs),
    /// Score candidate models of an evaluation case.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Replay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Bpmt,
    Bpmn,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CostArgs {
    #[arg(long)]
    pub w_del: Option<f64>,
    #[arg(long)]
    pub w_ins: Option<f64>,
    #[arg(long)]
    pub w_edge: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Requirement text, or a file containing it.
    #[arg(short, long)]
    pub requirement: String,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// JSONL script for the replay backend.
    #[arg(long, value_name = "FILE")]
    pub replay: Option<PathBuf>,
    #[arg(long)]
    pub api_base: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub no_refinement: bool,
    #[arg(long)]
    pub no_reviewing: bool,
    #[arg(long)]
    pub no_testing: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub file: PathBuf,
    /// Print the machine-readable report.
    #[arg(long)]
    pub json: bool,
    /// Report unknown tags and attributes as warnings.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args)]
pub struct DiffArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Run one algorithm instead of the whole suite.
    #[arg(long)]
    pub algo: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Exact distance by exhaustive search (small graphs only).
    #[arg(long, conflicts_with = "algo")]
    pub exact: bool,
    #[command(flatten)]
    pub cost: CostArgs,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    pub file: PathBuf,
    #[arg(long, value_enum)]
    pub to: Format,
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub case: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for `report.json` and `report.txt`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub cost: CostArgs,
}

/// Settings file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub backend: Option<BackendKind>,
    pub replay: Option<PathBuf>,
    pub api_base: Option<String>,
    pub api_key: Option<String>,
    pub model: Option<String>,
    pub seed: Option<u64>,
    pub w_del: Option<f64>,
    pub w_ins: Option<f64>,
    pub w_edge: Option<f64>,
    pub refinement: Option<bool>,
    pub reviewing: Option<bool>,
    pub testing: Option<bool>,
}

/// Values given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub backend: Option<BackendKind>,
    pub replay: Option<PathBuf>,
    pub api_base: Option<String>,
    pub model: Option<String>,
    pub seed: Option<u64>,
    pub w_del: Option<f64>,
    pub w_ins: Option<f64>,
    pub w_edge: Option<f64>,
    pub no_refinement: bool,
    pub no_reviewing: bool,
    pub no_testing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliConfig {
    pub backend: BackendKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replay: Option<PathBuf>,
    pub api_base: String,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "redact")]
    pub api_key: Option<String>,
    pub model: String,
    pub seed: u64,
    pub w_del: f64,
    pub w_ins: f64,
    pub w_edge: f64,
    pub refinement: bool,
    pub reviewing: bool,
    pub testing: bool,
}

fn redact<S: serde::Serializer>(_: &Option<String>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str("<redacted>")
}

impl CliConfig {
    /// Merges file, environment and flags; later sources win.
    pub fn resolve(
        file: Option<&Path>,
        env: &dyn Fn(&str) -> Option<String>,
        flags: &Overrides,
    ) -> Result<Self, CliError> {
        let f = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let cost = CostModel::default();
        let cfg = CliConfig {
            backend: flags.backend.or(f.backend).unwrap_or(BackendKind::Http),
            replay: flags.replay.clone().or(f.replay),
            api_base: flags
                .api_base
                .clone()
                .or_else(|| env(ENV_API_BASE))
                .or(f.api_base)
                .unwrap_or_else(|| DEFAULT_API_BASE.into()),
            api_key: env(ENV_API_KEY).or(f.api_key).filter(|k| !k.is_empty()),
            model: flags
                .model
                .clone()
                .or_else(|| env(ENV_MODEL))
                .or(f.model)
                .unwrap_or_else(|| DEFAULT_MODEL.into()),
            seed: flags.seed.or(f.seed).unwrap_or(DEFAULT_SEED),
            w_del: flags.w_del.or(f.w_del).unwrap_or(cost.w_del),
            w_ins: flags.w_ins.or(f.w_ins).unwrap_or(cost.w_ins),
            w_edge: flags.w_edge.or(f.w_edge).unwrap_or(cost.w_edge),
            refinement: !flags.no_refinement && f.refinement.unwrap_or(true),
            reviewing: !flags.no_reviewing && f.reviewing.unwrap_or(true),
            testing: !flags.no_testing && f.testing.unwrap_or(true),
        };
        cfg.cost().check().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }

    pub fn cost(&self) -> CostModel {
        CostModel {
            w_del: self.w_del,
            w_ins: self.w_ins,
            w_edge: self.w_edge,
            ..CostModel::default()
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        let mut p = PipelineConfig::default();
        for (on, phase) in [
            (self.refinement, Phase::Refinement),
            (self.reviewing, Phase::Reviewing),
            (self.testing, Phase::Testing),
        ] {
            if !on {
                p = p.without(phase);
            }
        }
        p
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

impl From<&CostArgs> for Overrides {
    fn from(c: &CostArgs) -> Self {
        Overrides {
            w_del: c.w_del,
            w_ins: c.w_ins,
            w_edge: c.w_edge,
            ..Overrides::default()
        }
    }
}

fn overrides(cmd: &Command) -> Overrides {
    match cmd {
        Command::Generate(a) => Overrides {
            backend: a.backend,
            replay: a.replay.clone(),
            api_base: a.api_base.clone(),
            model: a.model.clone(),
            no_refinement: a.no_refinement,
            no_reviewing: a.no_reviewing,
            no_testing: a.no_testing,
            ..Overrides::default()
        },
        Command::Diff(a) => Overrides {
            seed: a.seed,
            ..(&a.cost).into()
        },
        Command::Eval(a) => Overrides {
            seed: a.seed,
            ..(&a.cost).into()
        },
        Command::Validate(_) | Command::Convert(_) => Overrides::default(),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let env = |k: &str| std::env::var(k).ok();
    let stdout = std::io::stdout();
    match execute(&cli, &env, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, env: &dyn Fn(&str) -> Option<String>, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = CliConfig::resolve(cli.config.as_deref(), env, &overrides(&cli.command))?;
    if cli.verbose {
        eprintln!("# resolved configuration\n{}", cfg.to_toml());
    }
    match &cli.command {
        Command::Generate(a) => cmd_generate(a, &cfg),
        Command::Validate(a) => cmd_validate(a, out),
        Command::Diff(a) => cmd_diff(a, &cfg, out),
        Command::Convert(a) => cmd_convert(a, out),
        Command::Eval(a) => cmd_eval(a, &cfg, out),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    writeln!(out, "{}", text.trim_end_matches('\n')).map_err(|e| usage(format!("cannot write output: {e}")))
}

fn is_xml(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("bpmn" | "xml"))
}

pub fn cmd_generate(a: &GenerateArgs, cfg: &CliConfig) -> Result<i32, CliError> {
    let path = Path::new(&a.requirement);
    let requirement = if path.is_file() { read(path)? } else { a.requirement.clone() };
    if requirement.trim().is_empty() {
        return Err(usage("the requirement is empty"));
    }
    let mut backend: Box<dyn ChatBackend> = match cfg.backend {
        BackendKind::Replay => {
            let script = cfg
                .replay
                .as_ref()
                .ok_or_else(|| usage("the replay backend needs --replay FILE"))?;
            Box::new(ReplayBackend::from_path(script).map_err(|e| usage(format!("{}: {e}", script.display())))?)
        }
        BackendKind::Http => {
            let api_key = cfg
                .api_key
                .clone()
                .ok_or_else(|| usage(format!("{ENV_API_KEY} is not set; the http backend needs an API key")))?;
            Box::new(HttpBackend::new(HttpConfig {
                api_base: cfg.api_base.clone(),
                api_key: Some(api_key),
                model: cfg.model.clone(),
                ..HttpConfig::default()
            }))
        }
    };
    let pipeline = cfg.pipeline();
    std::fs::create_dir_all(&a.out).map_err(|e| usage(format!("cannot create {}: {e}", a.out.display())))?;
    let result = match run_pipeline(&requirement, &pipeline, backend.as_mut()) {
        Ok(r) => r,
        Err(e) => {
            write_file(&a.out.join("transcript.jsonl"), &e.transcript.to_jsonl())?;
            return Err(CliError::Pipeline(e.to_string()));
        }
    };
    let final_report = result.final_report.clone().unwrap_or_else(|| {
        Validator::new(pipeline.registry.clone(), pipeline.validate_options).validate(&result.final_text)
    });
    write_file(&a.out.join("model.bpmt"), &result.final_text)?;
    match export_xml(&result.final_model) {
        Ok(xml) => write_file(&a.out.join("model.bpmn"), &xml)?,
        Err(e) => eprintln!("warning: model.bpmn not written: {e}"),
    }
    write_file(&a.out.join("transcript.jsonl"), &result.transcript.to_jsonl())?;
    let report = serde_json::json!({
        "clean": final_report.clean,
        "final_report": final_report,
        "phases": result.reports,
        "warnings": result.warnings,
        "config": cfg,
    });
    write_file(
        &a.out.join("report.json"),
        &serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!("{}", render_report(&final_report, ReportFormat::Human));
    Ok(if final_report.clean { EXIT_OK } else { EXIT_FINDINGS })
}

pub fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let text = read(&a.file)?;
    let validator = Validator {
        options: ValidateOptions { lenient: a.lenient },
        ..Validator::default()
    };
    let report = if a.lenient { validator.validate(&text) } else { validate(&text) };
    let format = if a.json { ReportFormat::Machine } else { ReportFormat::Human };
    emit(out, &render_report(&report, format))?;
    Ok(if report.clean { EXIT_OK } else { EXIT_FINDINGS })
}

fn graph(path: &Path) -> Result<diff::FlatGraph, CliError> {
    load_graph(path, &mut Vec::new()).map_err(|e| usage(e.to_string()))
}

fn diff_error(e: DiffError) -> CliError {
    usage(e.to_string())
}

pub fn cmd_diff(a: &DiffArgs, cfg: &CliConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let g1 = graph(&a.a)?;
    let g2 = graph(&a.b)?;
    let cost = cfg.cost();
    let params = SolverParams::default();
    let json = if a.exact {
        exact_ged(&g1, &g2, &cost).map_err(diff_error)?.to_json()
    } else if let Some(name) = &a.algo {
        let alg: Algorithm = name.parse().map_err(diff_error)?;
        solve(&g1, &g2, &cost, alg, &params, cfg.seed).map_err(diff_error)?.to_json()
    } else {
        diff::distance_suite(&g1, &g2, &cost, &params, cfg.seed)
            .map_err(diff_error)?
            .to_json()
    };
    emit(out, &json)?;
    Ok(EXIT_OK)
}

pub fn cmd_convert(a: &ConvertArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let text = read(&a.file)?;
    let model = if is_xml(&a.file) {
        let (model, notes) = xml_to_model(&text).map_err(|e| match e {
            ConvertError::Rebuild(RebuildError::NonBlockStructured { .. }) => usage(format!(
                "{}: {e}; `mao diff` and `mao eval` accept this file as a graph",
                a.file.display()
            )),
            other => usage(format!("{}: {other}", a.file.display())),
        })?;
        for n in notes {
            eprintln!("warning: {n}");
        }
        model
    } else {
        dsl::parse(&text).map_err(|errs| {
            usage(format!(
                "{}: {}",
                a.file.display(),
                errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
            ))
        })?
    };
    let converted = match a.to {
        Format::Bpmt => dsl::serialize(&model).map_err(|e| usage(e.to_string()))?,
        Format::Bpmn => export_xml(&model).map_err(|e| usage(e.to_string()))?,
    };
    match &a.out {
        Some(path) => write_file(path, &converted)?,
        None => emit(out, &converted)?,
    }
    Ok(EXIT_OK)
}

pub fn cmd_eval(a: &EvalArgs, cfg: &CliConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    let case = load_case(&a.case).map_err(|e| usage(e.to_string()))?;
    for w in &case.warnings {
        eprintln!("warning: {w}");
    }
    let report = evaluate_case(&case, &cfg.cost(), &SolverParams::default(), cfg.seed).map_err(|e| usage(e.to_string()))?;
    let table = report.to_table();
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
        write_file(&dir.join("report.json"), &report.to_json())?;
        write_file(&dir.join("report.txt"), &table)?;
    }
    emit(out, &table)?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env_of(pairs: &'static [(&'static str, &'static str)]) -> impl Fn(&str) -> Option<String> {
        move |k| pairs.iter().find(|(n, _)| *n == k).map(|(_, v)| v.to_string())
    }

    #[test]
    fn flags_beat_env_beat_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("mao.toml");
        std::fs::write(&file, "model = \"from-file\"\napi_base = \"http://file\"\nseed = 5\nw_edge = 0.25\ntesting = false\n").unwrap();
        let env = env_of(&[("MAO_MODEL", "from-env")]);
        let flags = Overrides {
            model: Some("from-flag".into()),
            seed: Some(9),
            ..Overrides::default()
        };
        let cfg = CliConfig::resolve(Some(&file), &env, &flags).unwrap();
        assert_eq!(cfg.model, "from-flag");
        assert_eq!(cfg.api_base, "http://file");
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.w_edge, 0.25);
        assert!(!cfg.testing && cfg.reviewing);

        let cfg = CliConfig::resolve(Some(&file), &env, &Overrides::default()).unwrap();
        assert_eq!(cfg.model, "from-env");
        assert_eq!(cfg.seed, 5);
    }

    #[test]
    fn defaults_are_concrete() {
        let cfg = CliConfig::resolve(None, &|_| None, &Overrides::default()).unwrap();
        assert_eq!(cfg.backend, BackendKind::Http);
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.cost(), CostModel::default());
        assert_eq!(cfg.pipeline().phases_enabled.len(), 4);
    }

    #[test]
    fn bad_settings_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("mao.toml");
        std::fs::write(&file, "colour = \"blue\"\n").unwrap();
        let err = CliConfig::resolve(Some(&file), &|_| None, &Overrides::default()).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
        let flags = Overrides {
            w_del: Some(-1.0),
            ..Overrides::default()
        };
        assert!(CliConfig::resolve(None, &|_| None, &flags).is_err());
    }

    #[test]
    fn api_key_is_redacted() {
        let cfg = CliConfig::resolve(None, &env_of(&[("MAO_API_KEY", "sk-secret")]), &Overrides::default()).unwrap();
        assert_eq!(cfg.api_key.as_deref(), Some("sk-secret"));
        let shown = cfg.to_toml();
        assert!(!shown.contains("sk-secret"));
        assert!(shown.contains("<redacted>"));
    }
}
