//! The `foonforge` command line: generate, validate, evaluate, convert and
//! retrieve.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 IO error,
//! 3 replay fixture miss under `--strict`, 4 rejected input (parse errors,
//! validation violations, failed retrieval).

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use foonforge_core::client::{
    ClientError, GenerationParams, LiveClient, RecordingClient, ReplayClient, TextGenerator,
    UreqTransport,
};
use foonforge_core::eval::{compare_strategies, summarize_run, EvalError};
use foonforge_core::foon::{
    parse_foon_text, parse_task_tree_json, retrieve_task_tree, serialize_foon_text,
    serialize_task_tree_json, validate_graph, validate_task_tree, FoonError, NodeKey, ObjectNode,
    TaskTree, TaskTreeError, ValidationReport,
};
use foonforge_core::pipeline::{
    read_manifest, run_generation, HandleOptions, ManifestError, PipelineError, RunOptions,
    RunReport,
};
use foonforge_core::prompt::{load_examples, PromptError, PromptPlan, Strategy, Template};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_FIXTURE_MISS: i32 = 3;
pub const EXIT_REJECTED: i32 = 4;

pub const SUMMARY_CSV: &str = "summary.csv";

#[derive(Debug, Parser)]
#[command(name = "foonforge", version, about = "Generate, validate and evaluate FOON cooking task trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one task tree per dish in a manifest.
    Generate(GenerateArgs),
    /// Check a FOON text file or task-tree JSON file against the graph rules.
    Validate(ValidateArgs),
    /// Summarize run reports and compare strategies.
    Evaluate(EvaluateArgs),
    /// Convert between FOON text and task-tree JSON.
    Convert(ConvertArgs),
    /// Retrieve the smallest task tree for a goal from a FOON graph.
    Retrieve(RetrieveArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Strategy,
    /// Prompt template replacing the strategy's default.
    #[arg(long)]
    pub template: Option<PathBuf>,
    /// Directory of example task trees (example-based).
    #[arg(long)]
    pub examples: Option<PathBuf>,
    /// File holding the user instructions (user-guided).
    #[arg(long)]
    pub instructions: Option<PathBuf>,
    /// Replay fixture to answer prompts from.
    #[arg(long, conflicts_with = "live", required_unless_present = "live")]
    pub fixture: Option<PathBuf>,
    /// Send prompts to the live model endpoint.
    #[arg(long)]
    pub live: bool,
    /// With --live, also save every response to this replay fixture.
    #[arg(long, requires = "live")]
    pub record: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Strip a Markdown code fence around the response before parsing.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub lenient_json: bool,
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    /// Abort on the first replay fixture miss.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_output_tokens: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// FOON text.
    Foon,
    /// Task-tree JSON.
    Json,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub input: PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also apply the task-tree rules (acyclic, one goal, connected).
    #[arg(long)]
    pub task_tree: bool,
    /// Goal object for the task-tree rules, e.g. `egg[boiled,peeled]`.
    #[arg(long)]
    pub goal: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// One or more `run_report.json` files.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    /// Write the strategy comparison as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub to: Format,
    /// Goal object, required when converting FOON text to JSON.
    #[arg(long)]
    pub goal: Option<String>,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    /// FOON text file to search.
    pub graph: PathBuf,
    #[arg(long)]
    pub goal: String,
    /// Objects on hand, e.g. `--available water --available macaroni[raw]`.
    #[arg(long)]
    pub available: Vec<String>,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

fn io_failure(path: &Path, err: std::io::Error) -> Failure {
    Failure::new(EXIT_IO, format!("{}: {err}", path.display()))
}

impl From<ClientError> for Failure {
    fn from(err: ClientError) -> Self {
        let code = match &err {
            ClientError::FixtureMiss { .. } => EXIT_FIXTURE_MISS,
            ClientError::Io { .. } => EXIT_IO,
            ClientError::Fixture { .. } => EXIT_REJECTED,
            _ => EXIT_CONFIG,
        };
        Failure::new(code, err.to_string())
    }
}

impl From<PromptError> for Failure {
    fn from(err: PromptError) -> Self {
        let code = match &err {
            PromptError::MissingPath(_) | PromptError::Io { .. } => EXIT_IO,
            _ => EXIT_CONFIG,
        };
        Failure::new(code, err.to_string())
    }
}

impl From<ManifestError> for Failure {
    fn from(err: ManifestError) -> Self {
        let code = match &err {
            ManifestError::Io { .. } => EXIT_IO,
            _ => EXIT_REJECTED,
        };
        Failure::new(code, err.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(err: PipelineError) -> Self {
        match err {
            PipelineError::Manifest(e) => e.into(),
            PipelineError::Prompt(e) => e.into(),
            PipelineError::Client(e) => e.into(),
            PipelineError::Io { .. } => Failure::new(EXIT_IO, err.to_string()),
            PipelineError::Report { .. } => Failure::new(EXIT_REJECTED, err.to_string()),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(err: EvalError) -> Self {
        Failure::new(EXIT_REJECTED, err.to_string())
    }
}

fn rejected(err: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_REJECTED, err.to_string())
}

/// Standard output, standard error and the environment for one invocation.
pub struct Io<'a> {
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
    pub env: &'a dyn Fn(&str) -> Option<String>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, io: &mut Io<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let rendered = err.render().to_string();
            let sink: &mut dyn Write = if err.use_stderr() { io.stderr } else { io.stdout };
            let _ = write!(sink, "{rendered}");
            return code;
        }
    };
    match execute(cli.command, io) {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            let _ = writeln!(io.stderr, "foonforge: {}", failure.message);
            failure.code
        }
    }
}

pub fn execute(command: Command, io: &mut Io<'_>) -> Result<(), Failure> {
    match command {
        Command::Generate(args) => cmd_generate(&args, io),
        Command::Validate(args) => cmd_validate(&args, io),
        Command::Evaluate(args) => cmd_evaluate(&args, io),
        Command::Convert(args) => cmd_convert(&args, io),
        Command::Retrieve(args) => cmd_retrieve(&args, io),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| io_failure(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| io_failure(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_failure(path, e))
}

fn emit(io: &mut Io<'_>, output: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match output {
        Some(path) => write_file(path, contents),
        None => io
            .stdout
            .write_all(contents.as_bytes())
            .map_err(|e| Failure::new(EXIT_IO, format!("stdout: {e}"))),
    }
}

fn build_plan(args: &GenerateArgs, io: &mut Io<'_>) -> Result<PromptPlan, Failure> {
    let mut plan = PromptPlan::new(args.strategy);
    if let Some(path) = &args.template {
        plan = plan.with_template(Template::parse(&read(path)?)?);
    }
    match args.strategy {
        Strategy::ExampleBased => {
            let dir = args.examples.as_ref().ok_or_else(|| {
                Failure::new(EXIT_CONFIG, "--examples is required for example-based prompting")
            })?;
            let loaded = load_examples(dir)?;
            for (file, err) in &loaded.warnings {
                let _ = writeln!(io.stderr, "foonforge: skipping example {file}: {err}");
            }
            plan = plan.with_examples(loaded.trees);
        }
        Strategy::UserGuided => {
            let path = args.instructions.as_ref().ok_or_else(|| {
                Failure::new(EXIT_CONFIG, "--instructions is required for user-guided prompting")
            })?;
            plan = plan.with_instructions(read(path)?);
        }
        Strategy::Contextual => {}
    }
    Ok(plan)
}

fn generation_params(args: &GenerateArgs) -> Result<GenerationParams, Failure> {
    let mut params = GenerationParams::default();
    if let Some(model) = &args.model {
        params.model_name = model.clone();
    }
    if let Some(t) = args.temperature {
        params.temperature = t;
    }
    if let Some(n) = args.max_output_tokens {
        params.max_output_tokens = n;
    }
    params.validate()?;
    Ok(params)
}

fn cmd_generate(args: &GenerateArgs, io: &mut Io<'_>) -> Result<(), Failure> {
    if args.concurrency == 0 {
        return Err(Failure::new(EXIT_CONFIG, "--concurrency must be at least 1"));
    }
    let params = generation_params(args)?;
    let client: Box<dyn TextGenerator> = if args.live {
        let live = LiveClient::from_lookup(io.env, UreqTransport)?;
        match &args.record {
            Some(path) => Box::new(RecordingClient::new(live, path)),
            None => Box::new(live),
        }
    } else {
        let path = args.fixture.as_ref().expect("clap requires --fixture without --live");
        Box::new(ReplayClient::from_path(path)?)
    };

    let manifest = read_manifest(&args.manifest)?;
    let plan = build_plan(args, io)?;
    let options = RunOptions {
        handle: HandleOptions {
            lenient_json: args.lenient_json,
        },
        concurrency: args.concurrency,
        strict_fixtures: args.strict,
    };
    let report = run_generation(&manifest, &plan, &params, client.as_ref(), &args.out, options)?;

    let summary = summarize_run(&report);
    write_file(&args.out.join(SUMMARY_CSV), &summary.to_csv())?;
    let text = format!(
        "{}counts: {} {} {}\n",
        summary.to_text(),
        report.total,
        report.json_ok,
        report.text_fallback
    );
    emit(io, None, &text)
}

fn infer_format(path: &Path, explicit: Option<Format>) -> Format {
    explicit.unwrap_or_else(|| {
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Format::Json
        } else {
            Format::Foon
        }
    })
}

fn parse_goal(label: &str) -> Result<ObjectNode, Failure> {
    ObjectNode::parse_label(label).map_err(|e| Failure::new(EXIT_CONFIG, format!("--goal: {e}")))
}

fn report_violations(io: &mut Io<'_>, path: &Path, report: &ValidationReport) -> Result<(), Failure> {
    if report.ok() {
        emit(io, None, &format!("{}: ok\n", path.display()))
    } else {
        emit(io, None, &format!("{}: {} violation(s)\n{report}\n", path.display(), report.violations().len()))?;
        Err(Failure::new(EXIT_REJECTED, format!("{} failed validation", path.display())))
    }
}

fn cmd_validate(args: &ValidateArgs, io: &mut Io<'_>) -> Result<(), Failure> {
    let source = read(&args.input)?;
    match infer_format(&args.input, args.format) {
        Format::Json => match parse_task_tree_json(&source) {
            Ok(_) => report_violations(io, &args.input, &ValidationReport::from_violations(vec![])),
            Err(TaskTreeError::Structural(report)) => report_violations(io, &args.input, &report),
            Err(err) => Err(rejected(format!("{}: {err}", args.input.display()))),
        },
        Format::Foon => {
            let graph = parse_foon_text(&source)
                .map_err(|e| rejected(format!("{}: {e}", args.input.display())))?;
            let report = match &args.goal {
                Some(label) => validate_task_tree(&graph, &parse_goal(label)?),
                None => validate_graph(&graph, args.task_tree),
            };
            report_violations(io, &args.input, &report)
        }
    }
}

fn cmd_evaluate(args: &EvaluateArgs, io: &mut Io<'_>) -> Result<(), Failure> {
    let mut runs: BTreeMap<Strategy, Vec<RunReport>> = BTreeMap::new();
    let mut text = String::new();
    for path in &args.reports {
        let report = RunReport::load(path)?;
        text.push_str(&format!("== {} ({})\n", path.display(), report.strategy));
        text.push_str(&summarize_run(&report).to_text());
        text.push('\n');
        runs.entry(report.strategy).or_default().push(report);
    }
    let comparison = compare_strategies(&runs)?;
    text.push_str(&comparison.to_text());
    if let Some(path) = &args.csv {
        write_file(path, &comparison.to_csv())?;
    }
    emit(io, None, &text)
}

fn cmd_convert(args: &ConvertArgs, io: &mut Io<'_>) -> Result<(), Failure> {
    let source = read(&args.input)?;
    let from = if args.to == Format::Json { Format::Foon } else { Format::Json };
    let at = |e: &dyn std::fmt::Display| rejected(format!("{}: {e}", args.input.display()));
    let converted = match from {
        Format::Foon => {
            let label = args.goal.as_deref().ok_or_else(|| {
                Failure::new(EXIT_CONFIG, "--goal is required to convert FOON text to JSON")
            })?;
            let graph = parse_foon_text(&source).map_err(|e: FoonError| at(&e))?;
            let tree = TaskTree::new(graph, parse_goal(label)?).map_err(|r| at(&r))?;
            serialize_task_tree_json(&tree)
        }
        Format::Json => {
            let tree = parse_task_tree_json(&source).map_err(|e| at(&e))?;
            serialize_foon_text(tree.graph())
        }
    };
    emit(io, args.output.as_deref(), &converted)
}

fn cmd_retrieve(args: &RetrieveArgs, io: &mut Io<'_>) -> Result<(), Failure> {
    let source = read(&args.graph)?;
    let graph = parse_foon_text(&source).map_err(|e| rejected(format!("{}: {e}", args.graph.display())))?;
    let goal = parse_goal(&args.goal)?;
    let available = args
        .available
        .iter()
        .map(|label| NodeKey::parse_label(label))
        .collect::<Result<BTreeSet<_>, _>>()
        .map_err(|e| Failure::new(EXIT_CONFIG, format!("--available: {e}")))?;
    let tree = retrieve_task_tree(&graph, &goal, &available).map_err(rejected)?;
    emit(io, args.output.as_deref(), &serialize_task_tree_json(&tree))
}
