use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ontoclean_core::eval::{
    load_benchmark, pool_reports, render_report, run_trials, write_report, AccuracyReport, ReportFormat,
    BENCHMARK_NAMES, DEFAULT_TRIALS,
};
use ontoclean_core::labeler::{
    format_labels, label_ontology, set_max_in_flight, LlmConfig, PromptConfig, PromptStrategy, Representation,
};
use ontoclean_core::{
    check_all, check_constraints, parse_taxonomy, random_spanning_tree, to_flat_text, to_hierarchical_text, Labeling,
    Taxonomy, TaxonomyFormat,
};

use crate::api::{self, AppState};
use crate::config::{Config, DEFAULT_PORT};
use crate::session::SessionStore;

#[derive(Debug, Parser)]
#[command(
    name = "ontoclean",
    version,
    about = "OntoClean meta-property labelling and checking"
)]
pub struct Cli {
    /// TOML configuration file (defaults to $ONTOCLEAN_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Log more (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a labeling against the inheritance constraints.
    Check(CheckArgs),
    /// Print the flat or hierarchical text rendering of a taxonomy.
    Render(RenderArgs),
    /// Ask an LLM to label a taxonomy.
    Label(LabelArgs),
    /// Run repeated labelling trials against the bundled benchmarks.
    Eval(EvalArgs),
    /// Serve the review-session HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub taxonomy: PathBuf,
    /// Labeling JSON: class id -> {"I": "+", ...}.
    pub labels: PathBuf,
    /// Taxonomy format; inferred from the file extension when omitted.
    #[arg(long)]
    pub format: Option<TaxonomyFormat>,
    /// Also check sortal individuation.
    #[arg(long)]
    pub sortal: bool,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("representation").required(true).args(["flat", "hier"])))]
pub struct RenderArgs {
    pub taxonomy: PathBuf,
    #[arg(long)]
    pub format: Option<TaxonomyFormat>,
    #[arg(long)]
    pub flat: bool,
    #[arg(long)]
    pub hier: bool,
    /// Spanning-tree seed for --hier.
    #[arg(long, default_value_t = 0, requires = "hier")]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Zero,
    Incontext,
}

impl From<StrategyArg> for PromptStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Zero => Self::ZeroShot,
            StrategyArg::Incontext => Self::InContext,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReprArg {
    Flat,
    Hier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct LlmArgs {
    /// Chat-completions base URL, or fixture:<dir> for canned replies. For
    /// `eval`, `{benchmark}` is replaced by each benchmark name.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// Concurrent LLM requests allowed.
    #[arg(long)]
    pub max_in_flight: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    pub taxonomy: PathBuf,
    #[arg(long)]
    pub format: Option<TaxonomyFormat>,
    #[arg(long, value_enum, default_value = "zero")]
    pub strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "flat")]
    pub representation: ReprArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub model: Option<String>,
    /// Extra instructions placed before the ontology.
    #[arg(long)]
    pub guidance: Option<String>,
    /// Write the labeling JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub llm: LlmArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// pizza, upper or all (per-benchmark reports plus pooled ones).
    #[arg(long, default_value = "all")]
    pub benchmark: String,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    /// Repeatable; both strategies when omitted.
    #[arg(long, value_enum)]
    pub strategy: Vec<StrategyArg>,
    /// Repeatable; both representations when omitted.
    #[arg(long, value_enum)]
    pub representation: Vec<ReprArg>,
    /// Repeatable; the configured model when omitted.
    #[arg(long)]
    pub model: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    #[command(flatten)]
    pub llm: LlmArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: std::net::IpAddr,
    /// Where sessions are saved and loaded.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

const BENCHMARK_PLACEHOLDER: &str = "{benchmark}";

/// Exit status for input or runtime errors; 1 is reserved for `check`
/// finding violations.
const EXIT_ERROR: u8 = 2;

pub fn run(cli: Cli) -> ExitCode {
    init_logging(cli.verbose);
    let outcome = Config::load(cli.config.as_deref())
        .map_err(anyhow::Error::from)
        .and_then(|config| match cli.command {
            Command::Check(a) => check(a),
            Command::Render(a) => render(a).map(|()| ExitCode::SUCCESS),
            Command::Label(a) => label(a, &config).map(|()| ExitCode::SUCCESS),
            Command::Eval(a) => eval(a, &config).map(|()| ExitCode::SUCCESS),
            Command::Serve(a) => serve(a, &config).map(|()| ExitCode::SUCCESS),
        });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .try_init();
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn read_taxonomy(path: &Path, format: Option<TaxonomyFormat>) -> anyhow::Result<Taxonomy> {
    let format = format.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some("json") => TaxonomyFormat::Json,
        _ => TaxonomyFormat::Indented,
    });
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_taxonomy(&text, format).with_context(|| format!("parsing {}", path.display()))
}

fn read_labeling(path: &Path) -> anyhow::Result<Labeling> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn check(a: CheckArgs) -> anyhow::Result<ExitCode> {
    let t = read_taxonomy(&a.taxonomy, a.format)?;
    let l = read_labeling(&a.labels)?;
    let violations = if a.sortal {
        check_all(&t, &l)?
    } else {
        check_constraints(&t, &l)?
    };
    emit(&(serde_json::to_string_pretty(&violations)? + "\n"))?;
    Ok(if violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn render(a: RenderArgs) -> anyhow::Result<()> {
    let t = read_taxonomy(&a.taxonomy, a.format)?;
    let text = if a.hier {
        to_hierarchical_text(&random_spanning_tree(&t, a.seed))
    } else {
        to_flat_text(&t)
    };
    emit(&(text + "\n"))
}

fn llm_config(config: &Config, args: &LlmArgs, model: Option<&str>) -> anyhow::Result<LlmConfig> {
    let mut lc = config.llm_config(args.endpoint.as_deref(), model)?;
    if let Some(r) = args.max_retries {
        lc.max_retries = r;
    }
    if let Some(n) = args.max_in_flight.or(config.llm.max_in_flight) {
        if n == 0 {
            bail!("--max-in-flight must be at least 1");
        }
        set_max_in_flight(n);
    }
    lc.validate()?;
    Ok(lc)
}

fn representation(r: ReprArg, seed: u64) -> Representation {
    match r {
        ReprArg::Flat => Representation::Flat,
        ReprArg::Hier => Representation::Hierarchical { seed },
    }
}

fn label(a: LabelArgs, config: &Config) -> anyhow::Result<()> {
    let t = read_taxonomy(&a.taxonomy, a.format)?;
    let lc = llm_config(config, &a.llm, a.model.as_deref())?;
    let mut pc = PromptConfig::new(a.strategy.into(), representation(a.representation, a.seed));
    pc.guidance = a.guidance;
    let result = label_ontology(&t, &pc, &lc)?;
    for w in &result.warnings {
        eprintln!("warning: response line {}: {}", w.line, w.reason);
    }
    eprintln!(
        "labelled {} of {} classes in {} attempt(s)",
        result.labelled_classes(),
        t.len(),
        result.attempts
    );
    let json = serde_json::to_string_pretty(&result.labeling)? + "\n";
    match a.out {
        Some(path) => std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?,
        None => emit(&json)?,
    }
    tracing::debug!(response = %format_labels(&result.labeling, &t), "parsed labels");
    Ok(())
}

fn eval(a: EvalArgs, config: &Config) -> anyhow::Result<()> {
    let names: Vec<&str> = match a.benchmark.as_str() {
        "all" => BENCHMARK_NAMES.to_vec(),
        name => vec![name],
    };
    let strategies = if a.strategy.is_empty() {
        vec![StrategyArg::Zero, StrategyArg::Incontext]
    } else {
        a.strategy.clone()
    };
    let reprs = if a.representation.is_empty() {
        vec![ReprArg::Flat, ReprArg::Hier]
    } else {
        a.representation.clone()
    };
    let models: Vec<Option<&str>> = if a.model.is_empty() {
        vec![None]
    } else {
        a.model.iter().map(|m| Some(m.as_str())).collect()
    };

    let mut per_benchmark: Vec<Vec<AccuracyReport>> = Vec::new();
    let mut configs = Vec::new();
    for name in &names {
        let b = load_benchmark(name)?;
        let llm = LlmArgs {
            endpoint: a.llm.endpoint.as_ref().map(|e| e.replace(BENCHMARK_PLACEHOLDER, name)),
            ..a.llm.clone()
        };
        configs.clear();
        for model in &models {
            let lc = llm_config(config, &llm, *model)?;
            for &s in &strategies {
                for &r in &reprs {
                    configs.push((PromptConfig::new(s.into(), representation(r, 0)), lc.clone()));
                }
            }
        }
        eprintln!("{name}: {} configuration(s) x {} trial(s)", configs.len(), a.trials);
        per_benchmark.push(run_trials(&b, &configs, a.trials)?);
    }
    let mut reports: Vec<AccuracyReport> = per_benchmark.concat();
    if names.len() > 1 {
        for (i, (pc, lc)) in configs.iter().enumerate() {
            let parts: Vec<AccuracyReport> = per_benchmark.iter().map(|r| r[i].clone()).collect();
            let descriptor = format!("all|{}|{}|{}", lc.model, pc.strategy.name(), pc.representation.name());
            reports.push(pool_reports(descriptor, &parts));
        }
    }

    let format = match a.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Json => ReportFormat::Json,
    };
    match a.out {
        Some(path) => write_report(&reports, &path, format)?,
        None => emit(&render_report(&reports, format)?)?,
    }
    Ok(())
}

fn serve(a: ServeArgs, config: &Config) -> anyhow::Result<()> {
    let port = a.port.or(config.server.port).unwrap_or(DEFAULT_PORT);
    let data_dir = a.data_dir.or_else(|| config.server.data_dir.clone());
    if let Some(n) = config.llm.max_in_flight {
        set_max_in_flight(n);
    }
    let default_llm = config.llm_config(None, None).ok();
    if default_llm.is_none() {
        tracing::warn!("no default LLM configured; label runs must pass their own llm settings");
    }
    let state = AppState::new(SessionStore::new(data_dir), default_llm);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(api::serve(state, (a.bind, port).into()))?;
    Ok(())
}
