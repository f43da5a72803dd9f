//! `mnemex` command line: run the strategy comparison, serve the curation API,
//! trigger decay, inspect a store, export the long-horizon curves.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage or input error.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use mnemex_core::sim::run::{compare_strategies_with, curve_csv, default_strategies};
use mnemex_core::sim::{simulate_all_add_curve, simulate_fixed_curve, simulate_hybrid_curve, Scenario, SimConfig};
use mnemex_core::{DecayConfig, EntryId, StrategyKind};
use mnemex_service::llm::LlmSummarizer;
use mnemex_service::{Engine, ServiceError};

pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const DEFAULT_SIM_OUT: &str = "mnemex-out";
pub const DEFAULT_CURVES_OUT: &str = "mnemex-curves";

#[derive(Debug, Parser)]
#[command(name = "mnemex", version, about = "Agent memory engine with utility-scored decay")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play a scenario against the memory strategies and write metrics.
    Simulate(SimulateArgs),
    /// Serve the HTTP/JSON curation API until Ctrl-C.
    Serve(ServeArgs),
    /// Run one decay pass on a persistent store and print the report.
    Decay(DecayArgs),
    /// Print entries or facts of a persistent store as JSON.
    Inspect(InspectArgs),
    /// Write the all_add, fixed and hybrid success curves as CSV.
    ExportCurves(CurveArgs),
}

/// Overrides of the decay configuration; unset flags keep the base value.
#[derive(Debug, Clone, Default, Args)]
pub struct DecayOverrides {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub theta_decay: Option<f64>,
}

impl DecayOverrides {
    pub fn is_empty(&self) -> bool {
        [self.alpha, self.beta, self.gamma, self.lambda, self.theta_decay]
            .iter()
            .all(Option::is_none)
    }

    pub fn apply(&self, base: &DecayConfig) -> Result<DecayConfig, CliError> {
        let mut c = base.clone();
        c.alpha = self.alpha.unwrap_or(c.alpha);
        c.beta = self.beta.unwrap_or(c.beta);
        c.gamma = self.gamma.unwrap_or(c.gamma);
        c.lambda = self.lambda.unwrap_or(c.lambda);
        c.theta_decay = self.theta_decay.unwrap_or(c.theta_decay);
        c.validate().map_err(CliError::usage)?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct StrategyOverrides {
    /// Hybrid: episodic hits beyond the window.
    #[arg(long)]
    pub k_e: Option<usize>,
    /// Hybrid: semantic facts.
    #[arg(long)]
    pub k_s: Option<usize>,
    /// Basic RAG: retrieved entries beyond the window.
    #[arg(long)]
    pub k: Option<usize>,
    /// Working-context window in turns, for every strategy.
    #[arg(long)]
    pub window: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum StrategyName {
    Window,
    Rag,
    Hybrid,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON file.
    pub scenario: PathBuf,
    #[arg(long, short, default_value = DEFAULT_SIM_OUT)]
    pub out: PathBuf,
    /// Strategies to run, in order (default: window,rag,hybrid).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub strategy: Vec<StrategyName>,
    /// Replaces the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub decay: DecayOverrides,
    #[command(flatten)]
    pub retrieval: StrategyOverrides,
}

#[derive(Debug, Args)]
pub struct StoreArgs {
    #[arg(long, env = "MNEMEX_DATA_DIR", default_value = mnemex_service::DEFAULT_DATA_DIR)]
    pub data_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "MNEMEX_ADDR", default_value = mnemex_service::DEFAULT_ADDR)]
    pub addr: String,
    #[command(flatten)]
    pub store: StoreArgs,
    /// Applied to the store's config (and logged) before serving.
    #[command(flatten)]
    pub decay: DecayOverrides,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    #[command(flatten)]
    pub store: StoreArgs,
    /// Applied to the store's config (and logged) before the run.
    #[command(flatten)]
    pub decay: DecayOverrides,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Entry id (`7` or `e7`).
    #[arg(conflicts_with_all = ["all", "facts"])]
    pub id: Option<String>,
    /// Every entry, in time order (the default).
    #[arg(long)]
    pub all: bool,
    /// Semantic facts instead of entries.
    #[arg(long, conflicts_with = "all")]
    pub facts: bool,
    #[command(flatten)]
    pub store: StoreArgs,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, short, default_value = DEFAULT_CURVES_OUT)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub turns: u64,
    /// Baseline success probability.
    #[arg(long, default_value_t = 0.80)]
    pub base: f64,
    /// Per-turn exponential decay of the all-add series.
    #[arg(long, default_value_t = 0.0005)]
    pub decay_rate: f64,
    /// Per-turn drift of the hybrid series toward 1.
    #[arg(long, default_value_t = 0.0003)]
    pub drift: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(e: impl fmt::Display) -> Self {
        Self { code: 2, message: e.to_string() }
    }

    pub fn internal(e: impl fmt::Display) -> Self {
        Self { code: 1, message: e.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::NotFound(_) | ServiceError::Invalid(_) | ServiceError::BadRequest(_) => Self::usage(e),
            _ => Self::internal(e),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Simulate(a) => simulate(&a, out),
        Command::Serve(a) => serve(&a),
        Command::Decay(a) => decay(&a, out),
        Command::Inspect(a) => inspect(&a, out),
        Command::ExportCurves(a) => export_curves(&a, out),
    }
}

pub fn load_scenario(path: &Path) -> CliResult<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read scenario {}: {e}", path.display())))?;
    Scenario::from_json(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// The harness defaults with `args`' overrides applied and validated.
pub fn strategies(args: &SimulateArgs) -> CliResult<Vec<StrategyKind>> {
    let names = if args.strategy.is_empty() {
        vec![StrategyName::Window, StrategyName::Rag, StrategyName::Hybrid]
    } else {
        args.strategy.clone()
    };
    let [window, rag, hybrid]: [StrategyKind; 3] = default_strategies().try_into().expect("three defaults");
    let r = &args.retrieval;
    names
        .into_iter()
        .map(|name| {
            let mut s = match name {
                StrategyName::Window => window.clone(),
                StrategyName::Rag => rag.clone(),
                StrategyName::Hybrid => hybrid.clone(),
            };
            match &mut s {
                StrategyKind::SlidingWindow { window_turns } => {
                    *window_turns = r.window.unwrap_or(*window_turns);
                }
                StrategyKind::BasicRag { k, window_turns } => {
                    *k = r.k.unwrap_or(*k);
                    *window_turns = r.window.unwrap_or(*window_turns);
                }
                StrategyKind::Hybrid {
                    k_episodic,
                    k_semantic,
                    window_turns,
                    decay_config,
                } => {
                    *k_episodic = r.k_e.unwrap_or(*k_episodic);
                    *k_semantic = r.k_s.unwrap_or(*k_semantic);
                    *window_turns = r.window.unwrap_or(*window_turns);
                    *decay_config = args.decay.apply(decay_config)?;
                }
            }
            s.validate().map_err(CliError::usage)?;
            Ok(s)
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> CliResult {
    std::fs::write(path, contents).map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> CliResult {
    std::fs::create_dir_all(dir).map_err(|e| CliError::internal(format!("cannot create {}: {e}", dir.display())))
}

fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> CliResult {
    let mut scenario = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    let strategies = strategies(args)?;
    let cmp = compare_strategies_with(&scenario, &strategies).map_err(CliError::internal)?;
    create_dir(&args.out)?;
    let csv = cmp.to_csv().map_err(CliError::internal)?;
    write_file(&args.out.join(METRICS_CSV), &csv)?;
    write_file(&args.out.join(METRICS_JSON), &cmp.to_json())?;
    for r in &cmp.reports {
        writeln!(
            out,
            "{:<15} completion {:>6.2}%  contradictions {:>6.2}%  avg tokens {:>8.1}",
            r.strategy.name(),
            r.task_completion_rate,
            r.contradiction_rate,
            r.avg_token_cost
        )
        .map_err(CliError::internal)?;
    }
    writeln!(out, "wrote {}", args.out.display()).map_err(CliError::internal)?;
    Ok(())
}

fn open_engine(store: &StoreArgs) -> CliResult<Engine> {
    let mut builder = Engine::builder().data_dir(&store.data_dir);
    if let Some(llm) = LlmSummarizer::from_env() {
        let llm = llm.map_err(|e| CliError::usage(format!("MNEMEX_LLM_PROMPT_FILE: {e}")))?;
        builder = builder.summarizer(Arc::new(llm));
    }
    Ok(builder.build()?)
}

fn apply_overrides(engine: &Engine, overrides: &DecayOverrides) -> CliResult {
    if overrides.is_empty() {
        return Ok(());
    }
    let current = engine.config();
    let next = overrides.apply(&current)?;
    if next != current {
        engine.set_config(next)?;
    }
    Ok(())
}

fn serve(args: &ServeArgs) -> CliResult {
    let engine = open_engine(&args.store)?;
    apply_overrides(&engine, &args.decay)?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(CliError::internal)?;
    rt.block_on(mnemex_service::serve(&args.addr, Arc::new(engine)))
        .map_err(|e| CliError::internal(format!("cannot serve on {}: {e}", args.addr)))
}

fn print_json(out: &mut dyn Write, value: &impl serde::Serialize) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(CliError::internal)?;
    writeln!(out, "{text}").map_err(CliError::internal)
}

fn decay(args: &DecayArgs, out: &mut dyn Write) -> CliResult {
    let engine = open_engine(&args.store)?;
    apply_overrides(&engine, &args.decay)?;
    let report = engine.run_decay()?;
    print_json(out, &report)
}

fn parse_id(raw: &str) -> CliResult<EntryId> {
    raw.strip_prefix('e')
        .unwrap_or(raw)
        .parse()
        .map(EntryId)
        .map_err(|_| CliError::usage(format!("invalid entry id {raw:?}")))
}

fn inspect(args: &InspectArgs, out: &mut dyn Write) -> CliResult {
    // reading a missing store must not create it
    let engine = if args.store.data_dir.exists() {
        open_engine(&args.store)?
    } else {
        Engine::in_memory()
    };
    if let Some(raw) = &args.id {
        return print_json(out, &engine.entry(parse_id(raw)?)?);
    }
    if args.facts {
        return print_json(out, &engine.facts());
    }
    print_json(out, &engine.state().episodic.get_all_in_time_order())
}

pub fn curve_config(args: &CurveArgs) -> CliResult<SimConfig> {
    let defaults = SimConfig::default();
    let c = SimConfig {
        turns: args.turns,
        avg_base_success: args.base,
        decay_rate: args.decay_rate,
        hybrid_drift: args.drift,
        all_add_clamp: defaults.all_add_clamp,
        hybrid_clamp: defaults.hybrid_clamp,
        seed: args.seed,
    };
    c.validate().map_err(CliError::usage)?;
    Ok(c)
}

pub const CURVE_FILES: [&str; 3] = ["all_add.csv", "fixed.csv", "hybrid.csv"];

fn export_curves(args: &CurveArgs, out: &mut dyn Write) -> CliResult {
    let config = curve_config(args)?;
    create_dir(&args.out)?;
    let series = [
        simulate_all_add_curve(&config),
        simulate_fixed_curve(&config),
        simulate_hybrid_curve(&config),
    ];
    for (name, points) in CURVE_FILES.iter().zip(&series) {
        let path = args.out.join(name);
        write_file(&path, &curve_csv(points).map_err(CliError::internal)?)?;
        writeln!(out, "wrote {} ({} rows)", path.display(), points.len()).map_err(CliError::internal)?;
    }
    Ok(())
}
