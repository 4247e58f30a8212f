//! Command-line front end for the diagnosis engine.
//!
//! Subcommands cover the whole pipeline: ingest metric files, run detection,
//! manage the experience graph, diagnose an event through the (mock or
//! remote) LLM, generate synthetic scenarios, and score the pipeline.
//! Diagnostics go to stderr; results go to stdout or `--out`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use omx_core::anomaly::{detect, parse_model, AnomalyEvent, AnomalyModel};
use omx_core::config::EngineConfig;
use omx_core::diagnose::{build_prompt, parse_report, validate_evidence, LlmClient, LlmMode};
use omx_core::eval::{run_suite, summary_to_csv, PipelineDiagnoser, SuiteOptions};
use omx_core::evolution::evolve;
use omx_core::graph::{ExperienceGraph, LocalizeQuery, VertexKind};
use omx_core::seeds;
use omx_core::simulate::{self, load_catalog, series_to_jsonl, Scenario};
use omx_core::store::{DatabaseKind, IngestFormat, MetricStore};
use omx_core::tools::{ToolParams, ToolRegistry};
use omx_core::Timestamp;

#[derive(Parser)]
#[command(
    name = "omx",
    version,
    about = "Experience-graph database O&M diagnosis engine"
)]
struct Cli {
    /// Configuration file (JSON); defaults to $OMX_CONFIG or built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Emit machine-readable line-delimited JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest metric record files into the data directory.
    Ingest {
        /// JSONL or CSV files of {metric_id, ts, value} records.
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Force a format instead of inferring from the extension.
        #[arg(long, value_parser = parse_format)]
        format: Option<IngestFormat>,
    },
    /// Evaluate all anomaly models at an instant and record fired events.
    Detect {
        /// Evaluation instant (unix seconds).
        #[arg(long)]
        now: Timestamp,
        /// Also write the fired events to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Manage the experience graph.
    Graph {
        #[command(subcommand)]
        action: GraphAction,
    },
    /// Diagnose a detected event through the LLM pipeline.
    Diagnose {
        /// Event id as printed by detect (model_id:fired_at).
        #[arg(long)]
        event: String,
        /// Dump the diagnosis context JSON next to the report.
        #[arg(long)]
        dump_context: bool,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        llm: LlmArgs,
    },
    /// Generate a synthetic scenario into a directory.
    Simulate {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7200)]
        duration: u32,
        #[arg(long, default_value_t = 30)]
        cadence: u32,
        /// Scenario catalog file; defaults to the built-in catalog.
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Run the evaluation suite over the scenario catalog.
    Evaluate {
        /// Scenario catalog file; defaults to the built-in catalog.
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Seeds, either `a..b` (inclusive) or a comma list.
        #[arg(long, default_value = "1..3")]
        seeds: String,
        /// Write the per-case CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        llm: LlmArgs,
    },
    /// Run diagnostic tools.
    Tool {
        #[command(subcommand)]
        action: ToolAction,
    },
}

#[derive(Subcommand)]
enum GraphAction {
    /// Build the graph from the model definitions and save it.
    Build {
        /// Save here instead of the configured graph file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Add enrichment edges (shared tags, similar metric profiles).
    Enrich {
        #[arg(long, default_value_t = 0.85)]
        sim_threshold: f64,
    },
    /// Print per-kind vertex counts and edge totals.
    Stats,
    /// List vertices matching conjunctive filters.
    Query {
        #[arg(long, value_parser = parse_kind)]
        kind: Vec<VertexKind>,
        #[arg(long)]
        tag: Vec<String>,
        #[arg(long, value_parser = parse_database)]
        database: Option<DatabaseKind>,
        #[arg(long)]
        prefix: Option<String>,
    },
    /// Re-save the configured graph in canonical form.
    Save {
        #[arg(long)]
        out: PathBuf,
    },
    /// Load and validate a graph file.
    Load { path: PathBuf },
}

#[derive(Subcommand)]
enum ToolAction {
    /// Execute one registered tool against the ingested data.
    Run {
        id: String,
        /// Tool parameter as key=value (numbers parsed when possible).
        #[arg(long = "param")]
        params: Vec<String>,
        /// Evaluation instant; defaults to the newest ingested timestamp.
        #[arg(long)]
        at: Option<Timestamp>,
    },
}

#[derive(Args, Clone)]
struct LlmArgs {
    /// Completion mode.
    #[arg(long = "llm-mode", value_parser = parse_llm_mode)]
    mode: Option<LlmMode>,
    /// Chat-completions endpoint URL for remote mode.
    #[arg(long = "llm-url")]
    url: Option<String>,
    #[arg(long = "llm-model")]
    model: Option<String>,
    /// Request timeout in seconds.
    #[arg(long = "llm-timeout")]
    timeout: Option<u64>,
}

fn parse_format(s: &str) -> Result<IngestFormat, String> {
    match s.to_lowercase().as_str() {
        "jsonl" => Ok(IngestFormat::Jsonl),
        "csv" => Ok(IngestFormat::Csv),
        other => Err(format!("unknown format {other}; expected jsonl or csv")),
    }
}

fn parse_kind(s: &str) -> Result<VertexKind, String> {
    match s.to_lowercase().as_str() {
        "trigger" => Ok(VertexKind::Trigger),
        "metric" => Ok(VertexKind::Metric),
        "experience" => Ok(VertexKind::Experience),
        "tool" => Ok(VertexKind::Tool),
        "tag" => Ok(VertexKind::Tag),
        "auxiliary" => Ok(VertexKind::Auxiliary),
        other => Err(format!("unknown vertex kind {other}")),
    }
}

fn parse_database(s: &str) -> Result<DatabaseKind, String> {
    match s.to_lowercase().as_str() {
        "oracle" => Ok(DatabaseKind::Oracle),
        "mysql" => Ok(DatabaseKind::MySql),
        "postgresql" | "postgres" => Ok(DatabaseKind::PostgreSql),
        "dm8" => Ok(DatabaseKind::Dm8),
        "generic" => Ok(DatabaseKind::Generic),
        other => Err(format!("unknown database {other}")),
    }
}

fn parse_llm_mode(s: &str) -> Result<LlmMode, String> {
    match s.to_lowercase().as_str() {
        "remote" => Ok(LlmMode::Remote),
        "mock" => Ok(LlmMode::Mock),
        other => Err(format!("unknown llm mode {other}; expected remote or mock")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli_path: &Option<PathBuf>) -> Result<EngineConfig> {
    let path = cli_path
        .clone()
        .or_else(|| std::env::var_os("OMX_CONFIG").map(PathBuf::from));
    match path {
        Some(p) => {
            EngineConfig::load(&p).with_context(|| format!("loading config {}", p.display()))
        }
        None => Ok(EngineConfig::default()),
    }
}

fn load_models(cfg: &EngineConfig) -> Result<Vec<AnomalyModel>> {
    let dir = &cfg.paths.models_dir;
    if dir.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect();
        if !entries.is_empty() {
            entries.sort();
            let mut models = Vec::new();
            for path in entries {
                let text = std::fs::read_to_string(&path)?;
                let model =
                    parse_model(&text).map_err(|e| anyhow!("model {}: {e}", path.display()))?;
                models.push(model);
            }
            return Ok(models);
        }
    }
    Ok(seeds::seed_models())
}

fn store_path(cfg: &EngineConfig) -> PathBuf {
    cfg.paths.data_dir.join("metrics.jsonl")
}

fn events_path(cfg: &EngineConfig) -> PathBuf {
    cfg.paths.data_dir.join("events.jsonl")
}

fn load_store(cfg: &EngineConfig) -> Result<MetricStore> {
    let mut store = MetricStore::with_trend_config(cfg.trend.clone());
    let path = store_path(cfg);
    if path.exists() {
        let text = std::fs::read_to_string(&path)?;
        store
            .ingest_str(&text, IngestFormat::Jsonl)
            .map_err(|e| anyhow!("corrupt store file {}: {e}", path.display()))?;
    }
    Ok(store)
}

fn save_store(cfg: &EngineConfig, store: &MetricStore) -> Result<()> {
    std::fs::create_dir_all(&cfg.paths.data_dir)?;
    let mut out = String::new();
    for series in store.all_series() {
        for p in &series.points {
            out.push_str(&serde_json::to_string(p)?);
            out.push('\n');
        }
    }
    std::fs::write(store_path(cfg), out)?;
    Ok(())
}

fn load_events(cfg: &EngineConfig) -> Result<Vec<AnomalyEvent>> {
    let path = events_path(cfg);
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(&path)?;
    let mut events = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        events.push(serde_json::from_str(line)?);
    }
    Ok(events)
}

fn save_events(cfg: &EngineConfig, events: &[AnomalyEvent]) -> Result<()> {
    std::fs::create_dir_all(&cfg.paths.data_dir)?;
    let mut out = String::new();
    for event in events {
        out.push_str(&serde_json::to_string(event)?);
        out.push('\n');
    }
    std::fs::write(events_path(cfg), out)?;
    Ok(())
}

fn load_graph(cfg: &EngineConfig, models: &[AnomalyModel]) -> Result<(ExperienceGraph, bool)> {
    if cfg.paths.graph_file.exists() {
        Ok((ExperienceGraph::load(&cfg.paths.graph_file)?, true))
    } else {
        eprintln!(
            "graph file {} not found; building from models in memory",
            cfg.paths.graph_file.display()
        );
        Ok((ExperienceGraph::init_from_models(models)?, false))
    }
}

fn write_result(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(path, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.config)?;
    match cli.command {
        Command::Ingest { files, format } => cmd_ingest(&cfg, &files, format),
        Command::Detect { now, out } => cmd_detect(&cfg, now, &out, cli.json),
        Command::Graph { action } => cmd_graph(&cfg, action, cli.json),
        Command::Diagnose {
            event,
            dump_context,
            out,
            llm,
        } => cmd_diagnose(&cfg, &event, dump_context, &out, &llm),
        Command::Simulate {
            scenario,
            seed,
            out,
            duration,
            cadence,
            catalog,
        } => cmd_simulate(&scenario, seed, &out, duration, cadence, &catalog),
        Command::Evaluate {
            catalog,
            seeds,
            out,
            llm,
        } => cmd_evaluate(&cfg, &catalog, &seeds, &out, &llm),
        Command::Tool { action } => cmd_tool(&cfg, action, cli.json),
    }
}

fn cmd_ingest(cfg: &EngineConfig, files: &[PathBuf], format: Option<IngestFormat>) -> Result<()> {
    let mut store = load_store(cfg)?;
    let mut total = 0;
    for file in files {
        let text =
            std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
        let fmt = format.unwrap_or_else(|| {
            if file.extension().is_some_and(|e| e == "csv") {
                IngestFormat::Csv
            } else {
                IngestFormat::Jsonl
            }
        });
        let count = store
            .ingest_str(&text, fmt)
            .map_err(|e| anyhow!("{}: {e}", file.display()))?;
        eprintln!("{}: {count} records", file.display());
        total += count;
    }
    save_store(cfg, &store)?;
    println!("{total}");
    Ok(())
}

fn cmd_detect(cfg: &EngineConfig, now: Timestamp, out: &Option<PathBuf>, json: bool) -> Result<()> {
    let store = load_store(cfg)?;
    let models = load_models(cfg)?;
    let outcome = detect(&models, &store, now);
    for diag in &outcome.diagnostics {
        eprintln!("model {} at {}: {}", diag.model_id, diag.at, diag.error);
    }
    let mut events = load_events(cfg)?;
    for event in &outcome.events {
        if !events
            .iter()
            .any(|e: &AnomalyEvent| e.event_id() == event.event_id())
        {
            events.push(event.clone());
        }
    }
    events.sort_by_key(|e| e.event_id());
    save_events(cfg, &events)?;

    let mut text = String::new();
    for event in &outcome.events {
        if json {
            text.push_str(&serde_json::to_string(event)?);
            text.push('\n');
        } else {
            text.push_str(&format!(
                "event {} window=[{},{}] evidence={} history={:?}\n",
                event.event_id(),
                event.window.0,
                event.window.1,
                event.evidence.len(),
                event.history
            ));
        }
    }
    if outcome.events.is_empty() {
        eprintln!("no anomaly fired at {now}");
    }
    write_result(out, &text)
}

fn cmd_graph(cfg: &EngineConfig, action: GraphAction, json: bool) -> Result<()> {
    match action {
        GraphAction::Build { out } => {
            let models = load_models(cfg)?;
            let graph = ExperienceGraph::init_from_models(&models)?;
            let path = out.unwrap_or_else(|| cfg.paths.graph_file.clone());
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            graph.save(&path)?;
            eprintln!(
                "built graph from {} models -> {}",
                models.len(),
                path.display()
            );
            print_stats(&graph, json)
        }
        GraphAction::Enrich { sim_threshold } => {
            let models = load_models(cfg)?;
            let (mut graph, _) = load_graph(cfg, &models)?;
            let store = load_store(cfg)?;
            let added = graph.enrich(&store, sim_threshold);
            if let Some(parent) = cfg.paths.graph_file.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            graph.save(&cfg.paths.graph_file)?;
            println!("{added}");
            Ok(())
        }
        GraphAction::Stats => {
            let models = load_models(cfg)?;
            let (graph, _) = load_graph(cfg, &models)?;
            print_stats(&graph, json)
        }
        GraphAction::Query {
            kind,
            tag,
            database,
            prefix,
        } => {
            let models = load_models(cfg)?;
            let (graph, _) = load_graph(cfg, &models)?;
            let query = LocalizeQuery {
                kinds: if kind.is_empty() {
                    None
                } else {
                    Some(kind.into_iter().collect())
                },
                tag_labels: if tag.is_empty() {
                    None
                } else {
                    Some(tag.into_iter().collect())
                },
                database,
                id_prefix: prefix,
            };
            for id in graph.localize(&query) {
                if json {
                    println!("{}", serde_json::json!({ "id": id.as_str() }));
                } else {
                    println!("{id}");
                }
            }
            Ok(())
        }
        GraphAction::Save { out } => {
            let models = load_models(cfg)?;
            let (graph, _) = load_graph(cfg, &models)?;
            if let Some(parent) = out.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            graph.save(&out)?;
            eprintln!("saved canonical graph to {}", out.display());
            Ok(())
        }
        GraphAction::Load { path } => {
            let graph = ExperienceGraph::load(&path)?;
            graph.validate()?;
            print_stats(&graph, json)
        }
    }
}

fn print_stats(graph: &ExperienceGraph, json: bool) -> Result<()> {
    let stats = graph.stats();
    if json {
        println!("{}", serde_json::to_string(&stats)?);
    } else {
        println!("vertices: {}", stats.vertex_total);
        for (kind, count) in &stats.vertices {
            println!("  {kind}: {count}");
        }
        println!("edges: {}", stats.edge_total);
        for (relation, count) in &stats.edges {
            println!("  {relation}: {count}");
        }
    }
    Ok(())
}

fn apply_llm_args(cfg: &EngineConfig, args: &LlmArgs) -> omx_core::diagnose::LlmEndpointConfig {
    let mut llm = cfg.llm.clone();
    if let Some(mode) = args.mode {
        llm.mode = mode;
    }
    if let Some(url) = &args.url {
        llm.base_url = url.clone();
    }
    if let Some(model) = &args.model {
        llm.model_name = model.clone();
    }
    if let Some(timeout) = args.timeout {
        llm.timeout_seconds = timeout;
    }
    llm
}

fn cmd_diagnose(
    cfg: &EngineConfig,
    event_id: &str,
    dump_context: bool,
    out: &Option<PathBuf>,
    llm_args: &LlmArgs,
) -> Result<()> {
    let events = load_events(cfg)?;
    let event = events
        .iter()
        .find(|e| e.event_id() == event_id)
        .ok_or_else(|| anyhow!("unknown event {event_id}; run detect first"))?;
    let models = load_models(cfg)?;
    let model = models
        .iter()
        .find(|m| m.id == event.model_id)
        .ok_or_else(|| anyhow!("no model definition for {}", event.model_id))?;
    let store = load_store(cfg)?;
    let (mut graph, from_file) = load_graph(cfg, &models)?;
    let tools = ToolRegistry::with_builtins();
    let evo_cfg = cfg.evolution.clone();
    let context = evolve(event, &mut graph, &store, &tools, &evo_cfg)?;
    if from_file {
        graph.save(&cfg.paths.graph_file)?;
    }
    if dump_context {
        let path = cfg
            .paths
            .data_dir
            .join(format!("context-{}.json", event_id.replace(':', "-")));
        std::fs::create_dir_all(&cfg.paths.data_dir)?;
        std::fs::write(&path, serde_json::to_string_pretty(&context)?)?;
        eprintln!("context dumped to {}", path.display());
    }
    let prompt = build_prompt(&context, model)?;
    let llm = apply_llm_args(cfg, llm_args);
    let client = LlmClient::new(llm);
    let raw = match client.complete(&prompt.render()) {
        Ok(raw) => raw,
        Err(e) => {
            // Keep the evidence for offline analysis when the endpoint fails.
            let path = cfg
                .paths
                .data_dir
                .join(format!("context-{}.json", event_id.replace(':', "-")));
            std::fs::create_dir_all(&cfg.paths.data_dir)?;
            std::fs::write(&path, serde_json::to_string_pretty(&context)?)?;
            bail!(
                "completion failed ({e}); context dumped to {}",
                path.display()
            );
        }
    };
    let report = parse_report(&raw)?;
    for finding in validate_evidence(&report, &context) {
        eprintln!("authenticity: {:?}: {}", finding.kind, finding.detail);
    }
    write_result(out, &raw)
}

fn cmd_simulate(
    name: &str,
    seed: u64,
    out: &Path,
    duration: u32,
    cadence: u32,
    catalog: &Option<PathBuf>,
) -> Result<()> {
    let scenarios = load_scenarios(catalog)?;
    let scenario = scenarios
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| anyhow!("unknown scenario {name}"))?;
    let (series_set, truth) = simulate::generate(scenario, seed, duration, cadence)?;
    std::fs::create_dir_all(out)?;
    for series in &series_set {
        let path = out.join(format!("{}.jsonl", series.metric_id));
        std::fs::write(&path, series_to_jsonl(std::slice::from_ref(series)))?;
    }
    let truth_path = out.join("ground_truth.json");
    let mut truth_text = serde_json::to_string_pretty(&truth)?;
    truth_text.push('\n');
    std::fs::write(&truth_path, truth_text)?;
    println!(
        "{} metrics -> {}; detect hint: --now {}",
        series_set.len(),
        out.display(),
        simulate::suggested_detect_time(scenario, duration)
    );
    Ok(())
}

fn load_scenarios(catalog: &Option<PathBuf>) -> Result<Vec<Scenario>> {
    match catalog {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Ok(load_catalog(&text)?)
        }
        None => Ok(seeds::seed_scenarios()),
    }
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = spec.split_once("..") {
        let start: u64 = a.trim().parse().context("seed range start")?;
        let end: u64 = b.trim().parse().context("seed range end")?;
        if end < start {
            bail!("empty seed range {spec}");
        }
        return Ok((start..=end).collect());
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|e| anyhow!("seed {s}: {e}"))
        })
        .collect()
}

fn cmd_evaluate(
    cfg: &EngineConfig,
    catalog: &Option<PathBuf>,
    seeds_spec: &str,
    out: &Option<PathBuf>,
    llm_args: &LlmArgs,
) -> Result<()> {
    let scenarios = load_scenarios(catalog)?;
    let seeds_list = parse_seeds(seeds_spec)?;
    let models = load_models(cfg)?;
    let mut graph = ExperienceGraph::init_from_models(&models)?;
    // Deterministic enrichment: tag sharing only (empty store).
    graph.enrich(&MetricStore::new(), 2.0);
    let diagnoser = PipelineDiagnoser {
        models,
        graph,
        evolution: cfg.evolution.clone(),
        llm: apply_llm_args(cfg, llm_args),
    };
    let summary = run_suite(
        &scenarios,
        &diagnoser,
        &seeds_list,
        &SuiteOptions::default(),
    );
    for case in &summary.cases {
        if let Some(reason) = &case.failure {
            eprintln!("case {}: {}", case.case_id, reason);
        }
    }
    eprintln!(
        "cases={} mean_accuracy={:.4} mean_precision={:.4} mean_recall={:.4} mean_f1={:.4}",
        summary.cases.len(),
        summary.mean_accuracy,
        summary.mean_precision,
        summary.mean_recall,
        summary.mean_f1
    );
    write_result(out, &summary_to_csv(&summary))
}

fn cmd_tool(cfg: &EngineConfig, action: ToolAction, json: bool) -> Result<()> {
    let ToolAction::Run { id, params, at } = action;
    let store = load_store(cfg)?;
    let at = at
        .or_else(|| {
            store
                .all_series()
                .filter_map(|s| s.points.last().map(|p| p.ts))
                .max()
        })
        .unwrap_or(0);
    let mut tool_params = ToolParams::new();
    for param in &params {
        let (key, value) = param
            .split_once('=')
            .ok_or_else(|| anyhow!("parameter {param} is not key=value"))?;
        let json_value = value
            .parse::<f64>()
            .map(|n| serde_json::json!(n))
            .unwrap_or_else(|_| serde_json::json!(value));
        tool_params.insert(key.to_owned(), json_value);
    }
    let registry = ToolRegistry::with_builtins();
    let findings = registry.run(&id, &store, &tool_params, at)?;
    if json {
        println!("{}", serde_json::to_string(&findings)?);
    } else {
        println!(
            "tool {} at {at}: {} finding(s)",
            findings.tool_id,
            findings.items.len()
        );
        for item in &findings.items {
            println!("  [{:?}] {}", item.severity, item.message);
            for ev in &item.evidence {
                println!("    {} {} = {:.4}", ev.metric_id, ev.stat, ev.observed);
            }
        }
    }
    Ok(())
}
