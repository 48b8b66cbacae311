//! Command-line driver: seeded simulation campaigns, bounded exhaustive
//! exploration, trace replay, and scripted scenarios.
//!
//! Exit codes: 0 clean, 1 violations or failed assertions, 2 bad input or
//! I/O failure. Flag defaults may be overridden by a `key = value` config
//! file (`--config`), and explicit flags override the file.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use drl::harness::scenario;
use drl::harness::{
    explore, replay_trace, run_random, CampaignSummary, ExploreConfig, Fault, RunConfig, RunReport,
    SnapshotPolicy, Trace,
};
use drl::semantics::ExplorationBounds;

#[derive(Parser)]
#[command(
    name = "drl",
    version,
    about = "Reference-listing actor-collection simulator"
)]
struct Cli {
    /// Key=value file supplying defaults for any long flag.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded random simulations; writes report.json and per-run traces.
    Simulate(SimulateArgs),
    /// Exhaustively explore bounded schedules, checking every visited state.
    Explore(ExploreArgs),
    /// Re-apply a recorded trace, verifying every configuration hash.
    Replay(ReplayArgs),
    /// Run one scripted scenario by name, or `all`.
    Scenario(ScenarioArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// First seed; runs use seed, seed+1, ...
    #[arg(long)]
    seed: Option<u64>,
    /// Number of runs.
    #[arg(long)]
    runs: Option<u64>,
    /// Non-snapshot event budget per run.
    #[arg(long)]
    max_events: Option<u64>,
    /// Actor cap per run (internal plus external).
    #[arg(long)]
    max_actors: Option<usize>,
    /// final-action, periodic:<n>, or never.
    #[arg(long)]
    snapshot_policy: Option<SnapshotPolicy>,
    /// Environment injections stop after this many events.
    #[arg(long)]
    allow_in_until: Option<u64>,
    /// Ground-truth check cadence in non-snapshot events.
    #[arg(long)]
    check_every: Option<u64>,
    /// Output directory (default: $DRL_OUT or ./drl-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Knowledge-corruption negative control.
    #[arg(long, hide = true)]
    fault: Option<Fault>,
}

#[derive(Args)]
struct ExploreArgs {
    /// Events per path from the initial configuration.
    #[arg(long)]
    depth: Option<u64>,
    /// Actor cap (internal plus external).
    #[arg(long)]
    max_actors: Option<usize>,
    /// Largest number of refobs one message may carry.
    #[arg(long)]
    max_refobs_per_msg: Option<usize>,
    /// 1 to allow environment injections, 0 to forbid them.
    #[arg(long)]
    allow_in: Option<u8>,
    /// Output directory (default: $DRL_OUT or ./drl-out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Trace file in the JSON-lines layout written by `simulate`.
    trace: PathBuf,
}

#[derive(Args)]
struct ScenarioArgs {
    /// A scenario name, or `all`.
    name: String,
}

/// Every key a config file may set; unknown keys are rejected loudly.
const CONFIG_KEYS: [&str; 12] = [
    "seed",
    "runs",
    "max-events",
    "max-actors",
    "snapshot-policy",
    "allow-in-until",
    "check-every",
    "out",
    "fault",
    "depth",
    "max-refobs-per-msg",
    "allow-in",
];

fn load_config(path: Option<&Path>) -> Result<BTreeMap<String, String>, String> {
    let Some(path) = path else {
        return Ok(BTreeMap::new());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut out = BTreeMap::new();
    for (index, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!(
                "{} line {}: expected key = value, got `{line}`",
                path.display(),
                index + 1
            ));
        };
        let key = key.trim().to_string();
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(format!(
                "{} line {}: unknown key `{key}`",
                path.display(),
                index + 1
            ));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

/// Flag value if given, else the config-file value for `key`, else none.
fn pick<T>(flag: Option<T>, cfg: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, String>
where
    T: FromStr,
    T::Err: Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    cfg.get(key)
        .map(|raw| raw.parse().map_err(|e| format!("config key {key}: {e}")))
        .transpose()
}

fn resolve_out(flag: Option<PathBuf>, cfg: &BTreeMap<String, String>) -> PathBuf {
    flag.or_else(|| cfg.get("out").map(PathBuf::from))
        .or_else(|| std::env::var_os("DRL_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("drl-out"))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let file = File::create(path).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)
        .map_err(|e| format!("cannot encode {}: {e}", path.display()))
}

fn cmd_simulate(args: SimulateArgs, cfg: &BTreeMap<String, String>) -> Result<ExitCode, String> {
    let first_seed = pick(args.seed, cfg, "seed")?.unwrap_or(0);
    let runs = pick(args.runs, cfg, "runs")?.unwrap_or(1).max(1);
    let out_dir = resolve_out(args.out, cfg);

    let mut base = RunConfig::default();
    if let Some(n) = pick(args.max_events, cfg, "max-events")? {
        base.bounds.max_events_per_run = n;
    }
    if let Some(n) = pick(args.max_actors, cfg, "max-actors")? {
        base.bounds.max_actors = n;
    }
    if let Some(policy) = pick(args.snapshot_policy, cfg, "snapshot-policy")? {
        base.snapshot_policy = policy;
    }
    if let Some(cutoff) = pick(args.allow_in_until, cfg, "allow-in-until")? {
        base.allow_in_until = Some(cutoff);
    }
    if let Some(cadence) = pick(args.check_every, cfg, "check-every")? {
        base.check_every = cadence;
        base.detect_every = cadence;
    }
    base.fault = pick(args.fault, cfg, "fault")?;

    let trace_dir = out_dir.join("traces");
    fs::create_dir_all(&trace_dir)
        .map_err(|e| format!("cannot create {}: {e}", trace_dir.display()))?;

    let mut reports: Vec<RunReport> = Vec::with_capacity(runs as usize);
    for seed in first_seed..first_seed + runs {
        let mut config = base.clone();
        config.seed = seed;
        let outcome = run_random(&config);
        let trace_path = trace_dir.join(format!("run-{seed}.jsonl"));
        let file = File::create(&trace_path)
            .map_err(|e| format!("cannot write {}: {e}", trace_path.display()))?;
        outcome
            .trace
            .write_jsonl(BufWriter::new(file))
            .map_err(|e| format!("cannot write {}: {e}", trace_path.display()))?;
        reports.push(outcome.report);
    }

    let summary = CampaignSummary::from_reports(reports);
    write_json(&out_dir.join("report.json"), &summary)?;

    let detected: usize = summary.reports.iter().map(|r| r.final_detected.len()).sum();
    println!("runs                   {}", summary.runs);
    println!("clean runs             {}", summary.clean_runs);
    println!("events applied         {}", summary.total_events);
    println!("snapshots taken        {}", summary.total_snapshots);
    println!("actors detected        {detected}");
    println!("liveness misses        {}", summary.total_liveness_misses);
    match summary.mean_detection_latency {
        Some(latency) => println!("mean detect latency    {latency:.2} events"),
        None => println!("mean detect latency    n/a"),
    }
    println!("violations             {}", summary.total_violations);
    for (kind, count) in &summary.violations_by_kind {
        println!("  {kind}: {count}");
    }
    println!("report: {}", out_dir.join("report.json").display());

    Ok(exit_for(summary.total_violations == 0))
}

fn cmd_explore(args: ExploreArgs, cfg: &BTreeMap<String, String>) -> Result<ExitCode, String> {
    let out_dir = resolve_out(args.out, cfg);
    let config = ExploreConfig {
        bounds: ExplorationBounds {
            max_actors: pick(args.max_actors, cfg, "max-actors")?.unwrap_or(3),
            max_refobs_per_message: pick(args.max_refobs_per_msg, cfg, "max-refobs-per-msg")?
                .unwrap_or(2),
            max_external_injections: 2,
            allow_in: pick(args.allow_in, cfg, "allow-in")? != Some(0),
            ..ExplorationBounds::default()
        },
        max_depth: pick(args.depth, cfg, "depth")?.unwrap_or(5),
        ..ExploreConfig::default()
    };

    let report = explore(&config);
    fs::create_dir_all(&out_dir)
        .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    write_json(&out_dir.join("report.json"), &report)?;

    println!("states visited         {}", report.states_visited);
    println!("transitions applied    {}", report.transitions_applied);
    println!(
        "depth reached          {}/{}",
        report.deepest_new_state, report.max_depth
    );
    println!("complete               {}", report.complete);
    println!("rule coverage:");
    for (rule, count) in &report.rule_coverage {
        println!("  {rule}: {count}");
    }
    println!("violations             {}", report.violations.len());
    for violation in &report.violations {
        println!("  {} at step {}", violation.kind(), violation.step());
    }
    println!("report: {}", out_dir.join("report.json").display());

    Ok(exit_for(report.is_clean()))
}

fn cmd_replay(args: ReplayArgs) -> Result<ExitCode, String> {
    let file = File::open(&args.trace)
        .map_err(|e| format!("cannot open {}: {e}", args.trace.display()))?;
    let trace = Trace::read_jsonl(BufReader::new(file))
        .map_err(|e| format!("cannot parse {}: {e}", args.trace.display()))?;
    let outcome = replay_trace(&trace);
    println!("seed                   {}", outcome.report.seed);
    println!("events applied         {}", outcome.report.events_applied);
    println!("snapshots taken        {}", outcome.report.snapshots_taken);
    println!("violations             {}", outcome.report.violations.len());
    for violation in &outcome.report.violations {
        println!("  {violation:?}");
    }
    Ok(exit_for(outcome.report.is_clean()))
}

fn cmd_scenario(args: ScenarioArgs) -> Result<ExitCode, String> {
    let reports = if args.name == "all" {
        scenario::run_all()
    } else {
        match scenario::run_scenario(&args.name) {
            Some(report) => vec![report],
            None => {
                return Err(format!(
                    "unknown scenario `{}`; expected one of {} or all",
                    args.name,
                    scenario::scenario_names().join(", ")
                ));
            }
        }
    };
    let mut all_passed = true;
    for report in &reports {
        println!("{} ({} events)", report.name, report.events_applied);
        for check in &report.checks {
            let tag = if check.passed { "ok " } else { "FAIL" };
            println!("  [{tag}] {} — {}", check.name, check.detail);
            all_passed &= check.passed;
        }
    }
    Ok(exit_for(all_passed))
}

fn exit_for(clean: bool) -> ExitCode {
    if clean {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args, &cfg),
        Command::Explore(args) => cmd_explore(args, &cfg),
        Command::Replay(args) => cmd_replay(args),
        Command::Scenario(args) => cmd_scenario(args),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
