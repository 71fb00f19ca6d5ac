//! Command-line entry point: run, replay and aggregate trial suites, and
//! dump generated scenarios.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mrplan::dialogue::{FrameworkKind, ProtocolLimits};
use mrplan::env::EnvKind;
use mrplan::environments::{bfs_optimal_steps, generate_scenario, ScenarioSpec};
use mrplan::gateway::ModelProfile;
use mrplan::harness::{
    aggregate, read_records, replay_suite, run_suite, scenario_seed, write_reports, BackendSpec,
    MetricSet, SuiteConfig, SuiteOptions, TrialRecord, RESULTS_FILE,
};
use mrplan::prompt::{HistoryMode, TemplateSet};

#[derive(Debug, Parser)]
#[command(name = "mrplan", version, about = "LLM multi-robot planning frameworks on grid benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run (or resume) a suite of trials and write reports.
    Run(Box<RunArgs>),
    /// Re-run a recorded suite from its cassettes.
    Replay(ReplayArgs),
    /// Recompute report tables from a results file.
    Aggregate(AggregateArgs),
    /// Write the initial states a suite would use.
    GenScenarios(GenArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Suite configuration (JSON, as written to suite.json); flags below are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Environments, comma separated.
    #[arg(long = "env", value_delimiter = ',', default_values = ["boxnet1", "boxnet2", "warehouse", "boxlift"])]
    envs: Vec<EnvKind>,
    /// Frameworks, comma separated.
    #[arg(long = "framework", value_delimiter = ',', default_values = ["dmas", "hmas1", "cmas", "hmas2"])]
    frameworks: Vec<FrameworkKind>,
    /// Robot counts; defaults to each environment's schedule.
    #[arg(long = "robots", value_delimiter = ',')]
    robots: Option<Vec<usize>>,
    /// Accept robot counts outside the schedules.
    #[arg(long)]
    allow_custom_counts: bool,
    #[arg(long, default_value_t = 10)]
    trials: u32,
    /// Step history shown to agents: none, state-action or full.
    #[arg(long, default_value = "full")]
    history: HistoryMode,
    /// Model profile: gpt-4 or gpt-3.5-turbo.
    #[arg(long, default_value = "gpt-4")]
    profile: String,
    /// remote, oracle, oracle-adversarial, cassette[:dir] or scripted:<fixture>.
    #[arg(long, default_value = "oracle")]
    backend: BackendSpec,
    /// Suite seed from which every scenario seed is derived.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "runs/latest")]
    out: PathBuf,
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// Fixed planning-iteration limit instead of a multiple of the optimum.
    #[arg(long)]
    max_iterations: Option<u32>,
    #[arg(long, default_value_t = ProtocolLimits::default().max_dialogue_rounds)]
    max_dialogue_rounds: u32,
    #[arg(long, default_value_t = ProtocolLimits::default().max_replan_iterations)]
    max_replan_iterations: u32,
    #[arg(long, default_value_t = ProtocolLimits::default().max_syntax_retries)]
    max_syntax_retries: u32,
    /// Require every robot to appear in an EXECUTE block.
    #[arg(long)]
    strict_parse: bool,
    /// Base URL of the chat-completion API for the remote backend.
    #[arg(long)]
    base_url: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "OPENAI_API_KEY")]
    api_key_env: String,
    /// Directory of template overrides.
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Discard existing results instead of resuming.
    #[arg(long)]
    fresh: bool,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Directory of the recorded suite.
    #[arg(long)]
    from: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Match requests by role and purpose only, ignoring prompt digests.
    #[arg(long)]
    fuzzy: bool,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct AggregateArgs {
    /// Suite directory or results file.
    #[arg(long)]
    results: PathBuf,
    /// Report directory; defaults to `reports` next to the results.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long = "env", value_delimiter = ',', default_values = ["boxnet1", "boxnet2", "warehouse", "boxlift"])]
    envs: Vec<EnvKind>,
    #[arg(long = "robots", value_delimiter = ',')]
    robots: Option<Vec<usize>>,
    #[arg(long, default_value_t = 10)]
    trials: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also compute each scenario's optimal step count.
    #[arg(long)]
    optimal: bool,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => run(*args),
        Command::Replay(args) => {
            let records = replay_suite(&args.from, &args.out, args.fuzzy, args.workers)?;
            finish(&records, &args.out)
        }
        Command::Aggregate(args) => {
            let (results, dir) = if args.results.is_dir() {
                (args.results.join(RESULTS_FILE), args.results.clone())
            } else {
                let parent = args.results.parent().unwrap_or(Path::new(".")).to_path_buf();
                (args.results.clone(), parent)
            };
            let records = read_records(&results).with_context(|| format!("reading {}", results.display()))?;
            let set = aggregate(&records);
            let out = args.out.unwrap_or_else(|| dir.join("reports"));
            report(&set, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::GenScenarios(args) => gen_scenarios(args),
    }
}

fn suite_from_args(args: &RunArgs) -> Result<SuiteConfig> {
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config: SuiteConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        config.out_dir = args.out.clone();
        return Ok(config);
    }
    let Some(profile) = ModelProfile::by_name(&args.profile) else {
        bail!("unknown model profile `{}`", args.profile);
    };
    let mut config = SuiteConfig::new(args.backend.clone(), &args.out);
    config.suite_seed = args.seed;
    config.envs = args.envs.clone();
    config.frameworks = args.frameworks.clone();
    config.robot_counts = args.robots.clone();
    config.allow_custom_counts = args.allow_custom_counts;
    config.trials = args.trials;
    config.profile = profile;
    config.history_mode = args.history;
    config.limits = ProtocolLimits {
        max_dialogue_rounds: args.max_dialogue_rounds,
        max_replan_iterations: args.max_replan_iterations,
        max_syntax_retries: args.max_syntax_retries,
    };
    config.max_planning_iterations = args.max_iterations;
    config.strict_parse = args.strict_parse;
    config.workers = args.workers;
    if let Some(url) = &args.base_url {
        config.remote.base_url = url.clone();
    }
    config.remote.api_key_env = args.api_key_env.clone();
    Ok(config)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let config = suite_from_args(&args)?;
    let templates = match &args.templates {
        Some(dir) => Some(TemplateSet::with_overrides(dir)?),
        None => None,
    };
    let options = SuiteOptions {
        fresh: args.fresh,
        templates,
        ..Default::default()
    };
    let records = run_suite(&config, &options)?;
    finish(&records, &config.out_dir)
}

/// Writes reports and maps infrastructure faults to a failing exit code.
fn finish(records: &[TrialRecord], dir: &Path) -> Result<ExitCode> {
    let set = aggregate(records);
    report(&set, &dir.join("reports"))?;
    let infra = records.iter().filter(|r| r.outcome.is_infra()).count();
    if infra > 0 {
        eprintln!("{infra} trial(s) ended with an infrastructure error");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn report(set: &MetricSet, out: &Path) -> Result<()> {
    write_reports(set, out)?;
    for table in &set.tables {
        println!("{}", table.env.as_str());
        println!(
            "  {:<8} {:>8} {:>7} {:>7} {:>7} {:>6}",
            "", "success", "steps", "api", "tokens", "infra"
        );
        let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"));
        for row in &table.rows {
            println!(
                "  {:<8} {:>7.1}% {:>7} {:>7} {:>7} {:>6}",
                row.framework.to_string(),
                row.success_rate * 100.0,
                cell(row.norm_steps),
                cell(row.norm_api_calls),
                cell(row.norm_tokens),
                row.infra_errors
            );
        }
    }
    println!("reports written to {}", out.display());
    Ok(())
}

fn gen_scenarios(args: GenArgs) -> Result<ExitCode> {
    std::fs::create_dir_all(&args.out)?;
    let mut written = 0;
    for env in &args.envs {
        let counts = args.robots.clone().unwrap_or_else(|| env.robot_schedule().to_vec());
        for robots in counts {
            for index in 0..args.trials {
                let spec = ScenarioSpec::new(*env, robots, scenario_seed(args.seed, *env, robots, index));
                let state = generate_scenario(&spec)?;
                let mut doc = serde_json::json!({ "spec": spec, "state": state });
                if args.optimal {
                    doc["optimal_steps"] = serde_json::json!(bfs_optimal_steps(&state, 200)?);
                }
                let path = args.out.join(format!("{}-r{robots}-t{index:02}.json", env.as_str()));
                std::fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
                written += 1;
            }
        }
    }
    println!("{written} scenarios written to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}
