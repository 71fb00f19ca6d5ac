//! Trial matrices: seed derivation, parallel execution, resume and replay.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::trial::{run_trial_with, BackendSpec, TrialConfig, TrialRecord, TrialServices};
use super::HarnessError;
use crate::dialogue::{FrameworkKind, ProtocolLimits};
use crate::env::{EnvKind, ExecutionNoise};
use crate::environments::ScenarioSpec;
use crate::gateway::{ModelProfile, RemoteConfig, RetryPolicy};
use crate::prompt::{HistoryMode, PromptBudget, TemplateSet};
use crate::util::canonical_json;

pub const RESULTS_FILE: &str = "results.jsonl";
pub const SUITE_FILE: &str = "suite.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub suite_seed: u64,
    pub envs: Vec<EnvKind>,
    pub frameworks: Vec<FrameworkKind>,
    /// `None` uses each environment's schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robot_counts: Option<Vec<usize>>,
    /// Accept robot counts outside the schedules.
    #[serde(default)]
    pub allow_custom_counts: bool,
    pub trials: u32,
    pub profile: ModelProfile,
    pub backend: BackendSpec,
    pub history_mode: HistoryMode,
    pub limits: ProtocolLimits,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_planning_iterations: Option<u32>,
    pub budget: PromptBudget,
    #[serde(default)]
    pub strict_parse: bool,
    #[serde(default)]
    pub noise: ExecutionNoise,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub remote: RemoteConfig,
    pub out_dir: PathBuf,
}

fn default_workers() -> usize {
    4
}

impl SuiteConfig {
    pub fn new(backend: BackendSpec, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            suite_seed: 0,
            envs: EnvKind::ALL.to_vec(),
            frameworks: FrameworkKind::ALL.to_vec(),
            robot_counts: None,
            allow_custom_counts: false,
            trials: 10,
            profile: ModelProfile::gpt4(),
            backend,
            history_mode: HistoryMode::default(),
            limits: ProtocolLimits::default(),
            max_planning_iterations: None,
            budget: PromptBudget::default(),
            strict_parse: false,
            noise: ExecutionNoise::none(),
            workers: default_workers(),
            remote: RemoteConfig::default(),
            out_dir: out_dir.into(),
        }
    }

    pub fn counts_for(&self, env: EnvKind) -> Vec<usize> {
        match &self.robot_counts {
            Some(c) => c.clone(),
            None => env.robot_schedule().to_vec(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.envs.is_empty() || self.frameworks.is_empty() || self.trials == 0 {
            return Err(HarnessError::Config("suite matrix is empty".into()));
        }
        if !self.allow_custom_counts {
            for &env in &self.envs {
                let schedule = env.robot_schedule();
                for n in self.counts_for(env) {
                    if !schedule.contains(&n) {
                        return Err(HarnessError::Config(format!(
                            "{n} robots is not in the {} schedule {schedule:?}",
                            env.as_str()
                        )));
                    }
                }
            }
        }
        self.limits.validate().map_err(HarnessError::Config)
    }

    /// Trial configurations in canonical order: env, framework, robot count,
    /// trial index.
    pub fn trials(&self) -> Vec<TrialConfig> {
        let mut out = Vec::new();
        for &env in &self.envs {
            for &framework in &self.frameworks {
                for robots in self.counts_for(env) {
                    for index in 0..self.trials {
                        let seed = scenario_seed(self.suite_seed, env, robots, index);
                        out.push(TrialConfig {
                            scenario: ScenarioSpec::new(env, robots, seed),
                            trial_index: index,
                            framework,
                            profile: self.profile.clone(),
                            backend: self.backend.clone(),
                            history_mode: self.history_mode,
                            limits: self.limits,
                            max_planning_iterations: self.max_planning_iterations,
                            budget: self.budget,
                            strict_parse: self.strict_parse,
                            noise: self.noise,
                            out_dir: self.out_dir.clone(),
                            record_cassette: !self.backend.is_replay(),
                        });
                    }
                }
            }
        }
        out
    }
}

/// Scenario seed: the first eight bytes, big-endian, of
/// `sha256("<suite_seed>/<env>/<robots>/<index>")`. The framework is left out
/// so every framework faces the same initial states.
pub fn scenario_seed(suite_seed: u64, env: EnvKind, robots: usize, index: u32) -> u64 {
    let digest = Sha256::digest(format!("{suite_seed}/{}/{robots}/{index}", env.as_str()));
    u64::from_be_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>, HarnessError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| HarnessError::Parse(format!("{}: {e}", path.display())))?);
    }
    Ok(out)
}

/// Completed records that still match their configuration. Unparseable lines
/// (an interrupted write) are dropped.
fn resume_point(path: &Path, configs: &[TrialConfig]) -> Result<HashMap<String, TrialRecord>, HarnessError> {
    let mut done = HashMap::new();
    if !path.exists() {
        return Ok(done);
    }
    let digests: HashMap<String, String> = configs.iter().map(|c| (c.trial_id(), c.digest())).collect();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        let Ok(rec) = serde_json::from_str::<TrialRecord>(&line) else {
            continue;
        };
        if digests.get(&rec.trial_id) == Some(&rec.config_digest) {
            done.insert(rec.trial_id.clone(), rec);
        }
    }
    Ok(done)
}

fn write_records(path: &Path, records: &[TrialRecord]) -> Result<(), HarnessError> {
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut out = BufWriter::new(File::create(&tmp)?);
        for r in records {
            writeln!(out, "{}", canonical_json(r))?;
        }
        out.flush()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    /// Ignore existing results and run everything.
    pub fresh: bool,
    pub retry: Option<RetryPolicy>,
    pub templates: Option<TemplateSet>,
}

/// Runs every trial of `config` not already in `results.jsonl` and returns
/// all records in canonical order.
pub fn run_suite(config: &SuiteConfig, options: &SuiteOptions) -> Result<Vec<TrialRecord>, HarnessError> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir)?;
    fs::write(
        config.out_dir.join(SUITE_FILE),
        serde_json::to_string_pretty(config).map_err(|e| HarnessError::Parse(e.to_string()))?,
    )?;

    let configs = config.trials();
    let results = config.out_dir.join(RESULTS_FILE);
    let done = if options.fresh {
        HashMap::new()
    } else {
        resume_point(&results, &configs)?
    };

    let mut services = TrialServices::from_spec(&config.backend, &config.out_dir, &config.remote)?;
    if let Some(r) = options.retry {
        services = services.with_retry(r);
    }
    if let Some(t) = &options.templates {
        services = services.with_templates(t.clone());
    }

    // Completed records so far, re-appended as trials finish.
    write_records(&results, &order(&configs, done.values().cloned().collect()))?;
    let sink = Mutex::new(OpenOptions::new().append(true).open(&results)?);

    let pending: Vec<&TrialConfig> = configs.iter().filter(|c| !done.contains_key(&c.trial_id())).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let fresh: Vec<TrialRecord> = pool.install(|| {
        pending
            .par_iter()
            .map(|c| {
                let rec = run_trial_with(c, &services)?;
                let mut f = sink.lock().expect("results lock");
                writeln!(f, "{}", canonical_json(&rec))?;
                f.flush()?;
                Ok(rec)
            })
            .collect::<Result<Vec<_>, HarnessError>>()
    })?;
    drop(sink);

    let mut all: Vec<TrialRecord> = done.into_values().collect();
    all.extend(fresh);
    let all = order(&configs, all);
    write_records(&results, &all)?;
    Ok(all)
}

fn order(configs: &[TrialConfig], records: Vec<TrialRecord>) -> Vec<TrialRecord> {
    let rank: HashMap<String, usize> = configs.iter().enumerate().map(|(i, c)| (c.trial_id(), i)).collect();
    let mut keyed: BTreeMap<usize, TrialRecord> = BTreeMap::new();
    for r in records {
        if let Some(&i) = rank.get(&r.trial_id) {
            keyed.insert(i, r);
        }
    }
    keyed.into_values().collect()
}

pub fn load_suite(dir: &Path) -> Result<SuiteConfig, HarnessError> {
    let path = dir.join(SUITE_FILE);
    let text = fs::read_to_string(&path)?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Parse(format!("{}: {e}", path.display())))
}

/// Re-runs the suite recorded in `from` against its cassettes, writing
/// records and transcripts under `out_dir`.
pub fn replay_suite(from: &Path, out_dir: &Path, fuzzy: bool, workers: Option<usize>) -> Result<Vec<TrialRecord>, HarnessError> {
    let mut config = load_suite(from)?;
    config.backend = BackendSpec::Cassette {
        dir: from.join("cassettes"),
        fuzzy,
    };
    config.out_dir = out_dir.to_path_buf();
    if let Some(w) = workers {
        config.workers = w;
    }
    run_suite(
        &config,
        &SuiteOptions {
            fresh: true,
            ..Default::default()
        },
    )
}
