//! One trial: plan, verify, step and record until the goal or a failure.

use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::trace::{classify, FailureCause, Outcome, StepKind, TraceEvent};
use super::HarnessError;
use crate::dialogue::{plan_step, FrameworkKind, PlanSettings, ProtocolLimits};
use crate::env::{apply_joint_action, state_facts, EnvKind, ExecutionNoise, StepResult};
use crate::environments::{generate_scenario, ScenarioSpec};
use crate::gateway::{
    Backend, CassetteWriter, Gateway, ModelProfile, OracleBackend, PlanCache, RemoteBackend, RemoteConfig,
    ReplayBackend, RetryPolicy, ScriptFixture, ScriptedBackend, Usage,
};
use crate::prompt::{
    CharApproxCounter, DialogueLine, HistoryEntry, HistoryMode, PromptBudget, PromptBuilder, TemplateSet,
    TokenCounter,
};
use crate::util::{canonical_json, sha256_hex};

/// Iteration limit when the optimum is unknown.
pub const FALLBACK_MAX_ITERATIONS: u32 = 25;
/// Iteration limit as a multiple of the optimal step count.
pub const OPTIMAL_STEP_FACTOR: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    Remote,
    /// Recorded exchanges; an empty `dir` means `<out_dir>/cassettes`.
    Cassette {
        dir: PathBuf,
        #[serde(default)]
        fuzzy: bool,
    },
    Oracle,
    OracleAdversarial,
    Scripted {
        fixture: PathBuf,
    },
}

impl BackendSpec {
    pub fn is_replay(&self) -> bool {
        matches!(self, BackendSpec::Cassette { .. })
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Remote => f.write_str("remote"),
            BackendSpec::Cassette { dir, .. } if dir.as_os_str().is_empty() => f.write_str("cassette"),
            BackendSpec::Cassette { dir, .. } => write!(f, "cassette:{}", dir.display()),
            BackendSpec::Oracle => f.write_str("oracle"),
            BackendSpec::OracleAdversarial => f.write_str("oracle-adversarial"),
            BackendSpec::Scripted { fixture } => write!(f, "scripted:{}", fixture.display()),
        }
    }
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("remote", None) => Ok(BackendSpec::Remote),
            ("oracle", None) => Ok(BackendSpec::Oracle),
            ("oracle-adversarial", None) => Ok(BackendSpec::OracleAdversarial),
            ("cassette", dir) => Ok(BackendSpec::Cassette {
                dir: dir.map(PathBuf::from).unwrap_or_default(),
                fuzzy: false,
            }),
            ("scripted", Some(path)) if !path.is_empty() => Ok(BackendSpec::Scripted {
                fixture: PathBuf::from(path),
            }),
            _ => Err(format!(
                "unknown backend `{s}`; expected remote, cassette[:dir], oracle, oracle-adversarial or scripted:<fixture>"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub scenario: ScenarioSpec,
    pub trial_index: u32,
    pub framework: FrameworkKind,
    pub profile: ModelProfile,
    pub backend: BackendSpec,
    pub history_mode: HistoryMode,
    pub limits: ProtocolLimits,
    /// `None` derives the limit from the optimal step count.
    pub max_planning_iterations: Option<u32>,
    pub budget: PromptBudget,
    pub strict_parse: bool,
    pub noise: ExecutionNoise,
    pub out_dir: PathBuf,
    pub record_cassette: bool,
}

impl TrialConfig {
    pub fn new(scenario: ScenarioSpec, framework: FrameworkKind, backend: BackendSpec, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            scenario,
            trial_index: 0,
            framework,
            profile: ModelProfile::gpt4(),
            backend,
            history_mode: HistoryMode::default(),
            limits: ProtocolLimits::default(),
            max_planning_iterations: None,
            budget: PromptBudget::default(),
            strict_parse: false,
            noise: ExecutionNoise::none(),
            out_dir: out_dir.into(),
            record_cassette: true,
        }
    }

    /// `<env>-<framework>-r<robots>-t<index>`, e.g. `boxnet1-cmas-r4-t03`.
    pub fn trial_id(&self) -> String {
        trial_id(self.scenario.env, self.framework, self.scenario.robot_count, self.trial_index)
    }

    /// Digest of everything that determines the trial except where replies
    /// come from and where files go.
    pub fn digest(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serialises");
        if let Some(map) = v.as_object_mut() {
            map.remove("backend");
            map.remove("out_dir");
            map.remove("record_cassette");
        }
        sha256_hex(canonical_json(&v))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.limits.validate().map_err(HarnessError::Config)?;
        if self.max_planning_iterations == Some(0) {
            return Err(HarnessError::Config("max_planning_iterations must be at least 1".into()));
        }
        if self.budget.max_prompt_tokens == 0 {
            return Err(HarnessError::Config("prompt budget must be positive".into()));
        }
        if self.scenario.robot_count == 0 {
            return Err(HarnessError::Config("robot_count must be positive".into()));
        }
        Ok(())
    }
}

pub fn trial_id(env: EnvKind, framework: FrameworkKind, robots: usize, index: u32) -> String {
    format!("{}-{}-r{robots}-t{index:02}", env.as_str(), framework.slug())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: String,
    pub env: EnvKind,
    pub framework: FrameworkKind,
    pub robot_count: usize,
    pub trial_index: u32,
    pub seed: u64,
    pub config_digest: String,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub steps_taken: u32,
    pub api_calls: u32,
    pub prompt_tokens: u64,
    pub response_tokens: u64,
    pub total_tokens: u64,
    /// Sum of backend latencies.
    pub wall_time_ms: u64,
    pub optimal_steps: Option<u32>,
    pub max_iterations: u32,
    /// Relative to the output directory.
    pub transcript: String,
}

/// Shared, thread-safe pieces a trial runs on.
#[derive(Debug, Clone)]
pub struct TrialServices {
    pub backend: Arc<dyn Backend>,
    pub cache: Arc<PlanCache>,
    pub counter: Arc<dyn TokenCounter>,
    pub templates: TemplateSet,
    pub retry: RetryPolicy,
}

impl TrialServices {
    pub fn new(backend: Arc<dyn Backend>, cache: Arc<PlanCache>) -> Self {
        Self {
            backend,
            cache,
            counter: Arc::new(CharApproxCounter),
            templates: TemplateSet::builtin(),
            retry: RetryPolicy::default(),
        }
    }

    /// Builds the backend named by `spec`. Relative cassette directories
    /// resolve against `out_dir`.
    pub fn from_spec(spec: &BackendSpec, out_dir: &Path, remote: &RemoteConfig) -> Result<Self, HarnessError> {
        let cache = Arc::new(PlanCache::default());
        let backend: Arc<dyn Backend> = match spec {
            BackendSpec::Remote => {
                Arc::new(RemoteBackend::new(remote.clone()).map_err(|e| HarnessError::Config(e.to_string()))?)
            }
            BackendSpec::Cassette { dir, fuzzy } => {
                let dir = if dir.as_os_str().is_empty() {
                    out_dir.join("cassettes")
                } else {
                    dir.clone()
                };
                Arc::new(ReplayBackend::new(dir, *fuzzy))
            }
            BackendSpec::Oracle => Arc::new(OracleBackend::new(cache.clone())),
            BackendSpec::OracleAdversarial => Arc::new(OracleBackend::adversarial(cache.clone())),
            BackendSpec::Scripted { fixture } => {
                let fixture = ScriptFixture::from_file(fixture).map_err(HarnessError::Config)?;
                Arc::new(ScriptedBackend::new(fixture, cache.clone()))
            }
        };
        Ok(Self::new(backend, cache))
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_templates(mut self, templates: TemplateSet) -> Self {
        self.templates = templates;
        self
    }
}

pub fn transcript_path(out_dir: &Path, trial_id: &str) -> PathBuf {
    out_dir.join("transcripts").join(format!("{trial_id}.jsonl"))
}

/// Builds services for `config.backend` and runs the trial.
pub fn run_trial(config: &TrialConfig) -> Result<TrialRecord, HarnessError> {
    let services = TrialServices::from_spec(&config.backend, &config.out_dir, &RemoteConfig::default())?;
    run_trial_with(config, &services)
}

/// Runs one trial and writes its transcript. Faults inside the trial become
/// an `infra_error` outcome; only configuration and file errors are `Err`.
pub fn run_trial_with(config: &TrialConfig, services: &TrialServices) -> Result<TrialRecord, HarnessError> {
    config.validate()?;
    let id = config.trial_id();
    let mut events = Vec::new();
    let mut usage = Usage::default();
    let mut steps_taken = 0;
    let mut detail = None;

    let initial = generate_scenario(&config.scenario);
    let (optimal_steps, max_iterations) = match &initial {
        Ok(s) => {
            let opt = services.cache.optimal_steps(s).ok().flatten();
            let max = config.max_planning_iterations.unwrap_or(match opt {
                Some(d) => (OPTIMAL_STEP_FACTOR * d).max(1),
                None => FALLBACK_MAX_ITERATIONS,
            });
            (opt, max)
        }
        Err(_) => (None, config.max_planning_iterations.unwrap_or(FALLBACK_MAX_ITERATIONS)),
    };
    events.push(TraceEvent::TrialStart {
        trial_id: id.clone(),
        env: config.scenario.env,
        framework: config.framework,
        robot_count: config.scenario.robot_count,
        seed: config.scenario.seed,
        optimal_steps,
        max_iterations,
        goal_reached: initial.as_ref().is_ok_and(|s| s.world.is_goal()),
    });

    match initial {
        Err(e) => {
            detail = Some(e.to_string());
            events.push(TraceEvent::Infra { detail: e.to_string() });
        }
        Ok(mut state) if !state.world.is_goal() => {
            let mut gateway = Gateway::new(
                services.backend.clone(),
                config.profile.clone(),
                services.counter.clone(),
                id.clone(),
            )
            .with_retry(services.retry);
            if config.record_cassette && !config.backend.is_replay() {
                gateway = gateway.with_recorder(CassetteWriter::create(&config.out_dir.join("cassettes"), &id)?);
            }
            let builder = PromptBuilder::new(config.budget, services.counter.clone()).with_templates(services.templates.clone());
            let settings = PlanSettings {
                framework: config.framework,
                limits: config.limits,
                mode: config.history_mode,
                builder: &builder,
                strict_parse: config.strict_parse,
            };
            let mut history: Vec<HistoryEntry> = Vec::new();
            let mut finished = false;
            for iteration in 0..max_iterations {
                let plan = plan_step(settings, &state, &history, &mut gateway);
                let dialogue: Vec<DialogueLine> = plan
                    .transcript
                    .accepted_turns()
                    .filter(|t| t.api_call)
                    .map(|t| DialogueLine::new(t.role.to_string(), t.response.clone()))
                    .collect();
                events.extend(
                    plan.transcript
                        .turns
                        .into_iter()
                        .map(|turn| TraceEvent::Turn { iteration, turn }),
                );
                let assignment = match plan.result {
                    Ok(a) => a,
                    Err(failure) => {
                        detail = Some(failure.to_string());
                        events.push(TraceEvent::Failure { iteration, failure });
                        finished = true;
                        break;
                    }
                };
                let outcome = apply_joint_action(&state, &assignment, &config.noise);
                let (result, step_detail, next) = match outcome.result {
                    StepResult::Advanced { next } => (StepKind::Advanced, None, Some(next)),
                    StepResult::Collision { detail } => (StepKind::Collision, Some(detail), None),
                    StepResult::Invalid { detail } => (StepKind::Invalid, Some(detail), None),
                };
                let goal_reached = next.as_ref().is_some_and(|s| s.world.is_goal());
                events.push(TraceEvent::StepApplied {
                    iteration,
                    assignment: assignment.clone(),
                    result,
                    detail: step_detail.clone(),
                    goal_reached,
                });
                let Some(next) = next else {
                    detail = step_detail;
                    finished = true;
                    break;
                };
                steps_taken += 1;
                history.push(HistoryEntry {
                    step: state.step,
                    facts: state_facts(&state),
                    assignment,
                    dialogue,
                    lift_feedback: state_facts(&next).render_lift_feedback(),
                });
                state = next;
                if goal_reached {
                    finished = true;
                    break;
                }
            }
            if !finished {
                detail = Some(format!("goal not reached in {max_iterations} planning iterations"));
                events.push(TraceEvent::IterationLimit {
                    iterations: max_iterations,
                });
            }
            usage = gateway.usage();
        }
        Ok(_) => {}
    }

    let rel = format!("transcripts/{id}.jsonl");
    write_events(&transcript_path(&config.out_dir, &id), &events)?;
    let outcome = classify(&events);
    Ok(TrialRecord {
        trial_id: id,
        env: config.scenario.env,
        framework: config.framework,
        robot_count: config.scenario.robot_count,
        trial_index: config.trial_index,
        seed: config.scenario.seed,
        config_digest: config.digest(),
        detail: if outcome.is_success() { None } else { detail },
        outcome,
        steps_taken,
        api_calls: usage.api_calls,
        prompt_tokens: usage.prompt_tokens,
        response_tokens: usage.response_tokens,
        total_tokens: usage.total_tokens(),
        wall_time_ms: usage.latency_ms,
        optimal_steps,
        max_iterations,
        transcript: rel,
    })
}

fn write_events(path: &Path, events: &[TraceEvent]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    for e in events {
        writeln!(out, "{}", canonical_json(e))?;
    }
    out.flush()
}

/// Whether a record enters success-rate denominators.
pub fn is_comparable(record: &TrialRecord) -> bool {
    record.outcome.cause() != Some(FailureCause::InfraError)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_names_round_trip() {
        for s in ["remote", "oracle", "oracle-adversarial", "cassette", "cassette:out/c", "scripted:f.json"] {
            assert_eq!(s.parse::<BackendSpec>().unwrap().to_string(), s);
        }
        assert!("scripted".parse::<BackendSpec>().is_err());
        assert!("gpt".parse::<BackendSpec>().is_err());
    }

    #[test]
    fn digest_ignores_backend_and_output() {
        let spec = ScenarioSpec::new(EnvKind::BoxNet1, 4, 7);
        let a = TrialConfig::new(spec.clone(), FrameworkKind::Cmas, BackendSpec::Oracle, "a");
        let mut b = TrialConfig::new(spec, FrameworkKind::Cmas, "cassette".parse().unwrap(), "b");
        assert_eq!(a.digest(), b.digest());
        b.trial_index = 1;
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn trial_id_format() {
        assert_eq!(trial_id(EnvKind::BoxNet1, FrameworkKind::Cmas, 4, 3), "boxnet1-cmas-r4-t03");
    }

    #[test]
    fn oracle_trial_is_optimal() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = TrialConfig::new(
            ScenarioSpec::new(EnvKind::Warehouse, 2, 3),
            FrameworkKind::Hmas2,
            BackendSpec::Oracle,
            dir.path(),
        );
        let rec = run_trial(&cfg).unwrap();
        assert_eq!(rec.outcome, Outcome::Success);
        assert_eq!(Some(rec.steps_taken), rec.optimal_steps);
        let events = super::super::read_transcript(&dir.path().join(&rec.transcript)).unwrap();
        assert_eq!(classify(&events), rec.outcome);
        assert!(dir.path().join("cassettes").join(format!("{}.jsonl", rec.trial_id)).exists());
    }
}
