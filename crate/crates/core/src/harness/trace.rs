//! Per-trial event log and the outcome classifier over it.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dialogue::{FrameworkKind, ProtocolFailure, Turn};
use crate::env::{ActionAssignment, EnvKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    ContextOverflow,
    ConsensusTimeout,
    SyntaxRetriesExhausted,
    IterationLimit,
    Collision,
    /// Network, replay or configuration faults; not a method failure.
    InfraError,
}

impl FailureCause {
    pub const ALL: [FailureCause; 6] = [
        FailureCause::ContextOverflow,
        FailureCause::ConsensusTimeout,
        FailureCause::SyntaxRetriesExhausted,
        FailureCause::IterationLimit,
        FailureCause::Collision,
        FailureCause::InfraError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureCause::ContextOverflow => "context_overflow",
            FailureCause::ConsensusTimeout => "consensus_timeout",
            FailureCause::SyntaxRetriesExhausted => "syntax_retries_exhausted",
            FailureCause::IterationLimit => "iteration_limit",
            FailureCause::Collision => "collision",
            FailureCause::InfraError => "infra_error",
        }
    }
}

impl fmt::Display for FailureCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Fail { cause: FailureCause },
}

impl Outcome {
    pub fn is_success(self) -> bool {
        matches!(self, Outcome::Success)
    }

    pub fn cause(self) -> Option<FailureCause> {
        match self {
            Outcome::Success => None,
            Outcome::Fail { cause } => Some(cause),
        }
    }

    pub fn is_infra(self) -> bool {
        self.cause() == Some(FailureCause::InfraError)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Success => f.write_str("success"),
            Outcome::Fail { cause } => write!(f, "fail({cause})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Advanced,
    Collision,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    TrialStart {
        trial_id: String,
        env: EnvKind,
        framework: FrameworkKind,
        robot_count: usize,
        seed: u64,
        optimal_steps: Option<u32>,
        max_iterations: u32,
        goal_reached: bool,
    },
    Turn {
        iteration: u32,
        turn: Turn,
    },
    StepApplied {
        iteration: u32,
        assignment: ActionAssignment,
        result: StepKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detail: Option<String>,
        goal_reached: bool,
    },
    Failure {
        iteration: u32,
        failure: ProtocolFailure,
    },
    IterationLimit {
        iterations: u32,
    },
    /// Fault outside the protocol, such as an unreadable fixture.
    Infra {
        detail: String,
    },
}

/// Outcome of a trial as a pure function of its events. The first terminal
/// event decides; a log without one is an infrastructure fault.
pub fn classify(events: &[TraceEvent]) -> Outcome {
    let fail = |cause| Outcome::Fail { cause };
    for event in events {
        match event {
            TraceEvent::TrialStart { goal_reached: true, .. } => return Outcome::Success,
            TraceEvent::Failure { failure, .. } => {
                return fail(match failure {
                    ProtocolFailure::ContextOverflow(_) => FailureCause::ContextOverflow,
                    ProtocolFailure::ConsensusTimeout(_) => FailureCause::ConsensusTimeout,
                    ProtocolFailure::SyntaxRetriesExhausted(_) => FailureCause::SyntaxRetriesExhausted,
                    ProtocolFailure::Infra(_) => FailureCause::InfraError,
                })
            }
            TraceEvent::StepApplied { result: StepKind::Collision, .. } => return fail(FailureCause::Collision),
            TraceEvent::StepApplied { result: StepKind::Invalid, .. } => return fail(FailureCause::InfraError),
            TraceEvent::StepApplied { goal_reached: true, .. } => return Outcome::Success,
            TraceEvent::IterationLimit { .. } => return fail(FailureCause::IterationLimit),
            TraceEvent::Infra { .. } => return fail(FailureCause::InfraError),
            _ => {}
        }
    }
    fail(FailureCause::InfraError)
}

pub fn read_transcript(path: &Path) -> std::io::Result<Vec<TraceEvent>> {
    let reader = BufReader::new(File::open(path)?);
    let mut events = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            events.push(serde_json::from_str(&line).map_err(std::io::Error::other)?);
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn start(goal: bool) -> TraceEvent {
        TraceEvent::TrialStart {
            trial_id: "t".into(),
            env: EnvKind::BoxNet1,
            framework: FrameworkKind::Cmas,
            robot_count: 2,
            seed: 0,
            optimal_steps: Some(2),
            max_iterations: 6,
            goal_reached: goal,
        }
    }

    fn step(result: StepKind, goal: bool) -> TraceEvent {
        TraceEvent::StepApplied {
            iteration: 0,
            assignment: ActionAssignment::new(),
            result,
            detail: None,
            goal_reached: goal,
        }
    }

    #[test]
    fn outcome_serialises_flat() {
        let o = Outcome::Fail {
            cause: FailureCause::Collision,
        };
        assert_eq!(serde_json::to_string(&o).unwrap(), r#"{"status":"fail","cause":"collision"}"#);
        assert_eq!(serde_json::to_string(&Outcome::Success).unwrap(), r#"{"status":"success"}"#);
    }

    #[test]
    fn first_terminal_event_decides() {
        assert_eq!(classify(&[start(true)]), Outcome::Success);
        assert_eq!(
            classify(&[start(false), step(StepKind::Advanced, false), step(StepKind::Advanced, true)]),
            Outcome::Success
        );
        assert_eq!(
            classify(&[start(false), step(StepKind::Collision, false)]).cause(),
            Some(FailureCause::Collision)
        );
        assert_eq!(
            classify(&[start(false), TraceEvent::IterationLimit { iterations: 1 }]).cause(),
            Some(FailureCause::IterationLimit)
        );
        assert_eq!(
            classify(&[
                start(false),
                TraceEvent::Failure {
                    iteration: 0,
                    failure: ProtocolFailure::ConsensusTimeout("x".into())
                }
            ])
            .cause(),
            Some(FailureCause::ConsensusTimeout)
        );
        assert_eq!(classify(&[start(false)]).cause(), Some(FailureCause::InfraError));
    }

    #[test]
    fn events_round_trip() {
        let events = vec![start(false), step(StepKind::Advanced, true)];
        for e in &events {
            let back: TraceEvent = serde_json::from_str(&serde_json::to_string(e).unwrap()).unwrap();
            assert_eq!(&back, e);
        }
    }
}
