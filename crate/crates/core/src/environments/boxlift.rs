//! BoxLift: robots of differing strength team up to lift boxes. A box rises
//! when the combined capability of its lifters beats its hidden weight.

use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::env::{Action, ActionKind, EnvError, Param, RobotId};

/// Comparison between summed capability and box weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftRule {
    /// Capability must exceed the weight.
    #[default]
    Strict,
    /// Capability equal to the weight also lifts.
    AtLeast,
}

impl LiftRule {
    pub fn lifts(self, capability: f64, weight: f64) -> bool {
        match self {
            LiftRule::Strict => capability > weight,
            LiftRule::AtLeast => capability >= weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftBox {
    pub label: String,
    pub size: f64,
    pub weight: f64,
    pub lifted: bool,
}

impl Eq for LiftBox {}

impl Hash for LiftBox {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.label.hash(state);
        self.size.to_bits().hash(state);
        self.weight.to_bits().hash(state);
        self.lifted.hash(state);
    }
}

/// Result of one attempted lift, shown to planners on the next step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LiftFeedback {
    pub box_label: String,
    pub lifted: bool,
    pub lifters: Vec<RobotId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxLiftState {
    pub capabilities: Vec<f64>,
    pub boxes: Vec<LiftBox>,
    /// Attempts made in the most recent step.
    pub lift_feedback: Vec<LiftFeedback>,
    pub rule: LiftRule,
}

impl Eq for BoxLiftState {}

impl Hash for BoxLiftState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for c in &self.capabilities {
            c.to_bits().hash(state);
        }
        self.boxes.hash(state);
        self.lift_feedback.hash(state);
        self.rule.hash(state);
    }
}

impl BoxLiftState {
    pub fn robot_count(&self) -> usize {
        self.capabilities.len()
    }

    pub(crate) fn actions_for(&self, robot: RobotId) -> Vec<Action> {
        self.boxes
            .iter()
            .filter(|b| !b.lifted)
            .map(|b| Action::new(robot, ActionKind::Lift, vec![Param::Box(b.label.clone())]))
            .collect()
    }

    pub(crate) fn without_feedback(&self) -> Self {
        Self {
            lift_feedback: Vec::new(),
            ..self.clone()
        }
    }

    pub(crate) fn step(&self, joint: &[Action]) -> Self {
        let mut teams: BTreeMap<String, BTreeSet<RobotId>> = BTreeMap::new();
        for a in joint {
            if a.kind == ActionKind::Lift {
                if let Some(label) = a.params.first().and_then(Param::as_box) {
                    teams.entry(label.to_string()).or_default().insert(a.robot);
                }
            }
        }
        // each robot has exactly one action, so the teams are disjoint
        let verdicts = lift_resolution(&teams, self).expect("joint action has one action per robot");
        let mut next = self.clone();
        next.lift_feedback.clear();
        for (label, lifted) in verdicts {
            if let Some(b) = next.boxes.iter_mut().find(|b| b.label == label) {
                b.lifted |= lifted;
            }
            next.lift_feedback.push(LiftFeedback {
                lifters: teams[&label].iter().copied().collect(),
                box_label: label,
                lifted,
            });
        }
        next
    }

    pub fn is_goal(&self) -> bool {
        self.boxes.iter().all(|b| b.lifted)
    }
}

/// Decides which boxes rise given the lifting teams. Every robot may appear
/// in at most one team; boxes without a team are not reported.
pub fn lift_resolution(
    teams: &BTreeMap<String, BTreeSet<RobotId>>,
    state: &BoxLiftState,
) -> Result<BTreeMap<String, bool>, EnvError> {
    let mut seen: BTreeMap<RobotId, &str> = BTreeMap::new();
    for (label, robots) in teams {
        for &r in robots {
            if r.0 >= state.capabilities.len() {
                return Err(EnvError::InvalidLift(format!("{r} does not exist")));
            }
            if let Some(other) = seen.insert(r, label) {
                return Err(EnvError::InvalidLift(format!(
                    "{r} assigned to both box_{other} and box_{label}"
                )));
            }
        }
    }
    let mut out = BTreeMap::new();
    for (label, robots) in teams {
        let b = state
            .boxes
            .iter()
            .find(|b| &b.label == label)
            .ok_or_else(|| EnvError::InvalidLift(format!("no box_{label}")))?;
        if robots.is_empty() {
            continue;
        }
        let total: f64 = robots.iter().map(|r| state.capabilities[r.0]).sum();
        out.insert(label.clone(), state.rule.lifts(total, b.weight));
    }
    Ok(out)
}
