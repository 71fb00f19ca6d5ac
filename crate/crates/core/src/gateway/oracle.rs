//! Deterministic planner backend driven by the optimal search.

use std::collections::{HashMap, HashSet};
use std::sync::Mutex;

use super::{Backend, BackendError, BackendReply, ChatRequest};
use crate::dialogue::grammar::{format_assignment, format_plan_lines};
use crate::dialogue::TurnPurpose;
use crate::env::{apply_joint_action, Action, ActionAssignment, EnvState, ExecutionNoise, RobotId, World};
use crate::environments::{optimal_plan, SearchError, SearchLimits};
use crate::prompt::AgentRole;
use crate::verifier::verify;

/// Optimal next joint action and remaining distance for every state seen on
/// an optimal path. Shared between trials.
#[derive(Debug)]
pub struct PlanCache {
    limits: SearchLimits,
    cap: u32,
    plans: Mutex<HashMap<World, Option<(ActionAssignment, u32)>>>,
}

impl Default for PlanCache {
    fn default() -> Self {
        Self::new(SearchLimits::default(), 60)
    }
}

impl PlanCache {
    pub fn new(limits: SearchLimits, cap: u32) -> Self {
        Self {
            limits,
            cap,
            plans: Mutex::new(HashMap::new()),
        }
    }

    fn lookup(&self, state: &EnvState) -> Result<Option<(ActionAssignment, u32)>, SearchError> {
        let key = state.world.search_key();
        if let Some(hit) = self.plans.lock().expect("plan cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let n = state.robot_count();
        let found = optimal_plan(state, self.cap, &self.limits)?;
        let mut plans = self.plans.lock().expect("plan cache lock");
        match found {
            None => {
                plans.insert(key, None);
                Ok(None)
            }
            Some(plan) => {
                let len = plan.len() as u32;
                let mut at = key.clone();
                for (i, step) in plan.iter().enumerate() {
                    plans.insert(at, Some((step.assignment.filled(n), len - i as u32)));
                    at = step.next.clone();
                }
                plans.insert(at, Some((ActionAssignment::all_do_nothing(n), 0)));
                Ok(plans.get(&key).cloned().flatten())
            }
        }
    }

    /// Minimal remaining steps, `None` if the goal is out of reach within the cap.
    pub fn optimal_steps(&self, state: &EnvState) -> Result<Option<u32>, SearchError> {
        Ok(self.lookup(state)?.map(|(_, d)| d))
    }

    /// First joint action of an optimal plan; all do-nothing at the goal.
    pub fn next_action(&self, state: &EnvState) -> Result<ActionAssignment, String> {
        match self.lookup(state) {
            Ok(Some((a, _))) => Ok(a),
            Ok(None) => Err(format!("no plan within {} steps", self.cap)),
            Err(e) => Err(e.to_string()),
        }
    }
}

/// A verifier-clean joint action in which two robots collide and everyone
/// else does nothing.
pub fn find_colliding_assignment(state: &EnvState) -> Option<ActionAssignment> {
    let n = state.robot_count();
    let menus: Vec<Vec<Action>> = state.robots().map(|r| state.world.actions_for(r)).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            for a in menus[i].iter().filter(|a| !a.is_do_nothing()) {
                for b in menus[j].iter().filter(|b| !b.is_do_nothing()) {
                    let joint = ActionAssignment::from(vec![a.clone(), b.clone()]).filled(n);
                    if verify(&joint, state).ok && apply_joint_action(state, &joint, &ExecutionNoise::none()).is_collision()
                    {
                        return Some(joint);
                    }
                }
            }
        }
    }
    None
}

/// Answers every request with the optimal plan. Local reviewers agree exactly
/// when their assigned action matches it. The adversarial variant first
/// proposes a colliding plan once per trial.
#[derive(Debug)]
pub struct OracleBackend {
    cache: std::sync::Arc<PlanCache>,
    adversarial: bool,
    sabotaged: Mutex<HashSet<String>>,
}

impl OracleBackend {
    pub fn new(cache: std::sync::Arc<PlanCache>) -> Self {
        Self {
            cache,
            adversarial: false,
            sabotaged: Mutex::new(HashSet::new()),
        }
    }

    pub fn adversarial(cache: std::sync::Arc<PlanCache>) -> Self {
        Self {
            adversarial: true,
            ..Self::new(cache)
        }
    }

    pub fn cache(&self) -> &std::sync::Arc<PlanCache> {
        &self.cache
    }

    /// Reply text for a request, ignoring adversarial behaviour.
    pub(crate) fn answer(&self, req: &ChatRequest<'_>) -> Result<String, BackendError> {
        let view = req
            .view
            .ok_or_else(|| BackendError::Fatal("oracle needs a planning view".into()))?;
        let plan = self.cache.next_action(view.state).map_err(BackendError::Fatal)?;
        Ok(match (req.role, req.purpose) {
            (AgentRole::Local(r), TurnPurpose::Feedback) => review(r, &plan, view.proposal),
            (_, TurnPurpose::InitialPlan) => format_plan_lines(&plan),
            _ => format_assignment(&plan),
        })
    }

    pub(crate) fn colliding(&self, req: &ChatRequest<'_>) -> Option<String> {
        let view = req.view?;
        find_colliding_assignment(view.state).map(|a| format_assignment(&a))
    }
}

fn review(robot: RobotId, plan: &ActionAssignment, proposal: Option<&ActionAssignment>) -> String {
    let wanted = plan.get(robot).cloned().unwrap_or_else(|| Action::do_nothing(robot));
    let given = proposal
        .and_then(|p| p.get(robot).cloned())
        .unwrap_or_else(|| Action::do_nothing(robot));
    if wanted == given {
        "AGREE".to_string()
    } else {
        format!("DISAGREE: instead of {} I should do {}", given.call_text(), wanted.call_text())
    }
}

impl Backend for OracleBackend {
    fn id(&self) -> &str {
        if self.adversarial {
            "oracle-adversarial"
        } else {
            "oracle"
        }
    }

    fn respond(&self, req: &ChatRequest<'_>) -> Result<BackendReply, BackendError> {
        if self.adversarial && req.role.is_central() && req.purpose == TurnPurpose::PlanProposal {
            let first = self
                .sabotaged
                .lock()
                .expect("sabotage lock")
                .insert(req.trial_id.to_string());
            if first {
                if let Some(text) = self.colliding(req) {
                    return Ok(BackendReply { text, latency_ms: 0 });
                }
            }
        }
        Ok(BackendReply {
            text: self.answer(req)?,
            latency_ms: 0,
        })
    }
}
