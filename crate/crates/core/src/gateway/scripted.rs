//! Fixture-driven backend for deterministic tests.
//!
//! A fixture is a JSON list of rules. The first rule matching the request's
//! role and purpose supplies the reply; each rule keeps its own position per
//! trial. Two directives delegate to the oracle: `@oracle` (optimal reply)
//! and `@collide` (a colliding plan, or the optimal one if none exists).
//!
//! ```json
//! {"rules": [
//!   {"role": "central", "purpose": "plan_proposal", "responses": ["@collide", "@oracle"]},
//!   {"role": "local", "responses": ["@oracle"]}
//! ]}
//! ```

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::oracle::{OracleBackend, PlanCache};
use super::{Backend, BackendError, BackendReply, ChatRequest};
use crate::dialogue::TurnPurpose;
use crate::prompt::AgentRole;

pub const ORACLE_DIRECTIVE: &str = "@oracle";
pub const COLLIDE_DIRECTIVE: &str = "@collide";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WhenExhausted {
    #[default]
    RepeatLast,
    Cycle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRule {
    /// `any`, `central`, `local` or a robot name such as `robot2`.
    #[serde(default = "any")]
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<TurnPurpose>,
    pub responses: Vec<String>,
    #[serde(default)]
    pub then: WhenExhausted,
}

fn any() -> String {
    "any".to_string()
}

impl ScriptRule {
    pub fn new(role: &str, purpose: Option<TurnPurpose>, responses: Vec<String>) -> Self {
        Self {
            role: role.to_string(),
            purpose,
            responses,
            then: WhenExhausted::RepeatLast,
        }
    }

    fn matches(&self, role: AgentRole, purpose: TurnPurpose) -> bool {
        let role_ok = match self.role.as_str() {
            "any" => true,
            "central" => role.is_central(),
            "local" => !role.is_central(),
            name => role.to_string() == name,
        };
        role_ok && self.purpose.is_none_or(|p| p == purpose)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptFixture {
    pub rules: Vec<ScriptRule>,
}

impl ScriptFixture {
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("parsing {}: {e}", path.display()))
    }
}

#[derive(Debug)]
pub struct ScriptedBackend {
    fixture: ScriptFixture,
    oracle: OracleBackend,
    positions: Mutex<HashMap<(String, usize), usize>>,
}

impl ScriptedBackend {
    pub fn new(fixture: ScriptFixture, cache: Arc<PlanCache>) -> Self {
        Self {
            fixture,
            oracle: OracleBackend::new(cache),
            positions: Mutex::new(HashMap::new()),
        }
    }

    /// Every request gets the next of `responses`, cycling.
    pub fn cycle(responses: Vec<String>) -> Self {
        let mut rule = ScriptRule::new("any", None, responses);
        rule.then = WhenExhausted::Cycle;
        Self::new(ScriptFixture { rules: vec![rule] }, Arc::new(PlanCache::default()))
    }

    /// Every request gets `text`.
    pub fn echo(text: impl Into<String>) -> Self {
        Self::cycle(vec![text.into()])
    }
}

impl Backend for ScriptedBackend {
    fn id(&self) -> &str {
        "scripted"
    }

    fn respond(&self, req: &ChatRequest<'_>) -> Result<BackendReply, BackendError> {
        let Some((idx, rule)) = self
            .fixture
            .rules
            .iter()
            .enumerate()
            .find(|(_, r)| r.matches(req.role, req.purpose))
        else {
            return Err(BackendError::Fatal(format!(
                "no scripted rule for {} {}",
                req.role,
                req.purpose.as_str()
            )));
        };
        if rule.responses.is_empty() {
            return Err(BackendError::Fatal(format!("scripted rule {idx} has no responses")));
        }
        let pos = {
            let mut positions = self.positions.lock().expect("script position lock");
            let p = positions.entry((req.trial_id.to_string(), idx)).or_insert(0);
            let here = *p;
            *p += 1;
            here
        };
        let n = rule.responses.len();
        let text = match rule.then {
            WhenExhausted::RepeatLast => &rule.responses[pos.min(n - 1)],
            WhenExhausted::Cycle => &rule.responses[pos % n],
        };
        let text = match text.as_str() {
            ORACLE_DIRECTIVE => self.oracle.answer(req)?,
            COLLIDE_DIRECTIVE => match self.oracle.colliding(req) {
                Some(t) => t,
                None => self.oracle.answer(req)?,
            },
            literal => literal.to_string(),
        };
        Ok(BackendReply { text, latency_ms: 0 })
    }
}
