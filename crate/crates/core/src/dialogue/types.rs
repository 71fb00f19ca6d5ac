//! Framework, purpose, turn and transcript types.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::prompt::AgentRole;
use crate::verifier::VerificationReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameworkKind {
    Dmas,
    Hmas1,
    Cmas,
    Hmas2,
}

impl FrameworkKind {
    pub const ALL: [FrameworkKind; 4] = [
        FrameworkKind::Dmas,
        FrameworkKind::Hmas1,
        FrameworkKind::Cmas,
        FrameworkKind::Hmas2,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            FrameworkKind::Dmas => "dmas",
            FrameworkKind::Hmas1 => "hmas1",
            FrameworkKind::Cmas => "cmas",
            FrameworkKind::Hmas2 => "hmas2",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            FrameworkKind::Dmas => "DMAS",
            FrameworkKind::Hmas1 => "HMAS-1",
            FrameworkKind::Cmas => "CMAS",
            FrameworkKind::Hmas2 => "HMAS-2",
        }
    }
}

impl fmt::Display for FrameworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for FrameworkKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|f| f.slug() == key)
            .ok_or_else(|| format!("unknown framework `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnPurpose {
    Comment,
    InitialPlan,
    PlanProposal,
    Feedback,
    Execute,
}

impl TurnPurpose {
    pub fn as_str(self) -> &'static str {
        match self {
            TurnPurpose::Comment => "comment",
            TurnPurpose::InitialPlan => "initial_plan",
            TurnPurpose::PlanProposal => "plan_proposal",
            TurnPurpose::Feedback => "feedback",
            TurnPurpose::Execute => "execute",
        }
    }
}

/// Outcome of checking one response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum TurnCheck {
    /// Free-form text that is not checked.
    Unchecked,
    Accepted,
    ParseFailed { diagnostics: String },
    Rejected { report: VerificationReport },
    Agree,
    Disagree,
}

impl TurnCheck {
    /// Turns whose output was thrown away and re-prompted.
    pub fn is_retry(&self) -> bool {
        matches!(self, TurnCheck::ParseFailed { .. } | TurnCheck::Rejected { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: AgentRole,
    pub purpose: TurnPurpose,
    /// False for the synthetic closing turn of HMAS-2.
    pub api_call: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call_index: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_digest: Option<String>,
    pub prompt: String,
    pub prompt_tokens: usize,
    pub response: String,
    pub response_tokens: usize,
    pub latency_ms: u64,
    #[serde(flatten)]
    pub check: TurnCheck,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueTranscript {
    pub turns: Vec<Turn>,
}

impl DialogueTranscript {
    pub fn api_calls(&self) -> usize {
        self.turns.iter().filter(|t| t.api_call).count()
    }

    /// Turns that were not discarded for syntax problems.
    pub fn accepted_turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(|t| !t.check.is_retry())
    }

    pub fn count(&self, role_is_central: bool, purpose: TurnPurpose) -> usize {
        self.turns
            .iter()
            .filter(|t| t.api_call && t.purpose == purpose && t.role.is_central() == role_is_central)
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn framework_names() {
        for f in FrameworkKind::ALL {
            assert_eq!(f.slug().parse::<FrameworkKind>().unwrap(), f);
            assert_eq!(f.display_name().parse::<FrameworkKind>().unwrap(), f);
        }
        assert!("HMAS-3".parse::<FrameworkKind>().is_err());
    }
}
