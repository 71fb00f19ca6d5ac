//! Coordination protocols between a central planner and per-robot agents.
//!
//! Every iteration ends with exactly one joint action that parses and passes
//! the verifier, or with a [`ProtocolFailure`].

pub mod grammar;
mod protocols;
mod types;

pub use protocols::{plan_step, PlanSettings, ProtocolFailure, ProtocolLimits, StepPlan};
pub use types::*;

use regex::Regex;

/// One symbol per non-retry turn: `c` initial plan, `p` proposal, `x` central
/// execute, `l` local comment, `e` local execute, `f` local feedback.
pub fn turn_symbols(transcript: &DialogueTranscript) -> String {
    transcript
        .accepted_turns()
        .map(|t| match (t.role.is_central(), t.purpose) {
            (true, TurnPurpose::InitialPlan) => 'c',
            (true, TurnPurpose::PlanProposal) => 'p',
            (true, TurnPurpose::Execute) => 'x',
            (false, TurnPurpose::Comment) => 'l',
            (false, TurnPurpose::Execute) => 'e',
            (false, TurnPurpose::Feedback) => 'f',
            _ => '?',
        })
        .collect()
}

pub fn conformance_pattern(framework: FrameworkKind) -> &'static str {
    match framework {
        FrameworkKind::Cmas => "^x$",
        FrameworkKind::Dmas => "^l*e$",
        FrameworkKind::Hmas1 => "^cl*e$",
        FrameworkKind::Hmas2 => "^(pf+)+x$",
    }
}

/// Whether a successful iteration followed the framework's turn structure.
pub fn conforms(framework: FrameworkKind, transcript: &DialogueTranscript) -> bool {
    Regex::new(conformance_pattern(framework))
        .expect("static pattern")
        .is_match(&turn_symbols(transcript))
}
