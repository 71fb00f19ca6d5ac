//! The four coordination protocols, each producing one verified joint action
//! per planning iteration.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::grammar::{format_assignment, has_marker, parse_execute_block, parse_verdict, ParseOptions};
use super::types::{DialogueTranscript, FrameworkKind, Turn, TurnCheck, TurnPurpose};
use crate::env::{active_robots, state_facts, ActionAssignment, EnvState, RobotId};
use crate::facts::StateFacts;
use crate::gateway::{Gateway, GatewayError, PlanningView};
use crate::prompt::{AgentRole, DialogueContext, DialogueLine, HistoryEntry, HistoryMode, PromptBuilder, PromptError};
use crate::verifier::{feedback_message, verify_actions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolLimits {
    pub max_dialogue_rounds: u32,
    pub max_replan_iterations: u32,
    pub max_syntax_retries: u32,
}

impl Default for ProtocolLimits {
    fn default() -> Self {
        Self {
            max_dialogue_rounds: 10,
            max_replan_iterations: 5,
            max_syntax_retries: 3,
        }
    }
}

impl ProtocolLimits {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_dialogue_rounds == 0 || self.max_replan_iterations == 0 || self.max_syntax_retries == 0 {
            return Err("protocol limits must all be at least 1".into());
        }
        Ok(())
    }
}

/// Why a planning iteration produced no plan.
#[derive(Debug, Clone, Error, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "failure", content = "detail", rename_all = "snake_case")]
pub enum ProtocolFailure {
    #[error("context overflow: {0}")]
    ContextOverflow(String),
    #[error("no consensus: {0}")]
    ConsensusTimeout(String),
    #[error("syntax retries exhausted: {0}")]
    SyntaxRetriesExhausted(String),
    #[error("infrastructure error: {0}")]
    Infra(String),
}

/// Transcript of one planning iteration plus its result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepPlan {
    pub transcript: DialogueTranscript,
    pub result: Result<ActionAssignment, ProtocolFailure>,
}

/// Settings shared by every iteration of a trial.
#[derive(Debug, Clone, Copy)]
pub struct PlanSettings<'a> {
    pub framework: FrameworkKind,
    pub limits: ProtocolLimits,
    pub mode: HistoryMode,
    pub builder: &'a PromptBuilder,
    /// Require every robot to appear in an EXECUTE block.
    pub strict_parse: bool,
}

struct Session<'a, 's> {
    settings: PlanSettings<'a>,
    state: &'s EnvState,
    facts: StateFacts,
    history: &'s [HistoryEntry],
    gateway: &'s mut Gateway,
    transcript: DialogueTranscript,
}

impl Session<'_, '_> {
    fn ask(
        &mut self,
        role: AgentRole,
        ctx: &DialogueContext,
        record_as: TurnPurpose,
    ) -> Result<Turn, ProtocolFailure> {
        let prompt = self
            .settings
            .builder
            .build(role, &self.facts, self.history, self.settings.mode, ctx)
            .map_err(|e| match e {
                PromptError::BudgetExhausted { .. } => ProtocolFailure::ContextOverflow(e.to_string()),
                other => ProtocolFailure::Infra(other.to_string()),
            })?;
        let view = PlanningView {
            state: self.state,
            proposal: ctx.proposal.as_ref(),
        };
        let ex = self
            .gateway
            .complete(&prompt, ctx.purpose, Some(view))
            .map_err(|e| match e {
                GatewayError::ContextOverflow { .. } => ProtocolFailure::ContextOverflow(e.to_string()),
                other => ProtocolFailure::Infra(other.to_string()),
            })?;
        Ok(Turn {
            role,
            purpose: record_as,
            api_call: true,
            call_index: Some(ex.call_index),
            prompt_digest: Some(ex.prompt_digest),
            prompt: prompt.rendered_text,
            prompt_tokens: ex.usage.prompt_tokens,
            response: ex.response,
            response_tokens: ex.usage.response_tokens,
            latency_ms: ex.latency_ms,
            check: TurnCheck::Unchecked,
        })
    }

    /// Parses and verifies an EXECUTE block; on failure returns the check
    /// and the feedback text for the re-prompt.
    fn check_plan(&self, text: &str) -> Result<ActionAssignment, (TurnCheck, String)> {
        let opts = ParseOptions {
            robot_count: Some(self.state.robot_count()),
            strict: self.settings.strict_parse,
        };
        let parsed = parse_execute_block(text, &opts).map_err(|e| {
            let msg = e.to_string();
            (TurnCheck::ParseFailed { diagnostics: msg.clone() }, msg)
        })?;
        let report = verify_actions(&parsed.actions, self.state);
        if report.ok {
            Ok(parsed.assignment)
        } else {
            let msg = feedback_message(&report).expect("report has errors");
            Err((TurnCheck::Rejected { report }, msg))
        }
    }

    /// Central planning call with syntax re-prompts.
    fn central_plan(&mut self, mut ctx: DialogueContext, record_as: TurnPurpose) -> Result<ActionAssignment, ProtocolFailure> {
        let retries = self.settings.limits.max_syntax_retries;
        let mut last = String::new();
        for _ in 0..=retries {
            let mut turn = self.ask(AgentRole::Central, &ctx, record_as)?;
            match self.check_plan(&turn.response) {
                Ok(plan) => {
                    turn.check = TurnCheck::Accepted;
                    self.transcript.turns.push(turn);
                    return Ok(plan);
                }
                Err((check, feedback)) => {
                    turn.check = check;
                    self.transcript.turns.push(turn);
                    ctx.syntactic_feedback = Some(feedback.clone());
                    last = feedback;
                }
            }
        }
        Err(ProtocolFailure::SyntaxRetriesExhausted(format!(
            "central planner after {} attempts: {last}",
            retries + 1
        )))
    }

    /// Ring of local agents commenting until one emits EXECUTE.
    fn discussion(&mut self, agents: &[RobotId], mut comments: Vec<DialogueLine>) -> Result<ActionAssignment, ProtocolFailure> {
        let limits = self.settings.limits;
        for _round in 0..limits.max_dialogue_rounds {
            for (pos, &robot) in agents.iter().enumerate() {
                let mut ctx = DialogueContext::new(self.settings.framework, TurnPurpose::Comment);
                ctx.prior_comments = comments.clone();
                ctx.next_speaker = Some(agents[(pos + 1) % agents.len()]);
                let mut attempts = 0;
                loop {
                    let mut turn = self.ask(AgentRole::Local(robot), &ctx, TurnPurpose::Comment)?;
                    if !has_marker(&turn.response) {
                        comments.push(DialogueLine::new(robot.name(), turn.response.clone()));
                        self.transcript.turns.push(turn);
                        break;
                    }
                    turn.purpose = TurnPurpose::Execute;
                    match self.check_plan(&turn.response) {
                        Ok(plan) => {
                            turn.check = TurnCheck::Accepted;
                            self.transcript.turns.push(turn);
                            return Ok(plan);
                        }
                        Err((check, feedback)) => {
                            turn.check = check;
                            self.transcript.turns.push(turn);
                            attempts += 1;
                            if attempts > limits.max_syntax_retries {
                                return Err(ProtocolFailure::SyntaxRetriesExhausted(format!(
                                    "{robot} after {attempts} attempts: {feedback}"
                                )));
                            }
                            ctx.syntactic_feedback = Some(feedback);
                        }
                    }
                }
            }
        }
        Err(ProtocolFailure::ConsensusTimeout(format!(
            "no EXECUTE after {} dialogue rounds",
            limits.max_dialogue_rounds
        )))
    }

    fn active_agents(&self) -> Result<Vec<RobotId>, ProtocolFailure> {
        let active = active_robots(self.state);
        if active.is_empty() {
            return Err(ProtocolFailure::Infra("no robot has an action besides do_nothing".into()));
        }
        Ok(active)
    }

    fn dmas(&mut self) -> Result<ActionAssignment, ProtocolFailure> {
        let agents: Vec<RobotId> = self.state.robots().collect();
        self.discussion(&agents, Vec::new())
    }

    fn hmas1(&mut self) -> Result<ActionAssignment, ProtocolFailure> {
        let agents = self.active_agents()?;
        let ctx = DialogueContext::new(FrameworkKind::Hmas1, TurnPurpose::InitialPlan);
        let turn = self.ask(AgentRole::Central, &ctx, TurnPurpose::InitialPlan)?;
        let first = DialogueLine::new("central", turn.response.clone());
        self.transcript.turns.push(turn);
        self.discussion(&agents, vec![first])
    }

    fn cmas(&mut self) -> Result<ActionAssignment, ProtocolFailure> {
        let ctx = DialogueContext::new(FrameworkKind::Cmas, TurnPurpose::PlanProposal);
        self.central_plan(ctx, TurnPurpose::Execute)
    }

    fn hmas2(&mut self) -> Result<ActionAssignment, ProtocolFailure> {
        let agents = self.active_agents()?;
        let mut central_ctx = DialogueContext::new(FrameworkKind::Hmas2, TurnPurpose::PlanProposal);
        let loops = self.settings.limits.max_replan_iterations;
        for _ in 0..loops {
            let plan = self.central_plan(central_ctx.clone(), TurnPurpose::PlanProposal)?;
            let mut feedback = Vec::new();
            let mut unanimous = true;
            for &robot in &agents {
                let mut ctx = DialogueContext::new(FrameworkKind::Hmas2, TurnPurpose::Feedback);
                ctx.proposal = Some(plan.clone());
                let mut turn = self.ask(AgentRole::Local(robot), &ctx, TurnPurpose::Feedback)?;
                let agree = parse_verdict(&turn.response) == Some(true);
                turn.check = if agree { TurnCheck::Agree } else { TurnCheck::Disagree };
                unanimous &= agree;
                feedback.push(DialogueLine::new(robot.name(), turn.response.clone()));
                self.transcript.turns.push(turn);
            }
            if unanimous {
                self.transcript.turns.push(Turn {
                    role: AgentRole::Central,
                    purpose: TurnPurpose::Execute,
                    api_call: false,
                    call_index: None,
                    prompt_digest: None,
                    prompt: String::new(),
                    prompt_tokens: 0,
                    response: format_assignment(&plan),
                    response_tokens: 0,
                    latency_ms: 0,
                    check: TurnCheck::Accepted,
                });
                return Ok(plan);
            }
            central_ctx.proposal = Some(plan);
            central_ctx.local_feedback = feedback;
        }
        Err(ProtocolFailure::ConsensusTimeout(format!(
            "robots still disagree after {loops} proposals"
        )))
    }
}

/// Runs one planning iteration of `settings.framework` from `state`.
pub fn plan_step(settings: PlanSettings<'_>, state: &EnvState, history: &[HistoryEntry], gateway: &mut Gateway) -> StepPlan {
    let mut session = Session {
        settings,
        state,
        facts: state_facts(state),
        history,
        gateway,
        transcript: DialogueTranscript::default(),
    };
    let result = match settings.framework {
        FrameworkKind::Dmas => session.dmas(),
        FrameworkKind::Hmas1 => session.hmas1(),
        FrameworkKind::Cmas => session.cmas(),
        FrameworkKind::Hmas2 => session.hmas2(),
    };
    StepPlan {
        transcript: session.transcript,
        result,
    }
}
