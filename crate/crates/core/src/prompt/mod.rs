//! Seven-section prompt assembly with step-history modes and a sliding
//! token window.
//!
//! Sections always appear in this order: task description, step history,
//! current state, robot state and capability, agent-specialised prompt,
//! communication instruction, and (on re-prompts only) syntactic feedback.

mod templates;
mod tokens;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use templates::{TemplateError, TemplateSet};
pub use tokens::{CharApproxCounter, TokenCounter, WordCounter};

use crate::dialogue::grammar::format_plan_lines;
use crate::dialogue::{FrameworkKind, TurnPurpose};
use crate::env::{ActionAssignment, EnvKind, RobotId};
use crate::facts::StateFacts;

pub const DEFAULT_MAX_PROMPT_TOKENS: usize = 3500;

/// Who a prompt is addressed to. Serialised as `central` or `robot<k>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum AgentRole {
    Central,
    Local(RobotId),
}

impl AgentRole {
    pub fn is_central(self) -> bool {
        self == AgentRole::Central
    }

    pub fn robot(self) -> Option<RobotId> {
        match self {
            AgentRole::Local(r) => Some(r),
            AgentRole::Central => None,
        }
    }
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentRole::Central => f.write_str("central"),
            AgentRole::Local(r) => write!(f, "{r}"),
        }
    }
}

impl From<AgentRole> for String {
    fn from(r: AgentRole) -> String {
        r.to_string()
    }
}

impl TryFrom<String> for AgentRole {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        if s == "central" {
            return Ok(AgentRole::Central);
        }
        RobotId::parse_name(&s)
            .map(AgentRole::Local)
            .ok_or_else(|| format!("unknown agent role `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HistoryMode {
    #[serde(rename = "none")]
    NoHistory,
    #[serde(rename = "state-action")]
    StateActionOnly,
    #[default]
    #[serde(rename = "full")]
    FullHistory,
}

impl HistoryMode {
    pub const ALL: [HistoryMode; 3] = [HistoryMode::NoHistory, HistoryMode::StateActionOnly, HistoryMode::FullHistory];

    pub fn as_str(self) -> &'static str {
        match self {
            HistoryMode::NoHistory => "none",
            HistoryMode::StateActionOnly => "state-action",
            HistoryMode::FullHistory => "full",
        }
    }
}

impl fmt::Display for HistoryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HistoryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown history mode `{s}` (expected none, state-action or full)"))
    }
}

/// One utterance in a dialogue, as shown to other agents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueLine {
    pub speaker: String,
    pub text: String,
}

impl DialogueLine {
    pub fn new(speaker: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            speaker: speaker.into(),
            text: text.into(),
        }
    }

    fn render(&self) -> String {
        format!("{}: {}", self.speaker, self.text.trim())
    }
}

/// One completed planning iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub step: u32,
    pub facts: StateFacts,
    pub assignment: ActionAssignment,
    #[serde(default)]
    pub dialogue: Vec<DialogueLine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift_feedback: Option<String>,
}

pub fn render_history_entry(entry: &HistoryEntry, mode: HistoryMode) -> String {
    let mut out = format!("Step {}:\nState: {}", entry.step, entry.facts.render_compact());
    out.push_str("\nActions: ");
    out.push_str(
        &entry
            .assignment
            .actions()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join("; "),
    );
    if let Some(f) = &entry.lift_feedback {
        out.push_str("\nLift results: ");
        out.push_str(f);
    }
    if mode == HistoryMode::FullHistory && !entry.dialogue.is_empty() {
        out.push_str("\nDialogue:");
        for line in &entry.dialogue {
            out.push('\n');
            out.push_str(&line.render());
        }
    }
    out
}

/// Renders entries oldest first. Empty for an empty slice.
pub fn render_history(entries: &[HistoryEntry], mode: HistoryMode) -> String {
    entries
        .iter()
        .map(|e| render_history_entry(e, mode))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Length of the longest suffix satisfying `fits`, scanning from the newest
/// entry backwards and stopping at the first failure.
fn longest_suffix(len: usize, mut fits: impl FnMut(usize) -> bool) -> usize {
    let mut k = 0;
    while k < len && fits(k + 1) {
        k += 1;
    }
    k
}

/// Number of most recent entries whose rendered history fits in
/// `remaining_budget` tokens. Always 0 in [`HistoryMode::NoHistory`].
pub fn fit_history_window(
    history: &[HistoryEntry],
    mode: HistoryMode,
    remaining_budget: usize,
    counter: &dyn TokenCounter,
) -> usize {
    if mode == HistoryMode::NoHistory {
        return 0;
    }
    let n = history.len();
    longest_suffix(n, |k| counter.count(&render_history(&history[n - k..], mode)) <= remaining_budget)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBudget {
    pub max_prompt_tokens: usize,
    /// Whether the current iteration's dialogue context counts against the cap
    /// when sizing the history window.
    pub count_dialogue_context: bool,
}

impl Default for PromptBudget {
    fn default() -> Self {
        Self {
            max_prompt_tokens: DEFAULT_MAX_PROMPT_TOKENS,
            count_dialogue_context: true,
        }
    }
}

/// Framework-specific material for the agent-specialised section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialogueContext {
    pub framework: FrameworkKind,
    pub purpose: TurnPurpose,
    /// Earlier comments in this iteration, oldest first.
    pub prior_comments: Vec<DialogueLine>,
    /// Agent a comment is passed on to.
    pub next_speaker: Option<RobotId>,
    /// Plan under review (HMAS-2 locals) or being revised (HMAS-2 central).
    pub proposal: Option<ActionAssignment>,
    /// Local replies to the previous proposal (HMAS-2 central).
    pub local_feedback: Vec<DialogueLine>,
    pub syntactic_feedback: Option<String>,
}

impl DialogueContext {
    pub fn new(framework: FrameworkKind, purpose: TurnPurpose) -> Self {
        Self {
            framework,
            purpose,
            prior_comments: Vec::new(),
            next_speaker: None,
            proposal: None,
            local_feedback: Vec::new(),
            syntactic_feedback: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    TaskDescription,
    StepHistory,
    CurrentState,
    RobotStateCapability,
    AgentSpecialized,
    CommunicationInstruction,
    SyntacticFeedback,
}

impl SectionKind {
    pub const ORDER: [SectionKind; 7] = [
        SectionKind::TaskDescription,
        SectionKind::StepHistory,
        SectionKind::CurrentState,
        SectionKind::RobotStateCapability,
        SectionKind::AgentSpecialized,
        SectionKind::CommunicationInstruction,
        SectionKind::SyntacticFeedback,
    ];

    pub fn title(self) -> &'static str {
        match self {
            SectionKind::TaskDescription => "Task Description",
            SectionKind::StepHistory => "Step History",
            SectionKind::CurrentState => "Current State",
            SectionKind::RobotStateCapability => "Robot State & Capability",
            SectionKind::AgentSpecialized => "Agent-Specialized Prompt",
            SectionKind::CommunicationInstruction => "Communication Instruction",
            SectionKind::SyntacticFeedback => "Syntactic Feedback",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub kind: SectionKind,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub role: AgentRole,
    pub sections: Vec<Section>,
    pub rendered_text: String,
    pub token_count: usize,
    /// History entries inside the window.
    pub history_included: usize,
    pub history_total: usize,
}

impl PromptBundle {
    pub fn section(&self, kind: SectionKind) -> Option<&Section> {
        self.sections.iter().find(|s| s.kind == kind)
    }

    /// A bundle wrapping arbitrary text, for gateway tests and tools.
    pub fn raw(role: AgentRole, text: impl Into<String>, counter: &dyn TokenCounter) -> Self {
        let text = text.into();
        Self {
            role,
            token_count: counter.count(&text),
            sections: Vec::new(),
            rendered_text: text,
            history_included: 0,
            history_total: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("prompt needs {fixed_tokens} tokens before any history, over the cap of {cap}")]
    BudgetExhausted { fixed_tokens: usize, cap: usize },
    #[error("{role} is not a robot in this state")]
    UnknownRobot { role: AgentRole },
    #[error(transparent)]
    Template(#[from] TemplateError),
}

fn render_sections(sections: &[Section]) -> String {
    sections
        .iter()
        .map(|s| format!("[{}]\n{}", s.kind.title(), s.body))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Prompt factory holding wording, budget and token counter.
#[derive(Debug, Clone)]
pub struct PromptBuilder {
    pub templates: TemplateSet,
    pub budget: PromptBudget,
    pub counter: Arc<dyn TokenCounter>,
}

impl Default for PromptBuilder {
    fn default() -> Self {
        Self::new(PromptBudget::default(), Arc::new(CharApproxCounter))
    }
}

impl PromptBuilder {
    pub fn new(budget: PromptBudget, counter: Arc<dyn TokenCounter>) -> Self {
        Self {
            templates: TemplateSet::builtin(),
            budget,
            counter,
        }
    }

    pub fn with_templates(mut self, templates: TemplateSet) -> Self {
        self.templates = templates;
        self
    }

    fn task_description(&self, facts: &StateFacts) -> Result<String, TemplateError> {
        let n = facts.robots.len().to_string();
        let grid = facts
            .layout
            .grid
            .map(|(r, c)| format!("{r}x{c}"))
            .unwrap_or_default();
        match facts.env {
            EnvKind::BoxNet1 => self.templates.render("task_boxnet1", &[("robot_count", n), ("grid", grid)]),
            EnvKind::BoxNet2 => self.templates.render("task_boxnet2", &[("robot_count", n), ("grid", grid)]),
            EnvKind::Warehouse => {
                let k = facts.layout.location_count.unwrap_or(0);
                let targets: Vec<String> = facts.layout.target_locations.iter().map(|t| format!("loc_{t}")).collect();
                self.templates.render(
                    "task_warehouse",
                    &[
                        ("robot_count", n),
                        ("location_count", k.to_string()),
                        ("last_location", k.saturating_sub(1).to_string()),
                        ("target_locations", targets.join(", ")),
                    ],
                )
            }
            EnvKind::BoxLift => self.templates.render("task_boxlift", &[("robot_count", n)]),
        }
    }

    fn current_state(facts: &StateFacts) -> String {
        let mut body = facts.render_objects();
        if let Some(f) = facts.render_lift_feedback() {
            body.push_str("\nLast step lift results: ");
            body.push_str(&f);
        }
        body
    }

    /// Persona part and dialogue-context part of the agent-specialised section.
    fn agent_section(
        &self,
        role: AgentRole,
        facts: &StateFacts,
        ctx: &DialogueContext,
    ) -> Result<(String, String), PromptError> {
        let persona = match role {
            AgentRole::Central => self.templates.render("persona_central", &[])?,
            AgentRole::Local(r) => {
                facts.robot(r).ok_or(PromptError::UnknownRobot { role })?;
                self.templates.render("persona_local", &[("robot", r.name())])?
            }
        };
        let mut parts = Vec::new();
        if !ctx.prior_comments.is_empty() {
            let lines: Vec<String> = ctx.prior_comments.iter().map(DialogueLine::render).collect();
            parts.push(format!("Dialogue so far in this step:\n{}", lines.join("\n")));
        }
        if let Some(p) = &ctx.proposal {
            match role {
                AgentRole::Central => parts.push(format!("Your previous proposal:\n{}", format_plan_lines(p))),
                AgentRole::Local(r) => {
                    let own = p.get(r).map(|a| a.to_string()).unwrap_or_else(|| format!("{r}: do_nothing()"));
                    parts.push(format!(
                        "Plan proposed by the central planner:\n{}\nYour assigned action: {own}",
                        format_plan_lines(p)
                    ));
                }
            }
        }
        if !ctx.local_feedback.is_empty() {
            let lines: Vec<String> = ctx.local_feedback.iter().map(DialogueLine::render).collect();
            parts.push(format!("Feedback from the robots:\n{}", lines.join("\n")));
        }
        Ok((persona, parts.join("\n\n")))
    }

    fn communication(&self, role: AgentRole, ctx: &DialogueContext) -> Result<String, TemplateError> {
        match ctx.purpose {
            TurnPurpose::Comment => {
                let next = ctx
                    .next_speaker
                    .map(RobotId::name)
                    .unwrap_or_else(|| "the next robot".to_string());
                self.templates.render("comm_comment", &[("next_agent", next)])
            }
            TurnPurpose::InitialPlan => self.templates.render("comm_initial_plan", &[]),
            TurnPurpose::PlanProposal | TurnPurpose::Execute => self.templates.render("comm_plan_proposal", &[]),
            TurnPurpose::Feedback => {
                let own = match (role, &ctx.proposal) {
                    (AgentRole::Local(r), Some(p)) => p
                        .get(r)
                        .map(|a| a.call_text())
                        .unwrap_or_else(|| "do_nothing()".to_string()),
                    _ => "do_nothing()".to_string(),
                };
                self.templates.render("comm_feedback", &[("own_action", own)])
            }
        }
    }

    pub fn build(
        &self,
        role: AgentRole,
        facts: &StateFacts,
        history: &[HistoryEntry],
        mode: HistoryMode,
        ctx: &DialogueContext,
    ) -> Result<PromptBundle, PromptError> {
        let counter = self.counter.as_ref();
        let cap = self.budget.max_prompt_tokens;
        let (persona, dialogue) = self.agent_section(role, facts, ctx)?;
        let agent_full = if dialogue.is_empty() {
            persona.clone()
        } else {
            format!("{persona}\n\n{dialogue}")
        };
        let agent_sized = if self.budget.count_dialogue_context {
            agent_full.clone()
        } else {
            persona
        };
        let placeholder = self.templates.raw("history_placeholder")?.to_string();

        let mut sections = vec![
            Section {
                kind: SectionKind::TaskDescription,
                body: self.task_description(facts)?,
            },
            Section {
                kind: SectionKind::StepHistory,
                body: placeholder.clone(),
            },
            Section {
                kind: SectionKind::CurrentState,
                body: Self::current_state(facts),
            },
            Section {
                kind: SectionKind::RobotStateCapability,
                body: facts.render_robots(),
            },
            Section {
                kind: SectionKind::AgentSpecialized,
                body: agent_sized,
            },
            Section {
                kind: SectionKind::CommunicationInstruction,
                body: self.communication(role, ctx)?,
            },
        ];
        if let Some(fb) = &ctx.syntactic_feedback {
            sections.push(Section {
                kind: SectionKind::SyntacticFeedback,
                body: format!("Your previous reply could not be used:\n{fb}\nAnswer again, fixing these problems."),
            });
        }

        let fixed = counter.count(&render_sections(&sections));
        if fixed > cap {
            return Err(PromptError::BudgetExhausted { fixed_tokens: fixed, cap });
        }

        let n = history.len();
        let included = if mode == HistoryMode::NoHistory {
            0
        } else {
            let mut trial = sections.clone();
            longest_suffix(n, |k| {
                trial[1].body = render_history(&history[n - k..], mode);
                counter.count(&render_sections(&trial)) <= cap
            })
        };
        if included > 0 {
            sections[1].body = render_history(&history[n - included..], mode);
        }
        sections[4].body = agent_full;

        let rendered_text = render_sections(&sections);
        Ok(PromptBundle {
            role,
            token_count: counter.count(&rendered_text),
            sections,
            rendered_text,
            history_included: included,
            history_total: n,
        })
    }
}

/// Builds a prompt with the built-in wording.
pub fn build_prompt(
    role: AgentRole,
    facts: &StateFacts,
    history: &[HistoryEntry],
    mode: HistoryMode,
    ctx: &DialogueContext,
    budget: PromptBudget,
    counter: Arc<dyn TokenCounter>,
) -> Result<PromptBundle, PromptError> {
    PromptBuilder::new(budget, counter).build(role, facts, history, mode, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{state_facts, Action};
    use crate::environments::{generate_scenario, ScenarioSpec};

    fn facts(env: EnvKind) -> StateFacts {
        state_facts(&generate_scenario(&ScenarioSpec::new(env, 4, 2)).unwrap())
    }

    fn entry(step: u32, f: &StateFacts, chatter: &str) -> HistoryEntry {
        HistoryEntry {
            step,
            facts: f.clone(),
            assignment: ActionAssignment::all_do_nothing(4),
            dialogue: vec![DialogueLine::new("robot0", chatter)],
            lift_feedback: None,
        }
    }

    fn ctx() -> DialogueContext {
        DialogueContext::new(FrameworkKind::Cmas, TurnPurpose::PlanProposal)
    }

    #[test]
    fn section_order_is_fixed() {
        let f = facts(EnvKind::BoxNet1);
        let mut c = ctx();
        c.syntactic_feedback = Some("robot0 [unknown_action]: nope.".into());
        let b = PromptBuilder::default()
            .build(AgentRole::Central, &f, &[], HistoryMode::FullHistory, &c)
            .unwrap();
        let kinds: Vec<_> = b.sections.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, SectionKind::ORDER.to_vec());
        let positions: Vec<usize> = SectionKind::ORDER
            .iter()
            .map(|k| b.rendered_text.find(&format!("[{}]", k.title())).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b.token_count, CharApproxCounter.count(&b.rendered_text));
    }

    #[test]
    fn feedback_section_only_on_reprompt() {
        let f = facts(EnvKind::Warehouse);
        let b = PromptBuilder::default()
            .build(AgentRole::Local(RobotId(1)), &f, &[], HistoryMode::FullHistory, &ctx())
            .unwrap();
        assert!(b.section(SectionKind::SyntacticFeedback).is_none());
        assert_eq!(b.sections.len(), 6);
        assert!(b.rendered_text.contains("You are the planner for robot1"));
    }

    #[test]
    fn no_history_is_placeholder() {
        let f = facts(EnvKind::BoxLift);
        let short: Vec<_> = (0..2).map(|i| entry(i, &f, "hello")).collect();
        let long: Vec<_> = (0..9).map(|i| entry(i, &f, "hello")).collect();
        let builder = PromptBuilder::default();
        let a = builder.build(AgentRole::Central, &f, &short, HistoryMode::NoHistory, &ctx()).unwrap();
        let b = builder.build(AgentRole::Central, &f, &long, HistoryMode::NoHistory, &ctx()).unwrap();
        assert_eq!(a.rendered_text, b.rendered_text);
        assert_eq!(a.section(SectionKind::StepHistory).unwrap().body, "None.");
    }

    #[test]
    fn state_action_mode_drops_dialogue() {
        let f = facts(EnvKind::BoxNet2);
        let h: Vec<_> = (0..3).map(|i| entry(i, &f, &format!("secret remark {i}"))).collect();
        let builder = PromptBuilder::default();
        let sa = builder.build(AgentRole::Central, &f, &h, HistoryMode::StateActionOnly, &ctx()).unwrap();
        assert!(!sa.rendered_text.contains("secret remark"));
        assert!(!sa.rendered_text.contains("Dialogue:"));
        let full = builder.build(AgentRole::Central, &f, &h, HistoryMode::FullHistory, &ctx()).unwrap();
        assert!((0..3).all(|i| full.rendered_text.contains(&format!("secret remark {i}"))));
    }

    #[test]
    fn budget_exhausted_when_fixed_part_too_big() {
        let f = facts(EnvKind::BoxNet1);
        let mut c = DialogueContext::new(FrameworkKind::Dmas, TurnPurpose::Comment);
        c.prior_comments.push(DialogueLine::new("robot0", "x".repeat(20_000)));
        let err = PromptBuilder::default()
            .build(AgentRole::Local(RobotId(1)), &f, &[], HistoryMode::FullHistory, &c)
            .unwrap_err();
        assert!(matches!(err, PromptError::BudgetExhausted { cap: 3500, .. }));
    }

    #[test]
    fn uncounted_dialogue_context_may_exceed_cap() {
        let f = facts(EnvKind::BoxNet1);
        let mut c = DialogueContext::new(FrameworkKind::Dmas, TurnPurpose::Comment);
        c.prior_comments.push(DialogueLine::new("robot0", "x".repeat(20_000)));
        let budget = PromptBudget {
            count_dialogue_context: false,
            ..PromptBudget::default()
        };
        let b = PromptBuilder::new(budget, Arc::new(CharApproxCounter))
            .build(AgentRole::Local(RobotId(1)), &f, &[], HistoryMode::FullHistory, &c)
            .unwrap();
        assert!(b.token_count > 3500);
    }

    #[test]
    fn window_exact_fit() {
        // entries of identical shape so each costs the same number of characters
        let f = facts(EnvKind::BoxNet1);
        let h: Vec<_> = (0..6).map(|i| entry(i, &f, "abc")).collect();
        let one = render_history(&h[5..], HistoryMode::FullHistory).chars().count();
        let sep = 2;
        for k in 0..=6usize {
            let chars = if k == 0 { 0 } else { k * one + (k - 1) * sep };
            let budget = chars.div_ceil(4);
            let got = fit_history_window(&h, HistoryMode::FullHistory, budget, &CharApproxCounter);
            assert_eq!(got, k, "budget {budget}");
        }
        assert_eq!(fit_history_window(&h, HistoryMode::FullHistory, 0, &CharApproxCounter), 0);
        assert_eq!(fit_history_window(&h, HistoryMode::FullHistory, usize::MAX, &CharApproxCounter), 6);
        assert_eq!(fit_history_window(&h, HistoryMode::NoHistory, usize::MAX, &CharApproxCounter), 0);
    }

    #[test]
    fn window_keeps_newest_in_order() {
        let f = facts(EnvKind::BoxNet1);
        let h: Vec<_> = (0..40).map(|i| entry(i, &f, &"talk ".repeat(30))).collect();
        let b = PromptBuilder::default()
            .build(AgentRole::Central, &f, &h, HistoryMode::FullHistory, &ctx())
            .unwrap();
        assert!(b.history_included > 0 && b.history_included < 40);
        assert!(b.token_count <= 3500);
        let body = &b.section(SectionKind::StepHistory).unwrap().body;
        let first = 40 - b.history_included;
        assert!(body.starts_with(&format!("Step {first}:")));
        assert!(body.contains("Step 39:"));
        assert!(!body.contains(&format!("Step {}:", first - 1)));
    }

    #[test]
    fn local_review_shows_full_proposal() {
        let f = facts(EnvKind::Warehouse);
        let mut c = DialogueContext::new(FrameworkKind::Hmas2, TurnPurpose::Feedback);
        let p: ActionAssignment = vec![
            Action::do_nothing(RobotId(0)),
            Action::new(RobotId(1), crate::env::ActionKind::MoveLeft, vec![]),
        ]
        .into();
        c.proposal = Some(p);
        let b = PromptBuilder::default()
            .build(AgentRole::Local(RobotId(1)), &f, &[], HistoryMode::FullHistory, &c)
            .unwrap();
        assert!(b.rendered_text.contains("robot0: do_nothing()"));
        assert!(b.rendered_text.contains("Your assigned action: robot1: move_left()"));
        assert!(b.rendered_text.contains("own assigned action, move_left()"));
    }

    #[test]
    fn role_serde() {
        let json = serde_json::to_string(&[AgentRole::Central, AgentRole::Local(RobotId(3))]).unwrap();
        assert_eq!(json, r#"["central","robot3"]"#);
        let back: Vec<AgentRole> = serde_json::from_str(&json).unwrap();
        assert_eq!(back[1], AgentRole::Local(RobotId(3)));
    }
}
