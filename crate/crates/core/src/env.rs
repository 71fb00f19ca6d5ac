//! Environment-agnostic state and action model.
//!
//! Every environment is a pure transition system: `available_actions` enumerates
//! what each robot may do, `apply_joint_action` resolves one simultaneous step,
//! and `is_goal` checks the task predicate. States are immutable values.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environments::{boxlift, boxnet1, boxnet2, warehouse};
use crate::facts::StateFacts;

/// Errors raised by environment queries.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EnvError {
    #[error("unknown robot {0}")]
    UnknownRobot(RobotId),
    #[error("invalid lift assignment: {0}")]
    InvalidLift(String),
}

/// Dense robot index, rendered as `robot<k>` in prompts and plans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RobotId(pub usize);

impl RobotId {
    pub fn name(self) -> String {
        format!("robot{}", self.0)
    }

    /// Parses `robot<k>`; returns `None` for anything else.
    pub fn parse_name(name: &str) -> Option<Self> {
        let digits = name.strip_prefix("robot")?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if digits.len() > 1 && digits.starts_with('0') {
            return None;
        }
        digits.parse().ok().map(RobotId)
    }
}

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "robot{}", self.0)
    }
}

/// The four benchmark environments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    BoxNet1,
    BoxNet2,
    Warehouse,
    BoxLift,
}

impl EnvKind {
    pub const ALL: [EnvKind; 4] = [
        EnvKind::BoxNet1,
        EnvKind::BoxNet2,
        EnvKind::Warehouse,
        EnvKind::BoxLift,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnvKind::BoxNet1 => "boxnet1",
            EnvKind::BoxNet2 => "boxnet2",
            EnvKind::Warehouse => "warehouse",
            EnvKind::BoxLift => "boxlift",
        }
    }

    /// Robot counts used by the benchmark schedule.
    pub fn robot_schedule(self) -> [usize; 4] {
        match self {
            EnvKind::BoxNet1 | EnvKind::BoxNet2 => [4, 8, 16, 32],
            EnvKind::Warehouse | EnvKind::BoxLift => [4, 6, 8, 10],
        }
    }

    /// Whether the environment can report collisions at all.
    pub fn has_collisions(self) -> bool {
        matches!(self, EnvKind::BoxNet2 | EnvKind::Warehouse)
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "boxnet1" => Ok(EnvKind::BoxNet1),
            "boxnet2" => Ok(EnvKind::BoxNet2),
            "warehouse" => Ok(EnvKind::Warehouse),
            "boxlift" => Ok(EnvKind::BoxLift),
            other => Err(format!("unknown environment `{other}`")),
        }
    }
}

/// Action tags across all environments.
///
/// Declaration order is the enumeration order of `available_actions`;
/// `DoNothing` is deliberately last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Move,
    MoveLeft,
    MoveRight,
    Pick,
    Place,
    LeaveTarget,
    Lift,
    DoNothing,
}

impl ActionKind {
    pub const ALL: [ActionKind; 8] = [
        ActionKind::Move,
        ActionKind::MoveLeft,
        ActionKind::MoveRight,
        ActionKind::Pick,
        ActionKind::Place,
        ActionKind::LeaveTarget,
        ActionKind::Lift,
        ActionKind::DoNothing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Move => "move",
            ActionKind::MoveLeft => "move_left",
            ActionKind::MoveRight => "move_right",
            ActionKind::Pick => "pick",
            ActionKind::Place => "place",
            ActionKind::LeaveTarget => "leave_target",
            ActionKind::Lift => "lift",
            ActionKind::DoNothing => "do_nothing",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == name)
    }

    /// Kinds that take hold of a box so no other robot may touch it in the same step.
    pub fn claims_box(self) -> bool {
        matches!(self, ActionKind::Move | ActionKind::Pick | ActionKind::Place)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Typed action argument. Text forms: `box_<label>`, `cell_<r>_<c>`,
/// `corner_<r>_<c>`, `goal_<label>`, `loc_<i>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Param {
    Box(String),
    Cell(u16, u16),
    Corner(u16, u16),
    Goal(String),
    Location(u16),
}

/// Shape of a parameter slot, used for arity/type checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamType {
    Box,
    Cell,
    Corner,
    Goal,
    Location,
}

impl Param {
    pub fn param_type(&self) -> ParamType {
        match self {
            Param::Box(_) => ParamType::Box,
            Param::Cell(..) => ParamType::Cell,
            Param::Corner(..) => ParamType::Corner,
            Param::Goal(_) => ParamType::Goal,
            Param::Location(_) => ParamType::Location,
        }
    }

    pub fn as_box(&self) -> Option<&str> {
        match self {
            Param::Box(label) => Some(label),
            _ => None,
        }
    }
}

fn is_label(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
}

fn parse_pair(s: &str) -> Option<(u16, u16)> {
    let (a, b) = s.split_once('_')?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("unrecognised argument `{s}`");
        if let Some(rest) = s.strip_prefix("box_") {
            return is_label(rest).then(|| Param::Box(rest.to_string())).ok_or_else(bad);
        }
        if let Some(rest) = s.strip_prefix("goal_") {
            return is_label(rest).then(|| Param::Goal(rest.to_string())).ok_or_else(bad);
        }
        if let Some(rest) = s.strip_prefix("cell_") {
            return parse_pair(rest).map(|(r, c)| Param::Cell(r, c)).ok_or_else(bad);
        }
        if let Some(rest) = s.strip_prefix("corner_") {
            return parse_pair(rest).map(|(r, c)| Param::Corner(r, c)).ok_or_else(bad);
        }
        if let Some(rest) = s.strip_prefix("loc_") {
            return rest.parse().map(Param::Location).map_err(|_| bad());
        }
        Err(bad())
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Box(l) => write!(f, "box_{l}"),
            Param::Cell(r, c) => write!(f, "cell_{r}_{c}"),
            Param::Corner(r, c) => write!(f, "corner_{r}_{c}"),
            Param::Goal(l) => write!(f, "goal_{l}"),
            Param::Location(i) => write!(f, "loc_{i}"),
        }
    }
}

impl From<Param> for String {
    fn from(p: Param) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Param {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// One concrete action for one robot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Action {
    pub robot: RobotId,
    pub kind: ActionKind,
    pub params: Vec<Param>,
}

impl Action {
    pub fn new(robot: RobotId, kind: ActionKind, params: Vec<Param>) -> Self {
        Self { robot, kind, params }
    }

    pub fn do_nothing(robot: RobotId) -> Self {
        Self::new(robot, ActionKind::DoNothing, Vec::new())
    }

    pub fn is_do_nothing(&self) -> bool {
        self.kind == ActionKind::DoNothing
    }

    /// The box this action takes exclusive hold of, if any.
    pub fn claimed_box(&self) -> Option<&str> {
        if self.kind.claims_box() {
            self.params.first().and_then(Param::as_box)
        } else {
            None
        }
    }

    /// `kind(arg, arg)` without the robot prefix.
    pub fn call_text(&self) -> String {
        let args: Vec<String> = self.params.iter().map(Param::to_string).collect();
        format!("{}({})", self.kind, args.join(", "))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.robot, self.call_text())
    }
}

/// At most one action per robot, keyed by robot.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<Action>", into = "Vec<Action>")]
pub struct ActionAssignment {
    entries: BTreeMap<RobotId, Action>,
}

impl ActionAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an action, replacing any earlier entry for the same robot.
    pub fn insert(&mut self, action: Action) -> Option<Action> {
        self.entries.insert(action.robot, action)
    }

    pub fn get(&self, robot: RobotId) -> Option<&Action> {
        self.entries.get(&robot)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn actions(&self) -> impl Iterator<Item = &Action> {
        self.entries.values()
    }

    pub fn robots(&self) -> impl Iterator<Item = RobotId> + '_ {
        self.entries.keys().copied()
    }

    /// Returns a copy where every robot in `0..robot_count` has an entry,
    /// defaulting to do-nothing.
    pub fn filled(&self, robot_count: usize) -> Self {
        let mut out = self.clone();
        for r in 0..robot_count {
            out.entries
                .entry(RobotId(r))
                .or_insert_with(|| Action::do_nothing(RobotId(r)));
        }
        out
    }

    pub fn all_do_nothing(robot_count: usize) -> Self {
        Self::new().filled(robot_count)
    }
}

impl FromIterator<Action> for ActionAssignment {
    fn from_iter<I: IntoIterator<Item = Action>>(iter: I) -> Self {
        let mut a = Self::new();
        for action in iter {
            a.insert(action);
        }
        a
    }
}

impl From<Vec<Action>> for ActionAssignment {
    fn from(v: Vec<Action>) -> Self {
        v.into_iter().collect()
    }
}

impl From<ActionAssignment> for Vec<Action> {
    fn from(a: ActionAssignment) -> Self {
        a.entries.into_values().collect()
    }
}

/// Per-step randomised action failure. Probability 0 leaves dynamics deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecutionNoise {
    pub failure_probability: f64,
    pub rng_seed: u64,
}

impl Default for ExecutionNoise {
    fn default() -> Self {
        Self {
            failure_probability: 0.0,
            rng_seed: 0,
        }
    }
}

impl ExecutionNoise {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(failure_probability: f64, rng_seed: u64) -> Self {
        Self {
            failure_probability: failure_probability.clamp(0.0, 1.0),
            rng_seed,
        }
    }
}

/// One robot's action as it was (or was not) carried out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutedAction {
    pub robot: RobotId,
    pub action: Action,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum StepResult {
    Advanced { next: EnvState },
    Collision { detail: String },
    Invalid { detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub result: StepResult,
    pub executed: Vec<ExecutedAction>,
}

impl StepOutcome {
    pub fn next_state(&self) -> Option<&EnvState> {
        match &self.result {
            StepResult::Advanced { next } => Some(next),
            _ => None,
        }
    }

    pub fn is_collision(&self) -> bool {
        matches!(self.result, StepResult::Collision { .. })
    }

    pub fn is_invalid(&self) -> bool {
        matches!(self.result, StepResult::Invalid { .. })
    }
}

/// Environment-specific world configuration. Step counter lives in [`EnvState`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "env", rename_all = "lowercase")]
pub enum World {
    BoxNet1(boxnet1::BoxNet1State),
    BoxNet2(boxnet2::BoxNet2State),
    Warehouse(warehouse::WarehouseState),
    BoxLift(boxlift::BoxLiftState),
}

/// Outcome of the deterministic core of a step, before it is wrapped into a
/// [`StepOutcome`].
pub(crate) enum Transition {
    Next(World),
    Collision(String),
}

impl World {
    pub fn kind(&self) -> EnvKind {
        match self {
            World::BoxNet1(_) => EnvKind::BoxNet1,
            World::BoxNet2(_) => EnvKind::BoxNet2,
            World::Warehouse(_) => EnvKind::Warehouse,
            World::BoxLift(_) => EnvKind::BoxLift,
        }
    }

    pub fn robot_count(&self) -> usize {
        match self {
            World::BoxNet1(s) => s.robot_count(),
            World::BoxNet2(s) => s.robot_count(),
            World::Warehouse(s) => s.robot_count(),
            World::BoxLift(s) => s.robot_count(),
        }
    }

    pub(crate) fn actions_for(&self, robot: RobotId) -> Vec<Action> {
        let mut actions = match self {
            World::BoxNet1(s) => s.actions_for(robot),
            World::BoxNet2(s) => s.actions_for(robot),
            World::Warehouse(s) => s.actions_for(robot),
            World::BoxLift(s) => s.actions_for(robot),
        };
        actions.push(Action::do_nothing(robot));
        actions.sort();
        actions.dedup();
        actions
    }

    /// Deterministic transition for a full, pre-validated, conflict-free joint action.
    pub(crate) fn transition(&self, joint: &[Action]) -> Transition {
        match self {
            World::BoxNet1(s) => Transition::Next(World::BoxNet1(s.step(joint))),
            World::BoxNet2(s) => match s.step(joint) {
                Ok(next) => Transition::Next(World::BoxNet2(next)),
                Err(detail) => Transition::Collision(detail),
            },
            World::Warehouse(s) => match s.step(joint) {
                Ok(next) => Transition::Next(World::Warehouse(next)),
                Err(detail) => Transition::Collision(detail),
            },
            World::BoxLift(s) => Transition::Next(World::BoxLift(s.step(joint))),
        }
    }

    pub fn is_goal(&self) -> bool {
        match self {
            World::BoxNet1(s) => s.is_goal(),
            World::BoxNet2(s) => s.is_goal(),
            World::Warehouse(s) => s.is_goal(),
            World::BoxLift(s) => s.is_goal(),
        }
    }

    /// Copy with presentation-only data (lift feedback) cleared, for search dedup.
    pub fn search_key(&self) -> World {
        match self {
            World::BoxLift(s) => World::BoxLift(s.without_feedback()),
            other => other.clone(),
        }
    }
}

/// Immutable world snapshot plus step counter.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnvState {
    pub step: u32,
    pub world: World,
}

impl EnvState {
    pub fn new(world: World) -> Self {
        Self { step: 0, world }
    }

    pub fn kind(&self) -> EnvKind {
        self.world.kind()
    }

    pub fn robot_count(&self) -> usize {
        self.world.robot_count()
    }

    pub fn robots(&self) -> impl Iterator<Item = RobotId> {
        (0..self.robot_count()).map(RobotId)
    }

    pub fn check_robot(&self, robot: RobotId) -> Result<(), EnvError> {
        if robot.0 < self.robot_count() {
            Ok(())
        } else {
            Err(EnvError::UnknownRobot(robot))
        }
    }
}

/// Every action the robot could physically take, collisions included.
/// Always contains do-nothing; sorted by kind then params.
pub fn available_actions(state: &EnvState, robot: RobotId) -> Result<Vec<Action>, EnvError> {
    state.check_robot(robot)?;
    Ok(state.world.actions_for(robot))
}

/// Robots with something to do besides do-nothing.
pub fn active_robots(state: &EnvState) -> Vec<RobotId> {
    state
        .robots()
        .filter(|&r| state.world.actions_for(r).len() > 1)
        .collect()
}

/// Boxes claimed by more than one robot in the same step.
pub fn conflicting_claims<'a, I>(actions: I) -> BTreeMap<String, Vec<RobotId>>
where
    I: IntoIterator<Item = &'a Action>,
{
    let mut claims: BTreeMap<String, Vec<RobotId>> = BTreeMap::new();
    for action in actions {
        if let Some(b) = action.claimed_box() {
            claims.entry(b.to_string()).or_default().push(action.robot);
        }
    }
    claims.retain(|_, robots| robots.len() > 1);
    claims
}

fn noise_rng(noise: &ExecutionNoise, step: u32) -> ChaCha8Rng {
    let seed = noise
        .rng_seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(u64::from(step));
    ChaCha8Rng::seed_from_u64(seed)
}

/// Resolves one simultaneous step. All actions read the pre-step state.
pub fn apply_joint_action(
    state: &EnvState,
    assignment: &ActionAssignment,
    noise: &ExecutionNoise,
) -> StepOutcome {
    let n = state.robot_count();
    let joint = assignment.filled(n);

    let mut problems = Vec::new();
    for robot in assignment.robots() {
        if robot.0 >= n {
            problems.push(format!("{robot} does not exist"));
        }
    }
    if problems.is_empty() {
        for action in joint.actions() {
            if !state.world.actions_for(action.robot).contains(action) {
                problems.push(format!("{action} is not available"));
            }
        }
        for (b, robots) in conflicting_claims(joint.actions()) {
            let names: Vec<String> = robots.iter().map(|r| r.name()).collect();
            problems.push(format!("box_{b} handled by {} at once", names.join(" and ")));
        }
    }
    if !problems.is_empty() {
        let executed = joint
            .actions()
            .map(|a| ExecutedAction {
                robot: a.robot,
                action: a.clone(),
                success: false,
            })
            .collect();
        return StepOutcome {
            result: StepResult::Invalid {
                detail: problems.join("; "),
            },
            executed,
        };
    }

    let mut rng = (noise.failure_probability > 0.0).then(|| noise_rng(noise, state.step));
    let mut effective = Vec::with_capacity(n);
    let mut executed = Vec::with_capacity(n);
    for action in joint.actions() {
        let failed = match rng.as_mut() {
            Some(rng) => rng.gen::<f64>() < noise.failure_probability,
            None => false,
        };
        executed.push(ExecutedAction {
            robot: action.robot,
            action: action.clone(),
            success: !failed,
        });
        effective.push(if failed {
            Action::do_nothing(action.robot)
        } else {
            action.clone()
        });
    }

    let result = match state.world.transition(&effective) {
        Transition::Next(world) => StepResult::Advanced {
            next: EnvState {
                step: state.step + 1,
                world,
            },
        },
        Transition::Collision(detail) => StepResult::Collision { detail },
    };
    StepOutcome { result, executed }
}

pub fn is_goal(state: &EnvState) -> bool {
    state.world.is_goal()
}

pub fn state_facts(state: &EnvState) -> StateFacts {
    crate::facts::describe(state)
}

/// Set of box labels referenced by any action, used by property tests and the verifier.
pub fn boxes_touched(actions: &[Action]) -> BTreeSet<String> {
    actions
        .iter()
        .flat_map(|a| a.params.iter().filter_map(Param::as_box).map(str::to_string))
        .collect()
}
