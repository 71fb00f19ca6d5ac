//! Rules-based syntactic checking of parsed plans.
//!
//! Legality is set membership in `available_actions`; collisions are not
//! checked here.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{conflicting_claims, ActionAssignment, Action, ActionKind, EnvKind, EnvState, ParamType, RobotId};

/// Maximum number of valid alternatives listed per feedback line.
pub const MAX_ALTERNATIVES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyErrorKind {
    UnknownRobot,
    DuplicateRobot,
    UnknownAction,
    MalformedParams,
    UnavailableAction,
    ConflictingActions,
}

impl VerifyErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerifyErrorKind::UnknownRobot => "unknown_robot",
            VerifyErrorKind::DuplicateRobot => "duplicate_robot",
            VerifyErrorKind::UnknownAction => "unknown_action",
            VerifyErrorKind::MalformedParams => "malformed_params",
            VerifyErrorKind::UnavailableAction => "unavailable_action",
            VerifyErrorKind::ConflictingActions => "conflicting_actions",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyError {
    pub robot: RobotId,
    pub kind: VerifyErrorKind,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alternatives: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub ok: bool,
    pub errors: Vec<VerifyError>,
}

impl VerificationReport {
    fn from_errors(mut errors: Vec<VerifyError>) -> Self {
        errors.sort_by_key(|e| (e.robot, e.kind));
        Self {
            ok: errors.is_empty(),
            errors,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum VerifierError {
    #[error("feedback requested for a report without errors")]
    ReportIsOk,
}

/// Parameter signatures each environment accepts for a given kind.
fn signatures(env: EnvKind, kind: ActionKind) -> Option<&'static [&'static [ParamType]]> {
    use ParamType::*;
    const NONE: &[&[ParamType]] = &[&[]];
    match (env, kind) {
        (_, ActionKind::DoNothing) => Some(NONE),
        (EnvKind::BoxNet1, ActionKind::Move) => Some(&[&[Box, Cell], &[Box, Goal]]),
        (EnvKind::BoxNet2, ActionKind::Move) => Some(&[&[Box, Corner], &[Box, Goal]]),
        (EnvKind::Warehouse, ActionKind::MoveLeft | ActionKind::MoveRight) => Some(NONE),
        (EnvKind::Warehouse, ActionKind::Pick | ActionKind::Place) => Some(&[&[Box]]),
        (EnvKind::Warehouse, ActionKind::LeaveTarget) => Some(&[&[Location]]),
        (EnvKind::BoxLift, ActionKind::Lift) => Some(&[&[Box]]),
        _ => None,
    }
}

fn check_one(action: &Action, state: &EnvState) -> Option<VerifyError> {
    let env = state.kind();
    let err = |kind, message: String, alternatives| {
        Some(VerifyError {
            robot: action.robot,
            kind,
            message,
            alternatives,
        })
    };
    if state.check_robot(action.robot).is_err() {
        return err(
            VerifyErrorKind::UnknownRobot,
            format!(
                "{} does not exist; valid robots are robot0 to robot{}",
                action.robot,
                state.robot_count().saturating_sub(1)
            ),
            Vec::new(),
        );
    }
    let menu = state.world.actions_for(action.robot);
    let alternatives = || {
        menu.iter()
            .take(MAX_ALTERNATIVES)
            .map(Action::call_text)
            .collect::<Vec<_>>()
    };
    let Some(sigs) = signatures(env, action.kind) else {
        return err(
            VerifyErrorKind::UnknownAction,
            format!("`{}` is not an action in {env}", action.kind),
            alternatives(),
        );
    };
    let shape: Vec<ParamType> = action.params.iter().map(|p| p.param_type()).collect();
    if !sigs.contains(&shape.as_slice()) {
        return err(
            VerifyErrorKind::MalformedParams,
            format!("`{}` has the wrong arguments for {}", action.call_text(), action.kind),
            alternatives(),
        );
    }
    if !menu.contains(action) {
        return err(
            VerifyErrorKind::UnavailableAction,
            format!("`{}` is not available to {}", action.call_text(), action.robot),
            alternatives(),
        );
    }
    None
}

/// Checks a raw list of actions, so repeated robots can be reported.
pub fn verify_actions(actions: &[Action], state: &EnvState) -> VerificationReport {
    let mut errors = Vec::new();
    let mut seen = BTreeSet::new();
    let mut firsts = Vec::new();
    for action in actions {
        if !seen.insert(action.robot) {
            errors.push(VerifyError {
                robot: action.robot,
                kind: VerifyErrorKind::DuplicateRobot,
                message: format!("{} is given more than one action", action.robot),
                alternatives: Vec::new(),
            });
            continue;
        }
        match check_one(action, state) {
            Some(e) => errors.push(e),
            None => firsts.push(action),
        }
    }
    for (b, robots) in conflicting_claims(firsts.iter().copied()) {
        let names: Vec<String> = robots.iter().map(|r| r.name()).collect();
        for &r in &robots[1..] {
            errors.push(VerifyError {
                robot: r,
                kind: VerifyErrorKind::ConflictingActions,
                message: format!("box_{b} is handled by {} in the same step", names.join(" and ")),
                alternatives: Vec::new(),
            });
        }
    }
    VerificationReport::from_errors(errors)
}

pub fn verify(assignment: &ActionAssignment, state: &EnvState) -> VerificationReport {
    let actions: Vec<Action> = assignment.actions().cloned().collect();
    verify_actions(&actions, state)
}

/// One explanatory line per error, in report order.
pub fn feedback_message(report: &VerificationReport) -> Result<String, VerifierError> {
    if report.ok {
        return Err(VerifierError::ReportIsOk);
    }
    let lines: Vec<String> = report
        .errors
        .iter()
        .map(|e| {
            let mut line = format!("{} [{}]: {}.", e.robot, e.kind.as_str(), e.message);
            if !e.alternatives.is_empty() {
                line.push_str(&format!(" Valid actions: {}.", e.alternatives.join(", ")));
            }
            line
        })
        .collect();
    Ok(lines.join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{apply_joint_action, ExecutionNoise, Param, World};
    use crate::environments::boxnet2::{BoxNet2State, CornerBox, CornerPosition, GridGoal};
    use crate::environments::{generate_scenario, ScenarioSpec};

    fn two_arm_boxnet2() -> EnvState {
        EnvState::new(World::BoxNet2(BoxNet2State {
            rows: 1,
            cols: 2,
            arms: vec![(0, 0), (0, 1)],
            boxes: vec![
                CornerBox {
                    label: "red".into(),
                    at: CornerPosition::Corner((0, 0)),
                },
                CornerBox {
                    label: "blue".into(),
                    at: CornerPosition::Corner((0, 2)),
                },
            ],
            goals: vec![
                GridGoal {
                    label: "red".into(),
                    cell: (0, 1),
                },
                GridGoal {
                    label: "blue".into(),
                    cell: (0, 0),
                },
            ],
        }))
    }

    #[test]
    fn all_do_nothing_is_ok() {
        for env in EnvKind::ALL {
            let s = generate_scenario(&ScenarioSpec::new(env, 4, 3)).unwrap();
            assert!(verify(&ActionAssignment::all_do_nothing(4), &s).ok);
        }
    }

    #[test]
    fn collision_passes_verifier() {
        let s = two_arm_boxnet2();
        let a: ActionAssignment = vec![
            Action::new(RobotId(0), ActionKind::Move, vec![Param::Box("red".into()), Param::Corner(0, 1)]),
            Action::new(RobotId(1), ActionKind::Move, vec![Param::Box("blue".into()), Param::Corner(0, 1)]),
        ]
        .into();
        assert!(verify(&a, &s).ok);
        assert!(apply_joint_action(&s, &a, &ExecutionNoise::none()).is_collision());
    }

    #[test]
    fn box_outside_cell_is_unavailable() {
        let s = two_arm_boxnet2();
        let a: ActionAssignment =
            vec![Action::new(RobotId(0), ActionKind::Move, vec![Param::Box("blue".into()), Param::Corner(0, 0)])].into();
        let r = verify(&a, &s);
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.errors[0].kind, VerifyErrorKind::UnavailableAction);
        let msg = feedback_message(&r).unwrap();
        assert_eq!(msg.lines().count(), 1);
        assert!(msg.contains("robot0") && msg.contains("move(box_blue, corner_0_0)") && msg.contains("do_nothing()"));
    }

    #[test]
    fn error_kinds_and_order() {
        let s = two_arm_boxnet2();
        let actions = vec![
            Action::new(RobotId(5), ActionKind::DoNothing, vec![]),
            Action::new(RobotId(1), ActionKind::Lift, vec![Param::Box("red".into())]),
            Action::new(RobotId(0), ActionKind::Move, vec![Param::Box("red".into())]),
            Action::do_nothing(RobotId(0)),
        ];
        let r = verify_actions(&actions, &s);
        let kinds: Vec<_> = r.errors.iter().map(|e| (e.robot.0, e.kind)).collect();
        assert_eq!(
            kinds,
            vec![
                (0, VerifyErrorKind::DuplicateRobot),
                (0, VerifyErrorKind::MalformedParams),
                (1, VerifyErrorKind::UnknownAction),
                (5, VerifyErrorKind::UnknownRobot),
            ]
        );
        let text = feedback_message(&r).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text, feedback_message(&r).unwrap());
    }

    #[test]
    fn same_box_twice_is_conflict() {
        let s = two_arm_boxnet2();
        // corner_0_1 is shared by both cells
        let mut st = s.clone();
        if let World::BoxNet2(w) = &mut st.world {
            w.boxes[0].at = CornerPosition::Corner((0, 1));
        }
        let a: ActionAssignment = vec![
            Action::new(RobotId(0), ActionKind::Move, vec![Param::Box("red".into()), Param::Corner(0, 0)]),
            Action::new(RobotId(1), ActionKind::Move, vec![Param::Box("red".into()), Param::Goal("red".into())]),
        ]
        .into();
        let r = verify(&a, &st);
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.errors[0].kind, VerifyErrorKind::ConflictingActions);
    }

    #[test]
    fn ok_report_has_no_feedback() {
        let r = VerificationReport::from_errors(vec![]);
        assert_eq!(feedback_message(&r), Err(VerifierError::ReportIsOk));
    }
}
