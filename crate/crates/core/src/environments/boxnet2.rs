//! BoxNet2: boxes travel between cells only via lattice corners; a corner
//! holds at most one box, so two boxes landing on one corner is a collision.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::grid::{self, Cell};
use crate::env::{Action, ActionKind, Param, RobotId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CornerPosition {
    Corner(Cell),
    AtGoal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CornerBox {
    pub label: String,
    pub at: CornerPosition,
}

pub use super::boxnet1::GridGoal;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxNet2State {
    pub rows: u16,
    pub cols: u16,
    pub arms: Vec<Cell>,
    pub boxes: Vec<CornerBox>,
    pub goals: Vec<GridGoal>,
}

impl BoxNet2State {
    pub fn robot_count(&self) -> usize {
        self.arms.len()
    }

    pub fn goal_cell(&self, label: &str) -> Option<Cell> {
        self.goals.iter().find(|g| g.label == label).map(|g| g.cell)
    }

    pub(crate) fn actions_for(&self, robot: RobotId) -> Vec<Action> {
        let cell = self.arms[robot.0];
        let corners = grid::cell_corners(cell);
        let mut out = Vec::new();
        for b in &self.boxes {
            let CornerPosition::Corner(at) = b.at else {
                continue;
            };
            if !corners.contains(&at) {
                continue;
            }
            let bx = Param::Box(b.label.clone());
            for &(r, c) in corners.iter().filter(|&&k| k != at) {
                out.push(Action::new(robot, ActionKind::Move, vec![bx.clone(), Param::Corner(r, c)]));
            }
            if self.goal_cell(&b.label) == Some(cell) {
                out.push(Action::new(
                    robot,
                    ActionKind::Move,
                    vec![bx.clone(), Param::Goal(b.label.clone())],
                ));
            }
        }
        out
    }

    /// Corner occupancy after the joint move, keyed by corner.
    pub fn occupancy(&self) -> BTreeMap<Cell, Vec<&str>> {
        let mut occ: BTreeMap<Cell, Vec<&str>> = BTreeMap::new();
        for b in &self.boxes {
            if let CornerPosition::Corner(k) = b.at {
                occ.entry(k).or_default().push(&b.label);
            }
        }
        occ
    }

    pub(crate) fn step(&self, joint: &[Action]) -> Result<Self, String> {
        let mut next = self.clone();
        for action in joint {
            if action.kind != ActionKind::Move {
                continue;
            }
            let (Some(Param::Box(label)), Some(dest)) = (action.params.first(), action.params.get(1)) else {
                continue;
            };
            if let Some(b) = next.boxes.iter_mut().find(|b| &b.label == label) {
                b.at = match dest {
                    Param::Corner(r, c) => CornerPosition::Corner((*r, *c)),
                    _ => CornerPosition::AtGoal,
                };
            }
        }
        let clashes: Vec<String> = next
            .occupancy()
            .into_iter()
            .filter(|(_, boxes)| boxes.len() > 1)
            .map(|(corner, boxes)| {
                let names: Vec<String> = boxes.iter().map(|b| format!("box_{b}")).collect();
                format!("{} holds {}", grid::corner_name(corner), names.join(" and "))
            })
            .collect();
        if clashes.is_empty() {
            Ok(next)
        } else {
            Err(clashes.join("; "))
        }
    }

    pub fn is_goal(&self) -> bool {
        self.boxes.iter().all(|b| b.at == CornerPosition::AtGoal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{apply_joint_action, available_actions, EnvState, ExecutionNoise, World};

    /// 1×2 grid; red sits on the shared corner (0,1), blue on (1,0).
    fn shared_corner_state() -> EnvState {
        EnvState::new(World::BoxNet2(BoxNet2State {
            rows: 1,
            cols: 2,
            arms: vec![(0, 0), (0, 1)],
            boxes: vec![
                CornerBox {
                    label: "blue".into(),
                    at: CornerPosition::Corner((1, 0)),
                },
                CornerBox {
                    label: "red".into(),
                    at: CornerPosition::Corner((0, 1)),
                },
            ],
            goals: vec![
                GridGoal {
                    label: "blue".into(),
                    cell: (0, 1),
                },
                GridGoal {
                    label: "red".into(),
                    cell: (0, 1),
                },
            ],
        }))
    }

    #[test]
    fn shared_corner_box_reachable_from_both_arms() {
        let s = shared_corner_state();
        let red = Param::Box("red".into());
        let left: Vec<Action> = available_actions(&s, RobotId(0))
            .unwrap()
            .into_iter()
            .filter(|a| a.params.first() == Some(&red))
            .collect();
        let right: Vec<Action> = available_actions(&s, RobotId(1))
            .unwrap()
            .into_iter()
            .filter(|a| a.params.first() == Some(&red))
            .collect();
        // left arm: other corners of cell (0,0); no red goal there
        assert_eq!(
            left.iter().map(|a| a.params[1].clone()).collect::<Vec<_>>(),
            vec![Param::Corner(0, 0), Param::Corner(1, 0), Param::Corner(1, 1)]
        );
        // right arm: other corners of cell (0,1) plus the red goal
        assert_eq!(
            right.iter().map(|a| a.params[1].clone()).collect::<Vec<_>>(),
            vec![
                Param::Corner(0, 2),
                Param::Corner(1, 1),
                Param::Corner(1, 2),
                Param::Goal("red".into())
            ]
        );
    }

    #[test]
    fn two_boxes_on_one_corner_collide() {
        let s = shared_corner_state();
        let r0 = RobotId(0);
        let r1 = RobotId(1);
        let a: crate::env::ActionAssignment = vec![
            Action::new(r0, ActionKind::Move, vec![Param::Box("blue".into()), Param::Corner(1, 1)]),
            Action::new(r1, ActionKind::Move, vec![Param::Box("red".into()), Param::Corner(1, 1)]),
        ]
        .into();
        let out = apply_joint_action(&s, &a, &ExecutionNoise::none());
        assert!(out.is_collision(), "{out:?}");
    }

    #[test]
    fn vacated_corner_can_be_refilled_same_step() {
        let s = shared_corner_state();
        let a: crate::env::ActionAssignment = vec![
            Action::new(RobotId(0), ActionKind::Move, vec![Param::Box("blue".into()), Param::Corner(0, 0)]),
            Action::new(RobotId(1), ActionKind::Move, vec![Param::Box("red".into()), Param::Corner(1, 2)]),
        ]
        .into();
        assert!(apply_joint_action(&s, &a, &ExecutionNoise::none()).next_state().is_some());
    }

    #[test]
    fn same_box_by_two_arms_is_invalid() {
        let s = shared_corner_state();
        let a: crate::env::ActionAssignment = vec![
            Action::new(RobotId(0), ActionKind::Move, vec![Param::Box("red".into()), Param::Corner(0, 0)]),
            Action::new(RobotId(1), ActionKind::Move, vec![Param::Box("red".into()), Param::Corner(0, 2)]),
        ]
        .into();
        assert!(apply_joint_action(&s, &a, &ExecutionNoise::none()).is_invalid());
    }
}
