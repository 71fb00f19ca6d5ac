//! BoxNet1: cell-confined arms push coloured boxes between neighbouring
//! cells or into the matching goal of their own cell. No collisions.

use serde::{Deserialize, Serialize};

use super::grid::{self, Cell};
use crate::env::{Action, ActionKind, Param, RobotId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellPosition {
    Cell(Cell),
    AtGoal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridBox {
    pub label: String,
    pub at: CellPosition,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridGoal {
    pub label: String,
    pub cell: Cell,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxNet1State {
    pub rows: u16,
    pub cols: u16,
    /// Robot `i` is confined to `arms[i]`.
    pub arms: Vec<Cell>,
    /// Sorted by label.
    pub boxes: Vec<GridBox>,
    pub goals: Vec<GridGoal>,
}

impl BoxNet1State {
    pub fn robot_count(&self) -> usize {
        self.arms.len()
    }

    pub fn goal_cell(&self, label: &str) -> Option<Cell> {
        self.goals.iter().find(|g| g.label == label).map(|g| g.cell)
    }

    pub(crate) fn actions_for(&self, robot: RobotId) -> Vec<Action> {
        let cell = self.arms[robot.0];
        let mut out = Vec::new();
        for b in &self.boxes {
            if b.at != CellPosition::Cell(cell) {
                continue;
            }
            let bx = Param::Box(b.label.clone());
            for (r, c) in grid::neighbors(cell, self.rows, self.cols) {
                out.push(Action::new(robot, ActionKind::Move, vec![bx.clone(), Param::Cell(r, c)]));
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

    pub(crate) fn step(&self, joint: &[Action]) -> Self {
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
                    Param::Cell(r, c) => CellPosition::Cell((*r, *c)),
                    _ => CellPosition::AtGoal,
                };
            }
        }
        next
    }

    pub fn is_goal(&self) -> bool {
        self.boxes.iter().all(|b| b.at == CellPosition::AtGoal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{apply_joint_action, available_actions, EnvState, ExecutionNoise, World};

    fn one_cell_state() -> EnvState {
        EnvState::new(World::BoxNet1(BoxNet1State {
            rows: 2,
            cols: 2,
            arms: vec![(0, 0), (0, 1), (1, 0), (1, 1)],
            boxes: vec![GridBox {
                label: "blue".into(),
                at: CellPosition::Cell((0, 0)),
            }],
            goals: vec![GridGoal {
                label: "blue".into(),
                cell: (0, 0),
            }],
        }))
    }

    #[test]
    fn arm_without_box_can_only_wait() {
        let s = one_cell_state();
        let acts = available_actions(&s, RobotId(3)).unwrap();
        assert_eq!(acts, vec![Action::do_nothing(RobotId(3))]);
    }

    #[test]
    fn arm_with_box_and_goal_in_cell() {
        let s = one_cell_state();
        let r = RobotId(0);
        let bx = Param::Box("blue".into());
        let expected = vec![
            Action::new(r, ActionKind::Move, vec![bx.clone(), Param::Cell(0, 1)]),
            Action::new(r, ActionKind::Move, vec![bx.clone(), Param::Cell(1, 0)]),
            Action::new(r, ActionKind::Move, vec![bx, Param::Goal("blue".into())]),
            Action::do_nothing(r),
        ];
        assert_eq!(available_actions(&s, r).unwrap(), expected);
    }

    #[test]
    fn moving_to_goal_finishes() {
        let s = one_cell_state();
        let acts = available_actions(&s, RobotId(0)).unwrap();
        let to_goal = acts[2].clone();
        let out = apply_joint_action(&s, &vec![to_goal].into(), &ExecutionNoise::none());
        let next = out.next_state().unwrap();
        assert!(next.world.is_goal());
        assert_eq!(next.step, 1);
    }
}
