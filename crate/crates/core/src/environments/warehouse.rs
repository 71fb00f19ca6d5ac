//! Warehouse: mobile manipulators on a single row of permissible locations
//! fetch boxes from side slots and drop them in a target region attached to
//! a subset of locations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::env::{Action, ActionKind, Param, RobotId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobotPosition {
    Location(u16),
    Target,
}

impl RobotPosition {
    pub fn name(self) -> String {
        match self {
            RobotPosition::Location(i) => format!("loc_{i}"),
            RobotPosition::Target => "target".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxStatus {
    Waiting,
    Carried,
    Delivered,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WarehouseBox {
    pub label: String,
    /// Location the box slot is attached to.
    pub slot: u16,
    pub status: BoxStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WarehouseRobot {
    pub position: RobotPosition,
    pub carrying: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WarehouseState {
    pub location_count: u16,
    pub target_adjacent: Vec<u16>,
    pub boxes: Vec<WarehouseBox>,
    pub robots: Vec<WarehouseRobot>,
    /// Treat two robots exchanging adjacent locations as a collision.
    pub swap_is_collision: bool,
}

impl WarehouseState {
    pub fn robot_count(&self) -> usize {
        self.robots.len()
    }

    pub(crate) fn actions_for(&self, robot: RobotId) -> Vec<Action> {
        let me = &self.robots[robot.0];
        let mut out = Vec::new();
        match me.position {
            RobotPosition::Location(i) => {
                if i > 0 {
                    out.push(Action::new(robot, ActionKind::MoveLeft, vec![]));
                }
                if i + 1 < self.location_count {
                    out.push(Action::new(robot, ActionKind::MoveRight, vec![]));
                }
                match &me.carrying {
                    None => {
                        for b in &self.boxes {
                            if b.slot == i && b.status == BoxStatus::Waiting {
                                out.push(Action::new(
                                    robot,
                                    ActionKind::Pick,
                                    vec![Param::Box(b.label.clone())],
                                ));
                            }
                        }
                    }
                    Some(label) => {
                        if self.target_adjacent.contains(&i) {
                            out.push(Action::new(robot, ActionKind::Place, vec![Param::Box(label.clone())]));
                        }
                    }
                }
            }
            RobotPosition::Target => {
                for &j in &self.target_adjacent {
                    out.push(Action::new(robot, ActionKind::LeaveTarget, vec![Param::Location(j)]));
                }
            }
        }
        out
    }

    pub(crate) fn step(&self, joint: &[Action]) -> Result<Self, String> {
        let mut next = self.clone();
        for action in joint {
            let idx = action.robot.0;
            let before = self.robots[idx].position;
            let robot = &mut next.robots[idx];
            match (action.kind, before) {
                (ActionKind::MoveLeft, RobotPosition::Location(i)) => {
                    robot.position = RobotPosition::Location(i - 1)
                }
                (ActionKind::MoveRight, RobotPosition::Location(i)) => {
                    robot.position = RobotPosition::Location(i + 1)
                }
                (ActionKind::Pick, _) => {
                    if let Some(label) = action.params.first().and_then(Param::as_box) {
                        robot.carrying = Some(label.to_string());
                        if let Some(b) = next.boxes.iter_mut().find(|b| b.label == label) {
                            b.status = BoxStatus::Carried;
                        }
                    }
                }
                (ActionKind::Place, _) => {
                    robot.position = RobotPosition::Target;
                    if let Some(label) = robot.carrying.take() {
                        if let Some(b) = next.boxes.iter_mut().find(|b| b.label == label) {
                            b.status = BoxStatus::Delivered;
                        }
                    }
                }
                (ActionKind::LeaveTarget, _) => {
                    if let Some(Param::Location(j)) = action.params.first() {
                        robot.position = RobotPosition::Location(*j);
                    }
                }
                _ => {}
            }
        }

        let mut problems = Vec::new();
        let mut at: BTreeMap<u16, Vec<usize>> = BTreeMap::new();
        for (i, r) in next.robots.iter().enumerate() {
            if let RobotPosition::Location(l) = r.position {
                at.entry(l).or_default().push(i);
            }
        }
        for (loc, robots) in &at {
            if robots.len() > 1 {
                let names: Vec<String> = robots.iter().map(|&i| RobotId(i).name()).collect();
                problems.push(format!("{} share loc_{loc}", names.join(" and ")));
            }
        }
        if self.swap_is_collision {
            for a in 0..self.robots.len() {
                for b in (a + 1)..self.robots.len() {
                    let (RobotPosition::Location(a0), RobotPosition::Location(a1)) =
                        (self.robots[a].position, next.robots[a].position)
                    else {
                        continue;
                    };
                    let (RobotPosition::Location(b0), RobotPosition::Location(b1)) =
                        (self.robots[b].position, next.robots[b].position)
                    else {
                        continue;
                    };
                    if a0 != a1 && a0 == b1 && a1 == b0 {
                        problems.push(format!(
                            "{} and {} swap loc_{a0} and loc_{b0}",
                            RobotId(a),
                            RobotId(b)
                        ));
                    }
                }
            }
        }
        if problems.is_empty() {
            Ok(next)
        } else {
            Err(problems.join("; "))
        }
    }

    pub fn is_goal(&self) -> bool {
        self.boxes.iter().all(|b| b.status == BoxStatus::Delivered)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{apply_joint_action, available_actions, ActionAssignment, EnvState, ExecutionNoise, World};

    fn state(robots: &[(RobotPosition, Option<&str>)], boxes: &[(&str, u16, BoxStatus)]) -> EnvState {
        EnvState::new(World::Warehouse(WarehouseState {
            location_count: 4,
            target_adjacent: vec![0],
            boxes: boxes
                .iter()
                .map(|&(l, s, st)| WarehouseBox {
                    label: l.into(),
                    slot: s,
                    status: st,
                })
                .collect(),
            robots: robots
                .iter()
                .map(|&(p, c)| WarehouseRobot {
                    position: p,
                    carrying: c.map(str::to_string),
                })
                .collect(),
            swap_is_collision: true,
        }))
    }

    #[test]
    fn action_menu_by_position() {
        use RobotPosition::*;
        let s = state(
            &[(Location(0), Some("1")), (Location(2), None), (Target, None)],
            &[("0", 2, BoxStatus::Waiting), ("1", 1, BoxStatus::Carried)],
        );
        let kinds = |r| {
            available_actions(&s, RobotId(r))
                .unwrap()
                .into_iter()
                .map(|a| a.call_text())
                .collect::<Vec<_>>()
        };
        assert_eq!(kinds(0), vec!["move_right()", "place(box_1)", "do_nothing()"]);
        assert_eq!(kinds(1), vec!["move_left()", "move_right()", "pick(box_0)", "do_nothing()"]);
        assert_eq!(kinds(2), vec!["leave_target(loc_0)", "do_nothing()"]);
    }

    #[test]
    fn co_location_and_swap_collide() {
        use RobotPosition::*;
        let s = state(&[(Location(1), None), (Location(2), None)], &[("0", 3, BoxStatus::Waiting)]);
        let swap: ActionAssignment = vec![
            Action::new(RobotId(0), ActionKind::MoveRight, vec![]),
            Action::new(RobotId(1), ActionKind::MoveLeft, vec![]),
        ]
        .into();
        assert!(apply_joint_action(&s, &swap, &ExecutionNoise::none()).is_collision());
        let bump: ActionAssignment = vec![Action::new(RobotId(0), ActionKind::MoveRight, vec![])].into();
        assert!(apply_joint_action(&s, &bump, &ExecutionNoise::none()).is_collision());
        let follow: ActionAssignment = vec![
            Action::new(RobotId(0), ActionKind::MoveLeft, vec![]),
            Action::new(RobotId(1), ActionKind::MoveLeft, vec![]),
        ]
        .into();
        assert!(apply_joint_action(&s, &follow, &ExecutionNoise::none()).next_state().is_some());
    }

    #[test]
    fn swap_allowed_when_disabled() {
        use RobotPosition::*;
        let mut s = state(&[(Location(1), None), (Location(2), None)], &[("0", 3, BoxStatus::Waiting)]);
        if let World::Warehouse(w) = &mut s.world {
            w.swap_is_collision = false;
        }
        let swap: ActionAssignment = vec![
            Action::new(RobotId(0), ActionKind::MoveRight, vec![]),
            Action::new(RobotId(1), ActionKind::MoveLeft, vec![]),
        ]
        .into();
        assert!(apply_joint_action(&s, &swap, &ExecutionNoise::none()).next_state().is_some());
    }

    #[test]
    fn pick_then_place_delivers() {
        use RobotPosition::*;
        let s = state(&[(Location(0), None)], &[("0", 0, BoxStatus::Waiting)]);
        let pick: ActionAssignment =
            vec![Action::new(RobotId(0), ActionKind::Pick, vec![Param::Box("0".into())])].into();
        let s1 = apply_joint_action(&s, &pick, &ExecutionNoise::none()).next_state().unwrap().clone();
        let place: ActionAssignment =
            vec![Action::new(RobotId(0), ActionKind::Place, vec![Param::Box("0".into())])].into();
        let s2 = apply_joint_action(&s1, &place, &ExecutionNoise::none()).next_state().unwrap().clone();
        assert!(s2.world.is_goal());
        let World::Warehouse(w) = &s2.world else { unreachable!() };
        assert_eq!(w.robots[0].position, Target);
        assert_eq!(w.robots[0].carrying, None);
    }

    #[test]
    fn target_region_is_unbounded() {
        use RobotPosition::*;
        let s = state(
            &[(Location(0), Some("0")), (Target, None)],
            &[("0", 2, BoxStatus::Carried)],
        );
        let a: ActionAssignment =
            vec![Action::new(RobotId(0), ActionKind::Place, vec![Param::Box("0".into())])].into();
        assert!(apply_joint_action(&s, &a, &ExecutionNoise::none()).next_state().is_some());
    }
}
