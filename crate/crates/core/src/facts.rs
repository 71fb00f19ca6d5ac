//! Structured, serialisable description of a state as planners see it.
//!
//! This is the only path from environment internals to prompt text, so
//! hidden quantities (BoxLift weights) are dropped here.

use serde::{Deserialize, Serialize};

use crate::env::{EnvKind, EnvState, RobotId, World};
use crate::environments::boxnet1::CellPosition;
use crate::environments::boxnet2::CornerPosition;
use crate::environments::grid;
use crate::environments::warehouse::BoxStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Box,
    Goal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectFact {
    pub id: String,
    pub kind: ObjectKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotFact {
    pub id: String,
    pub location: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift_capacity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrying: Option<String>,
    pub available_actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftOutcome {
    pub box_id: String,
    pub lifted: bool,
    pub lifters: Vec<String>,
}

/// Static map dimensions needed to describe the task.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<(u16, u16)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location_count: Option<u16>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub target_locations: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFacts {
    pub env: EnvKind,
    pub step: u32,
    pub layout: Layout,
    pub objects: Vec<ObjectFact>,
    pub robots: Vec<RobotFact>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lift_feedback: Vec<LiftOutcome>,
}

fn object(id: String, kind: ObjectKind, position: Option<String>) -> ObjectFact {
    ObjectFact {
        id,
        kind,
        position,
        size: None,
        status: None,
    }
}

pub(crate) fn describe(state: &EnvState) -> StateFacts {
    let mut objects = Vec::new();
    let mut lift_feedback = Vec::new();
    let mut locations: Vec<(String, Option<f64>, Option<String>)> = Vec::new();
    let mut layout = Layout::default();

    match &state.world {
        World::BoxNet1(s) => {
            for b in &s.boxes {
                let (position, status) = match b.at {
                    CellPosition::Cell(c) => (Some(grid::cell_name(c)), "waiting"),
                    CellPosition::AtGoal => (None, "at_goal"),
                };
                let mut o = object(format!("box_{}", b.label), ObjectKind::Box, position);
                o.status = Some(status.into());
                objects.push(o);
            }
            for g in &s.goals {
                objects.push(object(format!("goal_{}", g.label), ObjectKind::Goal, Some(grid::cell_name(g.cell))));
            }
            locations.extend(s.arms.iter().map(|&c| (grid::cell_name(c), None, None)));
            layout.grid = Some((s.rows, s.cols));
        }
        World::BoxNet2(s) => {
            for b in &s.boxes {
                let (position, status) = match b.at {
                    CornerPosition::Corner(k) => (Some(grid::corner_name(k)), "waiting"),
                    CornerPosition::AtGoal => (None, "at_goal"),
                };
                let mut o = object(format!("box_{}", b.label), ObjectKind::Box, position);
                o.status = Some(status.into());
                objects.push(o);
            }
            for g in &s.goals {
                objects.push(object(format!("goal_{}", g.label), ObjectKind::Goal, Some(grid::cell_name(g.cell))));
            }
            locations.extend(s.arms.iter().map(|&c| (grid::cell_name(c), None, None)));
            layout.grid = Some((s.rows, s.cols));
        }
        World::Warehouse(s) => {
            layout.location_count = Some(s.location_count);
            layout.target_locations = s.target_adjacent.clone();
            for b in &s.boxes {
                let (position, status) = match b.status {
                    BoxStatus::Waiting => (Some(format!("slot beside loc_{}", b.slot)), "waiting"),
                    BoxStatus::Carried => (None, "carried"),
                    BoxStatus::Delivered => (Some("target".to_string()), "delivered"),
                };
                let mut o = object(format!("box_{}", b.label), ObjectKind::Box, position);
                o.status = Some(status.into());
                objects.push(o);
            }
            locations.extend(
                s.robots
                    .iter()
                    .map(|r| (r.position.name(), None, r.carrying.as_ref().map(|l| format!("box_{l}")))),
            );
        }
        World::BoxLift(s) => {
            for b in &s.boxes {
                let mut o = object(format!("box_{}", b.label), ObjectKind::Box, None);
                o.size = Some(b.size);
                o.status = Some(if b.lifted { "lifted" } else { "on_floor" }.into());
                objects.push(o);
            }
            locations.extend(s.capabilities.iter().map(|&c| ("floor".to_string(), Some(c), None)));
            lift_feedback = s
                .lift_feedback
                .iter()
                .map(|f| LiftOutcome {
                    box_id: format!("box_{}", f.box_label),
                    lifted: f.lifted,
                    lifters: f.lifters.iter().map(|r| r.name()).collect(),
                })
                .collect();
        }
    }

    let robots = locations
        .into_iter()
        .enumerate()
        .map(|(i, (location, lift_capacity, carrying))| RobotFact {
            id: RobotId(i).name(),
            location,
            lift_capacity,
            carrying,
            available_actions: state
                .world
                .actions_for(RobotId(i))
                .iter()
                .map(|a| a.call_text())
                .collect(),
        })
        .collect();

    StateFacts {
        env: state.kind(),
        step: state.step,
        layout,
        objects,
        robots,
        lift_feedback,
    }
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x:.2}")
    }
}

impl ObjectFact {
    fn line(&self) -> String {
        let mut parts = vec![self.id.clone()];
        if let Some(p) = &self.position {
            parts.push(format!("at {p}"));
        }
        if let Some(s) = self.size {
            parts.push(format!("size {}", fmt_num(s)));
        }
        if let Some(s) = &self.status {
            parts.push(s.replace('_', " "));
        }
        parts.join(", ")
    }
}

impl StateFacts {
    pub fn robot(&self, robot: RobotId) -> Option<&RobotFact> {
        self.robots.get(robot.0)
    }

    /// One line per object.
    pub fn render_objects(&self) -> String {
        self.objects
            .iter()
            .map(ObjectFact::line)
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn render_robot(&self, r: &RobotFact) -> String {
        let mut head = format!("{} at {}", r.id, r.location);
        if let Some(c) = r.lift_capacity {
            head.push_str(&format!(", lift capacity {}", fmt_num(c)));
        }
        if let Some(c) = &r.carrying {
            head.push_str(&format!(", carrying {c}"));
        }
        format!("{head}; available actions: {}", r.available_actions.join(", "))
    }

    pub fn render_robots(&self) -> String {
        self.robots
            .iter()
            .map(|r| self.render_robot(r))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn render_lift_feedback(&self) -> Option<String> {
        if self.lift_feedback.is_empty() {
            return None;
        }
        let parts: Vec<String> = self
            .lift_feedback
            .iter()
            .map(|f| {
                let verdict = if f.lifted { "lifted" } else { "NOT lifted" };
                format!("{} {verdict} by {}", f.box_id, f.lifters.join(", "))
            })
            .collect();
        Some(parts.join("; "))
    }

    /// Single-paragraph summary used inside step history entries.
    pub fn render_compact(&self) -> String {
        let objects: Vec<String> = self
            .objects
            .iter()
            .filter(|o| o.kind == ObjectKind::Box)
            .map(ObjectFact::line)
            .collect();
        let robots: Vec<String> = self
            .robots
            .iter()
            .map(|r| match &r.carrying {
                Some(c) => format!("{} at {} carrying {c}", r.id, r.location),
                None => format!("{} at {}", r.id, r.location),
            })
            .collect();
        format!("{} | {}", objects.join("; "), robots.join("; "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::state_facts;
    use crate::environments::{generate_scenario, ScenarioSpec};
    use crate::util::canonical_json;

    #[test]
    fn facts_are_pure() {
        for env in EnvKind::ALL {
            let s = generate_scenario(&ScenarioSpec::new(env, 4, 8)).unwrap();
            assert_eq!(canonical_json(&state_facts(&s)), canonical_json(&state_facts(&s)));
        }
    }

    #[test]
    fn boxlift_facts_hide_weight() {
        let s = generate_scenario(&ScenarioSpec::new(EnvKind::BoxLift, 4, 8)).unwrap();
        let f = state_facts(&s);
        let json = canonical_json(&f);
        assert!(!json.contains("weight"));
        assert!(f.objects.iter().all(|o| o.size.is_some()));
        assert!(f.robots.iter().all(|r| r.lift_capacity.is_some()));
    }

    #[test]
    fn one_entry_per_robot() {
        let s = generate_scenario(&ScenarioSpec::new(EnvKind::BoxNet1, 4, 1)).unwrap();
        let f = state_facts(&s);
        assert_eq!(f.robots.len(), 4);
        assert!(f.robots.iter().all(|r| r.available_actions.last().unwrap() == "do_nothing()"));
    }
}
