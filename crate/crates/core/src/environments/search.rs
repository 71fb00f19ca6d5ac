//! Exhaustive breadth-first search over joint actions. Used as the optimal
//! oracle for tests and for the oracle backend.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::env::{Action, ActionAssignment, ActionKind, EnvState, Param, Transition, World};
use crate::environments::boxnet1::CellPosition;
use crate::environments::boxnet2::CornerPosition;
use crate::environments::warehouse::{BoxStatus, RobotPosition};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("joint branching {branching} exceeds limit {limit}")]
    BranchingExceeded { branching: u64, limit: u64 },
    #[error("search visited more than {limit} states")]
    StateLimit { limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    /// Upper bound on the product of per-robot action counts in any state.
    pub max_joint_branching: u64,
    pub max_states: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self {
            max_joint_branching: 2_000_000,
            max_states: 2_000_000,
        }
    }
}

/// One optimal move: the full joint action and the world it produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanStep {
    pub assignment: ActionAssignment,
    pub next: World,
}

/// Where an action sends something that can only be in one place.
fn destination(world: &World, action: &Action) -> Option<(u8, u16, u16)> {
    match (world, action.kind) {
        (World::BoxNet2(_), ActionKind::Move) => match action.params.get(1) {
            Some(Param::Corner(r, c)) => Some((0, *r, *c)),
            _ => None,
        },
        (World::Warehouse(w), kind) => {
            let here = w.robots[action.robot.0].position;
            match (kind, here) {
                (ActionKind::MoveLeft, RobotPosition::Location(i)) => Some((1, i - 1, 0)),
                (ActionKind::MoveRight, RobotPosition::Location(i)) => Some((1, i + 1, 0)),
                (ActionKind::LeaveTarget, _) => match action.params.first() {
                    Some(Param::Location(j)) => Some((1, *j, 0)),
                    _ => None,
                },
                _ => None,
            }
        }
        _ => None,
    }
}

/// Distinct successor worlds of `world`, each with the first joint action
/// (in enumeration order) that reaches it. Collisions and conflicting joint
/// actions are dropped.
pub fn joint_successors(world: &World, limits: &SearchLimits) -> Result<Vec<PlanStep>, SearchError> {
    let menus: Vec<Vec<Action>> = (0..world.robot_count())
        .map(|r| world.actions_for(crate::env::RobotId(r)))
        .collect();
    let branching = menus
        .iter()
        .fold(1u64, |acc, m| acc.saturating_mul(m.len() as u64));
    if branching > limits.max_joint_branching {
        return Err(SearchError::BranchingExceeded {
            branching,
            limit: limits.max_joint_branching,
        });
    }

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut chosen: Vec<&Action> = Vec::with_capacity(menus.len());
    let mut claimed: Vec<&str> = Vec::new();
    let mut dests: Vec<(u8, u16, u16)> = Vec::new();
    enumerate(world, &menus, &mut chosen, &mut claimed, &mut dests, &mut seen, &mut out);
    Ok(out)
}

fn enumerate<'a>(
    world: &World,
    menus: &'a [Vec<Action>],
    chosen: &mut Vec<&'a Action>,
    claimed: &mut Vec<&'a str>,
    dests: &mut Vec<(u8, u16, u16)>,
    seen: &mut HashSet<World>,
    out: &mut Vec<PlanStep>,
) {
    let depth = chosen.len();
    if depth == menus.len() {
        let joint: Vec<Action> = chosen.iter().map(|a| (*a).clone()).collect();
        if let Transition::Next(next) = world.transition(&joint) {
            let key = next.search_key();
            if seen.insert(key.clone()) {
                out.push(PlanStep {
                    assignment: joint.into(),
                    next: key,
                });
            }
        }
        return;
    }
    for action in &menus[depth] {
        let bx = action.claimed_box();
        if let Some(b) = bx {
            if claimed.contains(&b) {
                continue;
            }
        }
        let dest = destination(world, action);
        if let Some(d) = dest {
            if dests.contains(&d) {
                continue;
            }
        }
        chosen.push(action);
        if let Some(b) = bx {
            claimed.push(b);
        }
        if let Some(d) = dest {
            dests.push(d);
        }
        enumerate(world, menus, chosen, claimed, dests, seen, out);
        chosen.pop();
        if bx.is_some() {
            claimed.pop();
        }
        if dest.is_some() {
            dests.pop();
        }
    }
}

/// Shortest sequence of joint actions reaching the goal, or `None` when no
/// plan of at most `cap` steps exists.
pub fn bfs_optimal_plan(
    state: &EnvState,
    cap: u32,
    limits: &SearchLimits,
) -> Result<Option<Vec<PlanStep>>, SearchError> {
    let start = state.world.search_key();
    if start.is_goal() {
        return Ok(Some(Vec::new()));
    }
    // parent index and the step that led here
    let mut nodes: Vec<(usize, Option<PlanStep>)> = vec![(usize::MAX, None)];
    let mut worlds: Vec<World> = vec![start.clone()];
    let mut index: HashMap<World, usize> = HashMap::from([(start, 0)]);
    let mut frontier = VecDeque::from([0usize]);

    for _depth in 0..cap {
        let mut next_frontier = VecDeque::new();
        while let Some(id) = frontier.pop_front() {
            let world = worlds[id].clone();
            for step in joint_successors(&world, limits)? {
                if index.contains_key(&step.next) {
                    continue;
                }
                let child = worlds.len();
                if child >= limits.max_states {
                    return Err(SearchError::StateLimit {
                        limit: limits.max_states,
                    });
                }
                let goal = step.next.is_goal();
                index.insert(step.next.clone(), child);
                worlds.push(step.next.clone());
                nodes.push((id, Some(step)));
                if goal {
                    return Ok(Some(unwind(&nodes, child)));
                }
                next_frontier.push_back(child);
            }
        }
        if next_frontier.is_empty() {
            return Ok(None);
        }
        frontier = next_frontier;
    }
    Ok(None)
}

fn unwind(nodes: &[(usize, Option<PlanStep>)], mut at: usize) -> Vec<PlanStep> {
    let mut plan = Vec::new();
    while let (parent, Some(step)) = &nodes[at] {
        plan.push(step.clone());
        at = *parent;
    }
    plan.reverse();
    plan
}

/// Consistent lower bound on the steps left, or `None` when the goal is
/// unreachable from `world`.
pub fn lower_bound(world: &World) -> Option<u32> {
    let dist = |a: u16, b: u16| u32::from(a.abs_diff(b));
    match world {
        World::BoxNet1(s) => Some(
            s.boxes
                .iter()
                .filter_map(|b| match b.at {
                    CellPosition::AtGoal => None,
                    CellPosition::Cell((r, c)) => {
                        let (gr, gc) = s.goal_cell(&b.label)?;
                        Some(dist(r, gr) + dist(c, gc) + 1)
                    }
                })
                .max()
                .unwrap_or(0),
        ),
        World::BoxNet2(s) => Some(
            s.boxes
                .iter()
                .filter_map(|b| match b.at {
                    CornerPosition::AtGoal => None,
                    CornerPosition::Corner((r, c)) => {
                        let (gr, gc) = s.goal_cell(&b.label)?;
                        let dr = if r < gr { gr - r } else { r.saturating_sub(gr + 1) };
                        let dc = if c < gc { gc - c } else { c.saturating_sub(gc + 1) };
                        Some(u32::from(dr.max(dc)) + 1)
                    }
                })
                .max()
                .unwrap_or(0),
        ),
        World::Warehouse(s) => {
            let to_target = |i: u16| s.target_adjacent.iter().map(|&t| dist(i, t)).min();
            let reach = |i: u16| {
                s.robots
                    .iter()
                    .filter_map(|r| match r.position {
                        RobotPosition::Location(j) => Some(dist(i, j)),
                        RobotPosition::Target => to_target(i).map(|d| d + 1),
                    })
                    .min()
            };
            let mut best = 0;
            let mut open = 0u32;
            for b in &s.boxes {
                let need = match b.status {
                    BoxStatus::Delivered => continue,
                    BoxStatus::Waiting => reach(b.slot)? + 1 + to_target(b.slot)? + 1,
                    BoxStatus::Carried => {
                        let carrier = s.robots.iter().find(|r| r.carrying.as_deref() == Some(b.label.as_str()))?;
                        match carrier.position {
                            RobotPosition::Location(j) => to_target(j)? + 1,
                            RobotPosition::Target => return None,
                        }
                    }
                };
                best = best.max(need);
                open += 1;
            }
            // one place per target-adjacent location per step
            let lanes = s.target_adjacent.len().max(1) as u32;
            Some(best.max(open.div_ceil(lanes)))
        }
        World::BoxLift(s) => {
            let mut caps = s.capabilities.clone();
            caps.sort_by(|a, b| b.total_cmp(a));
            let mut team_sizes = 0u32;
            for b in s.boxes.iter().filter(|b| !b.lifted) {
                let mut total = 0.0;
                let mut k = 0;
                while k < caps.len() && !s.rule.lifts(total, b.weight) {
                    total += caps[k];
                    k += 1;
                }
                if !s.rule.lifts(total, b.weight) {
                    return None;
                }
                team_sizes += k as u32;
            }
            Some(team_sizes.div_ceil(caps.len().max(1) as u32))
        }
    }
}

/// Optimal plan by best-first search ordered by steps taken plus
/// [`lower_bound`]. Same result length as [`bfs_optimal_plan`], far fewer
/// expansions.
pub fn optimal_plan(state: &EnvState, cap: u32, limits: &SearchLimits) -> Result<Option<Vec<PlanStep>>, SearchError> {
    let start = state.world.search_key();
    let Some(h0) = lower_bound(&start) else {
        return Ok(None);
    };
    if h0 > cap {
        return Ok(None);
    }
    let mut nodes: Vec<(usize, Option<PlanStep>)> = vec![(usize::MAX, None)];
    let mut worlds: Vec<World> = vec![start.clone()];
    let mut best_g: HashMap<World, u32> = HashMap::from([(start, 0)]);
    // (f, deeper first, insertion order)
    let mut open = BinaryHeap::from([Reverse((h0, Reverse(0u32), 0usize))]);

    while let Some(Reverse((_, Reverse(g), id))) = open.pop() {
        let world = worlds[id].clone();
        if best_g.get(&world).is_some_and(|&b| b < g) {
            continue;
        }
        if world.is_goal() {
            return Ok(Some(unwind(&nodes, id)));
        }
        if g >= cap {
            continue;
        }
        for step in joint_successors(&world, limits)? {
            let g2 = g + 1;
            if best_g.get(&step.next).is_some_and(|&b| b <= g2) {
                continue;
            }
            let Some(h) = lower_bound(&step.next) else {
                continue;
            };
            if g2 + h > cap {
                continue;
            }
            let child = worlds.len();
            if child >= limits.max_states {
                return Err(SearchError::StateLimit {
                    limit: limits.max_states,
                });
            }
            best_g.insert(step.next.clone(), g2);
            worlds.push(step.next.clone());
            nodes.push((id, Some(step)));
            open.push(Reverse((g2 + h, Reverse(g2), child)));
        }
    }
    Ok(None)
}

/// Minimal number of planning iterations to reach the goal, if ≤ `cap`.
pub fn bfs_optimal_steps(state: &EnvState, cap: u32) -> Result<Option<u32>, SearchError> {
    bfs_optimal_steps_with(state, cap, &SearchLimits::default())
}

pub fn bfs_optimal_steps_with(
    state: &EnvState,
    cap: u32,
    limits: &SearchLimits,
) -> Result<Option<u32>, SearchError> {
    Ok(optimal_plan(state, cap, limits)?.map(|p| p.len() as u32))
}
