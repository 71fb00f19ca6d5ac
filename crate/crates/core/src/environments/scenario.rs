use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::boxlift::{BoxLiftState, LiftBox, LiftRule};
use super::boxnet1::{BoxNet1State, CellPosition, GridBox, GridGoal};
use super::boxnet2::{BoxNet2State, CornerBox, CornerPosition};
use super::grid::{self, Cell};
use super::warehouse::{BoxStatus, RobotPosition, WarehouseBox, WarehouseRobot, WarehouseState};
use crate::env::{EnvKind, EnvState, World};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("robot_count must be positive")]
    NoRobots,
    #[error("{robots} arms do not fit in a {rows}x{cols} grid")]
    TooManyArms { robots: usize, rows: u16, cols: u16 },
    #[error("{boxes} boxes do not fit into {capacity} free positions")]
    TooManyBoxes { boxes: usize, capacity: usize },
    #[error("{robots} robots do not fit on {locations} locations")]
    TooManyRobots { robots: usize, locations: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no solvable instance found after {0} draws")]
    Unsolvable(usize),
    #[error("cannot read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario file: {0}")]
    Parse(String),
}

fn default_alpha() -> f64 {
    1.0
}

fn default_beta() -> f64 {
    0.25
}

fn default_size_range() -> (u32, u32) {
    (1, 5)
}

fn default_capability_range() -> (u32, u32) {
    (1, 4)
}

fn default_true() -> bool {
    true
}

/// Everything needed to regenerate one initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub env: EnvKind,
    pub robot_count: usize,
    pub seed: u64,
    /// BoxNet grid as (rows, cols); defaults to the most square factorisation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<(u16, u16)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_count: Option<usize>,
    /// Warehouse row length; defaults to twice the robot count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location_count: Option<u16>,
    /// BoxLift weight = size · alpha · (1 + u), u ~ U[-beta, beta].
    #[serde(default = "default_alpha")]
    pub lift_alpha: f64,
    #[serde(default = "default_beta")]
    pub lift_beta: f64,
    #[serde(default = "default_size_range")]
    pub lift_size_range: (u32, u32),
    #[serde(default = "default_capability_range")]
    pub lift_capability_range: (u32, u32),
    #[serde(default)]
    pub lift_rule: LiftRule,
    #[serde(default = "default_true")]
    pub warehouse_swap_collision: bool,
}

impl ScenarioSpec {
    pub fn new(env: EnvKind, robot_count: usize, seed: u64) -> Self {
        Self {
            env,
            robot_count,
            seed,
            grid: None,
            box_count: None,
            location_count: None,
            lift_alpha: default_alpha(),
            lift_beta: default_beta(),
            lift_size_range: default_size_range(),
            lift_capability_range: default_capability_range(),
            lift_rule: LiftRule::Strict,
            warehouse_swap_collision: true,
        }
    }

    pub fn with_boxes(mut self, boxes: usize) -> Self {
        self.box_count = Some(boxes);
        self
    }

    pub fn with_grid(mut self, rows: u16, cols: u16) -> Self {
        self.grid = Some((rows, cols));
        self
    }

    pub fn with_locations(mut self, locations: u16) -> Self {
        self.location_count = Some(locations);
        self
    }

    pub fn default_box_count(&self) -> usize {
        match self.env {
            EnvKind::BoxLift => 2 * self.robot_count,
            _ => self.robot_count,
        }
    }

    /// Reads a spec from `.json` or `.toml`.
    pub fn from_file(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().and_then(|e| e.to_str()) == Some("toml") {
            toml::from_str(&text).map_err(|e| ScenarioError::Parse(e.to_string()))
        } else {
            serde_json::from_str(&text).map_err(|e| ScenarioError::Parse(e.to_string()))
        }
    }
}

const MAX_DRAWS: usize = 1000;

/// Builds the initial state for `spec`. Deterministic in the spec.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<EnvState, ScenarioError> {
    if spec.robot_count == 0 {
        return Err(ScenarioError::NoRobots);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..MAX_DRAWS {
        let world = match spec.env {
            EnvKind::BoxNet1 => World::BoxNet1(gen_boxnet1(spec, &mut rng)?),
            EnvKind::BoxNet2 => World::BoxNet2(gen_boxnet2(spec, &mut rng)?),
            EnvKind::Warehouse => World::Warehouse(gen_warehouse(spec, &mut rng)?),
            EnvKind::BoxLift => World::BoxLift(gen_boxlift(spec, &mut rng)?),
        };
        if relaxed_solvable(&world) {
            return Ok(EnvState::new(world));
        }
    }
    Err(ScenarioError::Unsolvable(MAX_DRAWS))
}

fn grid_dims(spec: &ScenarioSpec) -> Result<(u16, u16), ScenarioError> {
    let (rows, cols) = spec.grid.unwrap_or_else(|| grid::default_dims(spec.robot_count));
    if rows == 0 || cols == 0 {
        return Err(ScenarioError::InvalidParameter("grid dimensions must be positive".into()));
    }
    if usize::from(rows) * usize::from(cols) < spec.robot_count {
        return Err(ScenarioError::TooManyArms {
            robots: spec.robot_count,
            rows,
            cols,
        });
    }
    Ok((rows, cols))
}

fn random_goals(arms: &[Cell], labels: &[String], rng: &mut ChaCha8Rng) -> Vec<GridGoal> {
    labels
        .iter()
        .map(|label| GridGoal {
            label: label.clone(),
            cell: *arms.choose(rng).expect("at least one arm"),
        })
        .collect()
}

fn sorted_labels(count: usize) -> Vec<String> {
    let mut labels: Vec<String> = (0..count).map(grid::color_label).collect();
    labels.sort();
    labels
}

fn gen_boxnet1(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Result<BoxNet1State, ScenarioError> {
    let (rows, cols) = grid_dims(spec)?;
    let arms = grid::row_major_cells(rows, cols, spec.robot_count);
    let labels = sorted_labels(spec.box_count.unwrap_or_else(|| spec.default_box_count()));
    let boxes = labels
        .iter()
        .map(|label| GridBox {
            label: label.clone(),
            at: CellPosition::Cell(*arms.choose(rng).expect("at least one arm")),
        })
        .collect();
    let goals = random_goals(&arms, &labels, rng);
    Ok(BoxNet1State {
        rows,
        cols,
        arms,
        boxes,
        goals,
    })
}

fn armed_corners(arms: &[Cell]) -> Vec<Cell> {
    let set: BTreeSet<Cell> = arms.iter().flat_map(|&c| grid::cell_corners(c)).collect();
    set.into_iter().collect()
}

fn gen_boxnet2(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Result<BoxNet2State, ScenarioError> {
    let (rows, cols) = grid_dims(spec)?;
    let arms = grid::row_major_cells(rows, cols, spec.robot_count);
    let labels = sorted_labels(spec.box_count.unwrap_or_else(|| spec.default_box_count()));
    let mut corners = armed_corners(&arms);
    if labels.len() >= corners.len() {
        // one corner must stay free or nothing can move
        return Err(ScenarioError::TooManyBoxes {
            boxes: labels.len(),
            capacity: corners.len().saturating_sub(1),
        });
    }
    corners.shuffle(rng);
    let boxes = labels
        .iter()
        .zip(&corners)
        .map(|(label, &corner)| CornerBox {
            label: label.clone(),
            at: CornerPosition::Corner(corner),
        })
        .collect();
    let goals = random_goals(&arms, &labels, rng);
    Ok(BoxNet2State {
        rows,
        cols,
        arms,
        boxes,
        goals,
    })
}

fn gen_warehouse(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Result<WarehouseState, ScenarioError> {
    let n = spec.robot_count;
    let k = usize::from(spec.location_count.unwrap_or((2 * n) as u16));
    if n > k {
        return Err(ScenarioError::TooManyRobots {
            robots: n,
            locations: k,
        });
    }
    let box_count = spec.box_count.unwrap_or_else(|| spec.default_box_count());
    let mut interior: Vec<u16> = (1..k.saturating_sub(1)).map(|i| i as u16).collect();
    if box_count > interior.len() {
        return Err(ScenarioError::TooManyBoxes {
            boxes: box_count,
            capacity: interior.len(),
        });
    }
    interior.shuffle(rng);
    let boxes = interior
        .iter()
        .take(box_count)
        .enumerate()
        .map(|(i, &slot)| WarehouseBox {
            label: i.to_string(),
            slot,
            status: BoxStatus::Waiting,
        })
        .collect();
    let mut spots: Vec<u16> = (0..k as u16).collect();
    spots.shuffle(rng);
    let robots = spots
        .iter()
        .take(n)
        .map(|&l| WarehouseRobot {
            position: RobotPosition::Location(l),
            carrying: None,
        })
        .collect();
    Ok(WarehouseState {
        location_count: k as u16,
        target_adjacent: vec![0],
        boxes,
        robots,
        swap_is_collision: spec.warehouse_swap_collision,
    })
}

fn gen_boxlift(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Result<BoxLiftState, ScenarioError> {
    let (smin, smax) = spec.lift_size_range;
    let (cmin, cmax) = spec.lift_capability_range;
    if smin == 0 || smin > smax || cmin == 0 || cmin > cmax {
        return Err(ScenarioError::InvalidParameter("size/capability ranges must be positive and ordered".into()));
    }
    if !spec.lift_alpha.is_finite() || spec.lift_alpha <= 0.0 || !(0.0..1.0).contains(&spec.lift_beta) {
        return Err(ScenarioError::InvalidParameter("need alpha > 0 and 0 <= beta < 1".into()));
    }
    let capabilities = (0..spec.robot_count)
        .map(|_| f64::from(rng.gen_range(cmin..=cmax)))
        .collect();
    let box_count = spec.box_count.unwrap_or_else(|| spec.default_box_count());
    let boxes = (0..box_count)
        .map(|i| {
            let size = f64::from(rng.gen_range(smin..=smax));
            let u = if spec.lift_beta > 0.0 {
                rng.gen_range(-spec.lift_beta..=spec.lift_beta)
            } else {
                0.0
            };
            LiftBox {
                label: i.to_string(),
                size,
                weight: size * spec.lift_alpha * (1.0 + u),
                lifted: false,
            }
        })
        .collect();
    Ok(BoxLiftState {
        capabilities,
        boxes,
        lift_feedback: Vec::new(),
        rule: spec.lift_rule,
    })
}

/// Cheap solvability check that ignores interactions between robots/boxes.
pub fn relaxed_solvable(world: &World) -> bool {
    match world {
        World::BoxNet1(s) => s.boxes.iter().all(|b| {
            let CellPosition::Cell(start) = b.at else { return true };
            let Some(goal) = s.goal_cell(&b.label) else { return false };
            // a box can leave a cell only if that cell has an arm
            reachable(start, goal, |c| {
                if s.arms.contains(&c) {
                    grid::neighbors(c, s.rows, s.cols)
                } else {
                    Vec::new()
                }
            }) && s.arms.contains(&goal)
        }),
        World::BoxNet2(s) => s.boxes.iter().all(|b| {
            let CornerPosition::Corner(start) = b.at else { return true };
            let Some(goal) = s.goal_cell(&b.label) else { return false };
            if !s.arms.contains(&goal) {
                return false;
            }
            let targets = grid::cell_corners(goal);
            let step = |k: Cell| -> Vec<Cell> {
                grid::cells_around_corner(k, s.rows, s.cols)
                    .into_iter()
                    .filter(|c| s.arms.contains(c))
                    .flat_map(grid::cell_corners)
                    .collect()
            };
            targets.iter().any(|&t| reachable(start, t, step))
        }),
        World::Warehouse(s) => !s.robots.is_empty() && !s.target_adjacent.is_empty(),
        World::BoxLift(s) => {
            let total: f64 = s.capabilities.iter().sum();
            s.boxes.iter().all(|b| b.lifted || s.rule.lifts(total, b.weight))
        }
    }
}

fn reachable<F>(start: Cell, goal: Cell, mut next: F) -> bool
where
    F: FnMut(Cell) -> Vec<Cell>,
{
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        if c == goal {
            return true;
        }
        for n in next(c) {
            if seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    false
}
