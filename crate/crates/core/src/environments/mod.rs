//! The four benchmark environments, seeded scenario generation and the
//! exhaustive search oracle.

pub mod boxlift;
pub mod boxnet1;
pub mod boxnet2;
pub mod grid;
mod scenario;
mod search;
pub mod warehouse;

pub use boxlift::{lift_resolution, LiftRule};
pub use scenario::{generate_scenario, relaxed_solvable, ScenarioError, ScenarioSpec};
pub use search::{
    bfs_optimal_plan, bfs_optimal_steps, bfs_optimal_steps_with, joint_successors, lower_bound, optimal_plan, PlanStep,
    SearchError, SearchLimits,
};
