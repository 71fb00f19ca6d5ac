use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mrplan::env::{
    apply_joint_action, available_actions, state_facts, ActionAssignment, EnvKind, EnvState, ExecutionNoise, World,
};
use mrplan::environments::warehouse::RobotPosition;
use mrplan::environments::{bfs_optimal_steps, generate_scenario, ScenarioSpec};

fn labels(world: &World) -> Vec<String> {
    let mut out: Vec<String> = match world {
        World::BoxNet1(s) => s.boxes.iter().map(|b| b.label.clone()).collect(),
        World::BoxNet2(s) => s.boxes.iter().map(|b| b.label.clone()).collect(),
        World::Warehouse(s) => s.boxes.iter().map(|b| b.label.clone()).collect(),
        World::BoxLift(s) => s.boxes.iter().map(|b| b.label.clone()).collect(),
    };
    out.sort();
    out
}

fn random_assignment(state: &EnvState, rng: &mut ChaCha8Rng) -> ActionAssignment {
    state
        .robots()
        .map(|r| {
            let menu = available_actions(state, r).unwrap();
            menu[rng.gen_range(0..menu.len())].clone()
        })
        .collect()
}

fn one_edge(before: RobotPosition, after: RobotPosition, adjacent: &[u16]) -> bool {
    match (before, after) {
        (RobotPosition::Location(a), RobotPosition::Location(b)) => a.abs_diff(b) <= 1,
        (RobotPosition::Location(a), RobotPosition::Target) | (RobotPosition::Target, RobotPosition::Location(a)) => {
            adjacent.contains(&a)
        }
        (RobotPosition::Target, RobotPosition::Target) => true,
    }
}

fn env_strategy() -> impl Strategy<Value = EnvKind> {
    prop::sample::select(EnvKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_walks_preserve_invariants(env in env_strategy(), seed in 0u64..10_000, walk in 0u64..1000, robots_ix in 0usize..2) {
        let robots = env.robot_schedule()[robots_ix];
        let mut state = generate_scenario(&ScenarioSpec::new(env, robots, seed)).unwrap();
        let boxes = labels(&state.world);
        let mut rng = ChaCha8Rng::seed_from_u64(walk);
        for _ in 0..8 {
            let assignment = random_assignment(&state, &mut rng);
            let out = apply_joint_action(&state, &assignment, &ExecutionNoise::none());
            let again = apply_joint_action(&state, &assignment, &ExecutionNoise::none());
            prop_assert_eq!(&out, &again);
            let Some(next) = out.next_state() else { break };
            prop_assert_eq!(labels(&next.world), boxes.clone());
            match (&state.world, &next.world) {
                (World::BoxLift(a), World::BoxLift(b)) => {
                    for (x, y) in a.boxes.iter().zip(&b.boxes) {
                        prop_assert!(!x.lifted || y.lifted, "box {} was dropped", x.label);
                    }
                }
                (World::Warehouse(a), World::Warehouse(b)) => {
                    for (x, y) in a.robots.iter().zip(&b.robots) {
                        prop_assert!(one_edge(x.position, y.position, &a.target_adjacent));
                    }
                }
                _ => {}
            }
            state = next.clone();
        }
    }

    #[test]
    fn lift_facts_never_expose_weights(seed in 0u64..10_000, robots_ix in 0usize..4) {
        let robots = EnvKind::BoxLift.robot_schedule()[robots_ix];
        let state = generate_scenario(&ScenarioSpec::new(EnvKind::BoxLift, robots, seed)).unwrap();
        let json = serde_json::to_string(&state_facts(&state)).unwrap();
        prop_assert!(!json.contains("weight"));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generated_scenarios_are_solvable(env in env_strategy(), seed in 0u64..10_000) {
        let state = generate_scenario(&ScenarioSpec::new(env, env.robot_schedule()[0], seed)).unwrap();
        prop_assert!(bfs_optimal_steps(&state, 60).unwrap().is_some());
    }
}

#[test]
fn schedules_follow_the_experiment_design() {
    assert_eq!(EnvKind::BoxNet1.robot_schedule(), [4, 8, 16, 32]);
    assert_eq!(EnvKind::BoxNet2.robot_schedule(), [4, 8, 16, 32]);
    assert_eq!(EnvKind::Warehouse.robot_schedule(), [4, 6, 8, 10]);
    assert_eq!(EnvKind::BoxLift.robot_schedule(), [4, 6, 8, 10]);
}

#[test]
fn one_arm_with_an_in_cell_goal_needs_one_step() {
    let found = (0..500).find_map(|seed| {
        let s = generate_scenario(&ScenarioSpec::new(EnvKind::BoxNet1, 1, seed).with_boxes(1).with_grid(1, 1)).ok()?;
        Some(s)
    });
    let state = found.expect("a 1x1 scenario");
    assert_eq!(bfs_optimal_steps(&state, 10).unwrap(), Some(1));
}
