use std::sync::Arc;

use mrplan::dialogue::{
    conforms, plan_step, turn_symbols, FrameworkKind, PlanSettings, ProtocolFailure, ProtocolLimits, StepPlan,
    TurnPurpose,
};
use mrplan::env::{active_robots, apply_joint_action, EnvKind, EnvState, ExecutionNoise, StepResult};
use mrplan::environments::{generate_scenario, ScenarioSpec};
use mrplan::gateway::{Backend, Gateway, ModelProfile, OracleBackend, PlanCache, ScriptFixture, ScriptRule, ScriptedBackend};
use mrplan::prompt::{CharApproxCounter, HistoryMode, PromptBuilder};

fn run(framework: FrameworkKind, state: &EnvState, backend: Arc<dyn Backend>, limits: ProtocolLimits) -> StepPlan {
    let builder = PromptBuilder::default();
    let settings = PlanSettings {
        framework,
        limits,
        mode: HistoryMode::FullHistory,
        builder: &builder,
        strict_parse: false,
    };
    let mut gw = Gateway::new(backend, ModelProfile::gpt4(), Arc::new(CharApproxCounter), "protocol-test");
    plan_step(settings, state, &[], &mut gw)
}

fn scenario(env: EnvKind, seed: u64) -> EnvState {
    generate_scenario(&ScenarioSpec::new(env, 4, seed)).unwrap()
}

#[test]
fn oracle_transcripts_match_each_framework_grammar() {
    let cache = Arc::new(PlanCache::default());
    for env in EnvKind::ALL {
        for seed in 0..3 {
            let state = scenario(env, seed);
            for fw in FrameworkKind::ALL {
                let plan = run(fw, &state, Arc::new(OracleBackend::new(cache.clone())), ProtocolLimits::default());
                let assignment = plan.result.as_ref().unwrap_or_else(|e| panic!("{fw:?} on {env:?}: {e:?}"));
                assert!(
                    conforms(fw, &plan.transcript),
                    "{fw:?} on {env:?} produced {}",
                    turn_symbols(&plan.transcript)
                );
                let out = apply_joint_action(&state, assignment, &ExecutionNoise::none());
                assert!(matches!(out.result, StepResult::Advanced { .. }), "{fw:?} on {env:?}");
            }
        }
    }
}

#[test]
fn cmas_oracle_is_a_single_call() {
    let state = scenario(EnvKind::Warehouse, 1);
    let plan = run(
        FrameworkKind::Cmas,
        &state,
        Arc::new(OracleBackend::new(Arc::new(PlanCache::default()))),
        ProtocolLimits::default(),
    );
    assert!(plan.result.is_ok());
    assert_eq!(plan.transcript.api_calls(), 1);
}

#[test]
fn hmas2_unanimous_approval_costs_one_central_call_plus_one_per_active_agent() {
    let state = scenario(EnvKind::BoxNet1, 2);
    let fixture = ScriptFixture {
        rules: vec![
            ScriptRule::new("central", Some(TurnPurpose::PlanProposal), vec!["@oracle".into()]),
            ScriptRule::new("local", Some(TurnPurpose::Feedback), vec!["AGREE".into()]),
        ],
    };
    let backend = Arc::new(ScriptedBackend::new(fixture, Arc::new(PlanCache::default())));
    let plan = run(FrameworkKind::Hmas2, &state, backend, ProtocolLimits::default());
    assert!(plan.result.is_ok(), "{:?}", plan.result);
    let central = plan.transcript.turns.iter().filter(|t| t.api_call && t.role.is_central()).count();
    let local = plan.transcript.turns.iter().filter(|t| t.api_call && !t.role.is_central()).count();
    assert_eq!(central, 1);
    assert_eq!(local, active_robots(&state).len());
}

#[test]
fn dmas_without_execute_times_out_after_the_round_limit() {
    let state = scenario(EnvKind::BoxNet1, 0);
    let limits = ProtocolLimits {
        max_dialogue_rounds: 3,
        ..ProtocolLimits::default()
    };
    let backend = Arc::new(ScriptedBackend::echo("Let us keep talking."));
    let plan = run(FrameworkKind::Dmas, &state, backend, limits);
    assert!(matches!(plan.result, Err(ProtocolFailure::ConsensusTimeout(_))));
    assert_eq!(plan.transcript.api_calls(), 3 * state.robot_count());
}

#[test]
fn first_dmas_agent_may_close_the_dialogue() {
    let state = scenario(EnvKind::BoxLift, 0);
    let backend = Arc::new(OracleBackend::new(Arc::new(PlanCache::default())));
    let plan = run(FrameworkKind::Dmas, &state, backend, ProtocolLimits::default());
    assert!(plan.result.is_ok());
    assert_eq!(plan.transcript.turns.len(), 1);
    assert_eq!(turn_symbols(&plan.transcript), "e");
}

#[test]
fn unusable_plans_exhaust_the_retry_allowance() {
    let state = scenario(EnvKind::BoxNet2, 0);
    let backend = Arc::new(ScriptedBackend::echo("EXECUTE\nrobot0: teleport()"));
    let limits = ProtocolLimits::default();
    let plan = run(FrameworkKind::Cmas, &state, backend, limits);
    assert!(matches!(plan.result, Err(ProtocolFailure::SyntaxRetriesExhausted(_))));
    assert_eq!(plan.transcript.api_calls(), limits.max_syntax_retries as usize + 1);
    assert!(plan.transcript.turns[1].prompt.contains("could not be used"));
}
