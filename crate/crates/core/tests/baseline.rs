mod common;

use common::{body, world, CheckedBaseline};
use pushbench::bench::{aggregate_metrics, run_episode, suite_episode_config, Policy};
use pushbench::env::{Env, EpisodeConfig};
use pushbench::geometry::{Pose2D, ShapeSpec};
use pushbench::world::{Role, SuiteId};

#[test]
fn straight_push_in_free_space_succeeds() {
    let mut w = world(body(Role::Pushee, ShapeSpec::rect(0.05, 0.05), Pose2D::new(-0.15, 0.0, 0.0)), Pose2D::new(-0.15, -0.07, 0.0), vec![]);
    w.goal = Pose2D::new(0.15, 0.0, 0.0);
    let mut env = Env::default();
    let cfg = EpisodeConfig::default();
    let mut obs = env.reset_with_world(w, &cfg).unwrap();
    let mut policy = CheckedBaseline::new();
    policy.begin(&env, &obs).unwrap();
    let mut reached = false;
    while !env.is_done() {
        let a = policy.act(&env, &obs).unwrap();
        let r = env.step(&a).unwrap();
        reached |= r.info.goal_reached;
        obs = r.observation;
    }
    assert!(reached);
    assert!(env.steps() <= 500);
    assert_eq!(policy.violations, 0);
}

#[test]
fn free_space_sample_and_relocation_rule() {
    let mut env = Env::default();
    let mut policy = CheckedBaseline::new();
    let base = EpisodeConfig::default();
    let records: Vec<_> = (0..20)
        .map(|i| {
            let cfg = suite_episode_config(SuiteId::FreeSpace, i, 500, &base).unwrap();
            run_episode(&mut policy, &mut env, &cfg).unwrap().record
        })
        .collect();
    let m = aggregate_metrics(&records, None).unwrap();
    assert!(m.success_rate >= 0.9, "{m:?}");
    assert!(m.spl <= m.success_rate);
    assert!(policy.relocating_steps > 0);
    assert_eq!(policy.violations, 0);
}
