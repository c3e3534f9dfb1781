mod common;

use std::ops::ControlFlow;

use mmschema_core::learner::{
    brute_force_optimum, run_episode, select_action, td_update, train, train_seeds, train_with, LearnError,
    LearnParams, QTables,
};
use mmschema_core::schema::{valid_actions, JoinAction, SchemaState};
use mmschema_core::{AttrId, Execution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn act(l: u32, r: u32) -> JoinAction {
    JoinAction::new(AttrId(l), AttrId(r))
}

// x (0) and y (1) keyed by a, z (2) keyed by b, y = z declared.
fn chain() -> (tempfile::TempDir, mmschema_core::Environment) {
    let dir = tempfile::tempdir().unwrap();
    let fx = common::write_sources(
        dir.path(),
        &[("a.csv", "key,x,y\na1,1,k1\na2,2,k2\n"), ("b.csv", "key,z\nb1,k1\n")],
        &[("a.csv", "RELATIONAL", "a"), ("b.csv", "RELATIONAL", "b")],
        "1 = 2\n",
        r#"{"queries":[{"name":"q","project":[0,2]}]}"#,
    );
    let (_, env) = mmschema_core::load_environment(&fx.manifest, &fx.constraints, &fx.workload).unwrap();
    (dir, env)
}

#[test]
fn td_update_with_full_step_and_no_lookahead() {
    let (_d, env) = chain();
    let s0 = env.initial();
    let s1 = s0.apply_join(env.pool(), act(0, 1)).unwrap();
    let q = td_update(&QTables::new(3), s0, act(0, 1), 10.0, &s1, env.pool(), 1.0, 0.0);
    assert_eq!(q.q2(AttrId(0), AttrId(1)), 10.0);
    assert_eq!(q.q1(AttrId(0)), 10.0);
    let untouched: Vec<f64> = (0..3)
        .flat_map(|l| (0..3).map(move |r| (l, r)))
        .filter(|&p| p != (0, 1))
        .map(|(l, r)| q.q2(AttrId(l), AttrId(r)))
        .collect();
    assert!(untouched.iter().all(|&v| v == 0.0));
}

#[test]
fn td_update_with_zero_reward_into_terminal_state() {
    let (_d, env) = chain();
    let s1 = env.initial().apply_join(env.pool(), act(0, 1)).unwrap();
    let s2 = s1.apply_join(env.pool(), act(1, 2)).unwrap();
    assert!(valid_actions(env.pool(), &s2).is_empty());
    let q = td_update(&QTables::new(3), &s1, act(1, 2), 0.0, &s2, env.pool(), 0.5, 0.9);
    assert_eq!(q, QTables::new(3));
}

#[test]
fn td_update_two_step_chain() {
    let (_d, env) = chain();
    let (alpha, gamma) = (0.5, 0.9);
    let s0 = env.initial().clone();
    let s1 = s0.apply_join(env.pool(), act(0, 1)).unwrap();
    let s2 = s1.apply_join(env.pool(), act(1, 2)).unwrap();
    assert_eq!(valid_actions(env.pool(), &s1), vec![act(0, 2), act(1, 2)]);

    let sweep = |q: &QTables| {
        let q = td_update(q, &s0, act(0, 1), 4.0, &s1, env.pool(), alpha, gamma);
        td_update(&q, &s1, act(1, 2), 2.0, &s2, env.pool(), alpha, gamma)
    };
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;

    // sweep 1: bootstrap 0 on both steps
    //   q2[0][1] = q1[0] = 0.5 * 4 = 2, q2[1][2] = q1[1] = 0.5 * 2 = 1
    let q = sweep(&QTables::new(3));
    assert!(close(q.q2(AttrId(0), AttrId(1)), 2.0));
    assert!(close(q.q1(AttrId(0)), 2.0));
    assert!(close(q.q2(AttrId(1), AttrId(2)), 1.0));
    assert!(close(q.q1(AttrId(1)), 1.0));

    // sweep 2: step 1 bootstraps max(q2[0][2], q2[1][2]) = 1
    //   q2[0][1] = 2 + 0.5 * (4 + 0.9 * 1 - 2) = 3.45
    //   q2[1][2] = 1 + 0.5 * (2 - 1) = 1.5
    let q = sweep(&q);
    assert!(close(q.q2(AttrId(0), AttrId(1)), 3.45));
    assert!(close(q.q1(AttrId(0)), 3.45));
    assert!(close(q.q2(AttrId(1), AttrId(2)), 1.5));
    assert!(close(q.q1(AttrId(1)), 1.5));
    assert_eq!(q.q2(AttrId(0), AttrId(2)), 0.0);
}

#[test]
fn selection_tie_breaks_and_argmax() {
    let l = common::demo();
    let (env, s) = (&l.env, l.env.initial());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut q = QTables::new(env.attr_count());
    assert_eq!(select_action(&q, s, env.pool(), 1.0, &mut rng).unwrap(), valid_actions(env.pool(), s)[0]);
    q.set_q1(AttrId(4), 5.0);
    q.set_q2(AttrId(4), AttrId(8), 9.0);
    assert_eq!(select_action(&q, s, env.pool(), 1.0, &mut rng).unwrap(), act(4, 8));
    // an invalid pair never wins even with the largest value
    q.set_q2(AttrId(4), AttrId(9), 100.0);
    assert_eq!(select_action(&q, s, env.pool(), 1.0, &mut rng).unwrap(), act(4, 8));
}

#[test]
fn exploration_is_seeded_and_ignores_tables() {
    let l = common::demo();
    let (env, s) = (&l.env, l.env.initial());
    let mut loud = QTables::new(env.attr_count());
    loud.set_q1(AttrId(0), 1e9);
    loud.set_q2(AttrId(0), AttrId(1), 1e9);
    let draw = |q: &QTables| {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        (0..50).map(|_| select_action(q, s, env.pool(), 0.0, &mut rng).unwrap()).collect::<Vec<_>>()
    };
    let a = draw(&QTables::new(env.attr_count()));
    assert_eq!(a, draw(&QTables::new(env.attr_count())));
    assert_eq!(a, draw(&loud));
    assert!(a.iter().collect::<std::collections::BTreeSet<_>>().len() > 5);
}

#[test]
fn terminal_state_has_no_action() {
    let (_d, env) = chain();
    let s = env.initial().apply_join(env.pool(), act(0, 1)).unwrap().apply_join(env.pool(), act(0, 2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(select_action(&QTables::new(3), &s, env.pool(), 0.5, &mut rng), Err(LearnError::Terminal));
}

#[test]
fn zero_step_episode_keeps_the_initial_schema() {
    let l = common::demo();
    let params = LearnParams { max_steps: Some(0), ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (q, rec) = run_episode(&l.env, &QTables::new(12), &params, &mut rng);
    assert!(rec.steps.is_empty());
    assert_eq!(rec.final_cost, rec.initial_cost);
    assert_eq!(rec.final_signature, l.env.initial().signature());
    assert_eq!(q, QTables::new(12));
}

#[test]
fn rewards_telescope_and_best_only_improves() {
    let l = common::demo();
    let mut summaries = Vec::new();
    let r = train_with(&l.env, &LearnParams { episodes: 20, seed: 3, ..Default::default() }, |_, s| {
        summaries.push(s.clone());
        ControlFlow::Continue(())
    })
    .unwrap();
    assert_eq!(r.episodes.len(), 20);
    assert_eq!(summaries.len(), 20);
    for e in &r.episodes {
        assert_eq!(e.total_reward(), e.initial_cost as i64 - e.final_cost as i64);
        for s in &e.steps {
            assert!(r.all_seen.contains_key(&s.signature));
        }
    }
    assert!(summaries.windows(2).all(|w| w[1].best_cost <= w[0].best_cost));
    assert!(r.best_by_time.cost <= r.initial.cost);
    let min_cost = r.all_seen.values().map(|e| e.cost).min().unwrap();
    let min_storage = r.all_seen.values().map(|e| e.storage).min().unwrap();
    assert_eq!((r.best_by_time.cost, r.best_by_space.storage), (min_cost, min_storage));
    assert_eq!(r.all_seen[&r.initial.signature].first_episode, 0);
}

#[test]
fn every_logged_action_was_valid_where_taken() {
    let l = common::demo();
    let r = train(&l.env, &LearnParams { episodes: 20, seed: 9, ..Default::default() }).unwrap();
    for e in &r.episodes {
        let mut s: SchemaState = l.env.initial().clone();
        for step in &e.steps {
            assert!(valid_actions(l.env.pool(), &s).contains(&step.action));
            s = s.apply_join(l.env.pool(), step.action).unwrap();
            assert_eq!(s.signature(), step.signature);
        }
    }
}

#[test]
fn training_is_deterministic_per_seed() {
    let l = common::demo();
    let p = LearnParams { episodes: 15, seed: 77, ..Default::default() };
    assert_eq!(train(&l.env, &p).unwrap(), train(&l.env, &p).unwrap());
    let other = train(&l.env, &LearnParams { seed: 78, ..p.clone() }).unwrap();
    assert_ne!(other.episodes, train(&l.env, &p).unwrap().episodes);
}

#[test]
fn observer_can_stop_a_run() {
    let l = common::demo();
    let r = train_with(&l.env, &LearnParams { episodes: 20, ..Default::default() }, |rec, _| {
        if rec.episode == 5 {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })
    .unwrap();
    assert_eq!(r.episodes.len(), 5);
    assert!(r.stopped);
}

#[test]
fn invalid_parameters_are_rejected() {
    let l = common::canonical();
    for p in [
        LearnParams { alpha: 0.0, ..Default::default() },
        LearnParams { gamma: 1.5, ..Default::default() },
        LearnParams { greedy: -0.1, ..Default::default() },
        LearnParams { episodes: 0, ..Default::default() },
        LearnParams { max_steps: Some(0), ..Default::default() },
        LearnParams { baseline_time: Some(f64::NAN), ..Default::default() },
    ] {
        assert!(matches!(train(&l.env, &p), Err(LearnError::InvalidParams(_))), "{p:?}");
    }
}

#[test]
fn oracle_refuses_large_instances() {
    let l = common::demo();
    assert_eq!(brute_force_optimum(&l.env), Err(LearnError::OracleBound { attrs: 12, bound: 8 }));
}

#[test]
fn oracle_without_actions_returns_the_initial_schema() {
    let dir = tempfile::tempdir().unwrap();
    let fx = common::write_sources(
        dir.path(),
        &[("a.csv", "key,x\na1,1\n"), ("b.csv", "key,z\nb1,2\n")],
        &[("a.csv", "RELATIONAL", "a"), ("b.csv", "RELATIONAL", "b")],
        "",
        r#"{"queries":[{"name":"q","project":[0]}]}"#,
    );
    let (_, env) = mmschema_core::load_environment(&fx.manifest, &fx.constraints, &fx.workload).unwrap();
    let o = brute_force_optimum(&env).unwrap();
    assert_eq!((o.best.signature.as_str(), o.reachable), ("{0}|{1}", 1));
}

#[test]
fn canonical_instance_converges_to_the_oracle() {
    let l = common::canonical();
    let oracle = brute_force_optimum(&l.env).unwrap();
    let p = LearnParams { alpha: 0.1, gamma: 0.9, greedy: 0.9, episodes: 200, ..Default::default() };
    let seeds: Vec<u64> = (1..=10).collect();
    let runs = train_seeds(&l.env, &p, &seeds, Execution::default()).unwrap();
    let hits = runs.iter().filter(|r| r.best_by_time.cost == oracle.best.cost).count();
    assert!(hits >= 9, "{hits}/10");

    // the learned greedy policy walks to the optimum
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (_, rec) = run_episode(&l.env, &runs[0].tables, &LearnParams { greedy: 1.0, ..p }, &mut rng);
    assert!(rec.steps.iter().any(|s| s.signature == oracle.best.signature), "{rec:?}");
}

#[test]
fn seed_sweeps_match_in_both_execution_modes() {
    let l = common::small(2, 5);
    let p = LearnParams { episodes: 30, ..Default::default() };
    let seeds = [1, 2, 3];
    let par = train_seeds(&l.env, &p, &seeds, Execution::default()).unwrap();
    let seq = train_seeds(&l.env, &p, &seeds, Execution::Sequential).unwrap();
    assert_eq!(par, seq);
    assert_eq!(par[1], train(&l.env, &LearnParams { seed: 2, ..p }).unwrap());
}
