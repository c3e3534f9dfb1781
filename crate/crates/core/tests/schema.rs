mod common;

use std::collections::{BTreeSet, VecDeque};

use mmschema_core::learner::{brute_force_optimum, Environment};
use mmschema_core::schema::{joinable, valid_actions, ConstraintPool, JoinAction, SchemaState};
use mmschema_core::whatif::materialize;
use mmschema_core::workload::CostMode;
use mmschema_core::{AttrId, Execution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Bell numbers by the Bell triangle.
fn bell(n: usize) -> usize {
    let mut row = vec![1usize];
    for _ in 0..n {
        let mut next = vec![*row.last().unwrap()];
        for &x in &row {
            next.push(next.last().unwrap() + x);
        }
        row = next;
    }
    row[0]
}

fn reachable(env: &Environment) -> BTreeSet<String> {
    let mut seen = BTreeSet::from([env.initial().signature()]);
    let mut queue = VecDeque::from([env.initial().clone()]);
    while let Some(s) = queue.pop_front() {
        for a in valid_actions(env.pool(), &s) {
            let next = s.apply_join(env.pool(), a).unwrap();
            if seen.insert(next.signature()) {
                queue.push_back(next);
            }
        }
    }
    seen
}

fn single_family(attrs: usize, workload: &str) -> (tempfile::TempDir, Environment) {
    let dir = tempfile::tempdir().unwrap();
    let header: Vec<String> = (0..attrs).map(|i| format!("c{i}")).collect();
    let mut csv = format!("key,{}\n", header.join(","));
    for r in 0..6 {
        let cells: Vec<String> = (0..attrs).map(|c| ((r * 7 + c * 3) % 5).to_string()).collect();
        csv.push_str(&format!("r{r},{}\n", cells.join(",")));
    }
    let fx = common::write_sources(dir.path(), &[("t.csv", &csv)], &[("t.csv", "RELATIONAL", "t")], "", workload);
    let (_, env) = mmschema_core::load_environment(&fx.manifest, &fx.constraints, &fx.workload).unwrap();
    (dir, env)
}

#[test]
fn same_family_attributes_reach_every_partition() {
    let (_d, env) = single_family(5, r#"{"queries":[{"name":"q","project":[0,1,2,3,4]}]}"#);
    assert_eq!(bell(5), 52);
    assert_eq!(reachable(&env).len(), bell(5));
    assert_eq!(brute_force_optimum(&env).unwrap().reachable, bell(5));
}

#[test]
fn oracle_merges_three_same_key_attributes() {
    let (_d, env) = single_family(3, r#"{"queries":[{"name":"q","project":[0,1,2]}]}"#);
    let o = brute_force_optimum(&env).unwrap();
    assert_eq!(o.reachable, 5);
    assert_eq!(o.best.signature, "{0,1,2}");
}

#[test]
fn valid_actions_equal_brute_force_pair_filter() {
    let l = common::demo();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = l.env.attr_count() as u32;
    for _ in 0..5 {
        for s in common::random_walk(&l.env, &mut rng) {
            let mut expect = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if joinable(l.env.pool(), &s, AttrId(a), AttrId(b)) {
                        expect.push(JoinAction::new(AttrId(a), AttrId(b)));
                    }
                }
            }
            assert_eq!(valid_actions(l.env.pool(), &s), expect, "{s}");
        }
    }
}

#[test]
fn removing_the_link_removes_cross_model_actions() {
    let l = common::demo();
    let cross = JoinAction::new(AttrId(4), AttrId(8));
    assert!(valid_actions(l.env.pool(), l.env.initial()).contains(&cross));
    let pool = ConstraintPool::parse("7 = 9\n", &l.dataset.catalog).unwrap();
    let acts = valid_actions(&pool, l.env.initial());
    assert!(!acts.contains(&cross));
    // no action crosses the person/paper boundary at all
    let fam = |a: AttrId| l.dataset.catalog.family_of(a).0;
    assert!(acts.iter().all(|a| !matches!((fam(a.left), fam(a.right)), (0, 1) | (1, 0))));
}

#[test]
fn merged_contents_depend_only_on_the_partition() {
    for (seed, attrs) in [(5, 4), (6, 5), (7, 6)] {
        let l = common::small(seed, attrs);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            for s in common::random_walk(&l.env, &mut rng) {
                let rebuilt: SchemaState = materialize(&l.env, &s.partition()).unwrap().unwrap();
                assert_eq!(rebuilt, s);
            }
        }
    }
}

#[test]
fn parallel_and_sequential_costing_agree() {
    let l = common::demo();
    let seq = l
        .dataset
        .environment(l.env.pool().clone(), l.env.workload().clone(), CostMode::Units, Execution::Sequential)
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for s in common::random_walk(&l.env, &mut rng) {
        assert_eq!(seq.report(&s), l.env.report(&s));
    }
}
