#![allow(dead_code)]

use std::path::Path;

use mmschema_core::learner::Environment;
use mmschema_core::schema::{valid_actions, SchemaState};
use mmschema_core::synth::Fixture;
use mmschema_core::{load_environment, Dataset};
use rand::Rng;
use tempfile::TempDir;

pub struct Loaded {
    pub dir: TempDir,
    pub fixture: Fixture,
    pub dataset: Dataset,
    pub env: Environment,
}

pub fn load(write: impl FnOnce(&Path) -> std::io::Result<Fixture>) -> Loaded {
    let dir = tempfile::tempdir().unwrap();
    let fixture = write(dir.path()).unwrap();
    let (dataset, env) = load_environment(&fixture.manifest, &fixture.constraints, &fixture.workload).unwrap();
    Loaded { dir, fixture, dataset, env }
}

pub fn demo() -> Loaded {
    load(|d| mmschema_core::synth::write_demo(d, 7))
}

pub fn canonical() -> Loaded {
    load(mmschema_core::synth::write_canonical)
}

pub fn small(seed: u64, attrs: usize) -> Loaded {
    load(|d| mmschema_core::synth::write_small(d, seed, attrs))
}

/// Writes `files` into a fresh directory with a manifest listing `sources`
/// as `(file, model, label)`.
pub fn write_sources(
    dir: &Path,
    files: &[(&str, &str)],
    sources: &[(&str, &str, &str)],
    constraints: &str,
    workload: &str,
) -> Fixture {
    for (name, body) in files {
        std::fs::write(dir.join(name), body).unwrap();
    }
    let list: Vec<_> =
        sources.iter().map(|(p, m, l)| serde_json::json!({ "path": p, "model": m, "entity_label": l })).collect();
    let fx = Fixture {
        manifest: dir.join("manifest.json"),
        constraints: dir.join("constraints.txt"),
        workload: dir.join("workload.json"),
    };
    std::fs::write(&fx.manifest, serde_json::json!({ "sources": list }).to_string()).unwrap();
    std::fs::write(&fx.constraints, constraints).unwrap();
    std::fs::write(&fx.workload, workload).unwrap();
    fx
}

/// Uniformly random valid joins from the initial state, every state kept.
pub fn random_walk<R: Rng>(env: &Environment, rng: &mut R) -> Vec<SchemaState> {
    let mut states = vec![env.initial().clone()];
    loop {
        let s = states.last().unwrap();
        let acts = valid_actions(env.pool(), s);
        if acts.is_empty() {
            return states;
        }
        let a = acts[rng.gen_range(0..acts.len())];
        let next = s.apply_join(env.pool(), a).unwrap();
        states.push(next);
    }
}
