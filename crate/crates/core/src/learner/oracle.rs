use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{Environment, LearnError, SchemaScore};
use crate::par::{self, Execution};
use crate::schema::{valid_actions, JoinAction, SchemaState};

/// Largest attribute count the exhaustive search accepts by default.
pub const DEFAULT_ORACLE_BOUND: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    /// Minimum by (cost, storage, signature).
    pub best: SchemaScore,
    /// Every reachable schema, including the initial one.
    pub reachable: usize,
}

pub fn brute_force_optimum(env: &Environment) -> Result<OracleResult, LearnError> {
    brute_force_optimum_with(env, DEFAULT_ORACLE_BOUND, Execution::default())
}

/// Breadth-first enumeration of every schema reachable by valid joins.
/// Each frontier is expanded and evaluated with `exec`.
pub fn brute_force_optimum_with(env: &Environment, bound: usize, exec: Execution) -> Result<OracleResult, LearnError> {
    let attrs = env.attr_count();
    if attrs > bound {
        return Err(LearnError::OracleBound { attrs, bound });
    }
    let start = env.initial().clone();
    let e = env.evaluate(&start);
    let mut best = SchemaScore { signature: start.signature(), cost: e.cost, storage: e.storage };
    let mut seen: BTreeSet<String> = BTreeSet::from([best.signature.clone()]);
    let mut frontier = vec![start];

    while !frontier.is_empty() {
        let children: Vec<Vec<(String, SchemaState)>> = par::map(exec, &frontier, |s| {
            // every attribute pair across the same two tables yields one state
            let distinct: BTreeMap<String, JoinAction> =
                valid_actions(env.pool(), s).into_iter().rev().map(|a| (s.joined_signature(a), a)).collect();
            distinct
                .into_iter()
                .filter(|(sig, _)| !seen.contains(sig))
                .map(|(sig, a)| (sig, s.apply_join(env.pool(), a).expect("valid action")))
                .collect()
        });
        let mut next = Vec::new();
        for (sig, s) in children.into_iter().flatten() {
            if seen.insert(sig) {
                next.push(s);
            }
        }
        let scores = par::map(exec, &next, |s| {
            let e = env.evaluate(s);
            SchemaScore { signature: s.signature(), cost: e.cost, storage: e.storage }
        });
        for s in scores {
            if (s.cost, s.storage, &s.signature) < (best.cost, best.storage, &best.signature) {
                best = s;
            }
        }
        frontier = next;
    }
    Ok(OracleResult { best, reachable: seen.len() })
}
