//! Costing a user-chosen attribute grouping without running the learner.

use serde::Serialize;
use thiserror::Error;

use crate::catalog::AttrId;
use crate::learner::Environment;
use crate::schema::{joinable, JoinAction, SchemaState};
use crate::workload::CostReport;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WhatIfError {
    #[error("groups do not partition the attributes: {0}")]
    NotAPartition(String),
}

/// A group whose attributes cannot all be joined under the constraint pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub group: usize,
    /// The group's smallest attribute and the smallest one it cannot reach.
    pub pair: (AttrId, AttrId),
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum WhatIfOutcome {
    Realizable { signature: String, report: CostReport },
    Unrealizable { violation: Violation },
}

/// Checks that `groups` partition every attribute exactly once.
pub fn check_partition(groups: &[Vec<AttrId>], attrs: usize) -> Result<(), WhatIfError> {
    let mut seen = vec![false; attrs];
    for g in groups {
        if g.is_empty() {
            return Err(WhatIfError::NotAPartition("empty group".into()));
        }
        for &a in g {
            match seen.get_mut(a.index()) {
                None => return Err(WhatIfError::NotAPartition(format!("unknown attribute {a}"))),
                Some(true) => return Err(WhatIfError::NotAPartition(format!("attribute {a} appears twice"))),
                Some(s) => *s = true,
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(WhatIfError::NotAPartition(format!("attribute {i} is missing")));
    }
    Ok(())
}

/// Builds the grouping from the initial schema. Each group grows from its
/// smallest attribute by repeatedly joining the smallest remaining attribute
/// that is joinable with the grown table.
pub fn materialize(env: &Environment, groups: &[Vec<AttrId>]) -> Result<Result<SchemaState, Violation>, WhatIfError> {
    check_partition(groups, env.attr_count())?;
    let mut state = env.initial().clone();
    for (gi, g) in groups.iter().enumerate() {
        let mut rest: Vec<AttrId> = g.clone();
        rest.sort();
        let root = rest.remove(0);
        while !rest.is_empty() {
            let Some(i) = rest.iter().position(|&a| joinable(env.pool(), &state, root, a)) else {
                let pair = (root, rest[0]);
                return Ok(Err(Violation {
                    group: gi,
                    pair,
                    message: format!(
                        "attributes {} and {} share no key family and no declared equivalence connects them",
                        pair.0, pair.1
                    ),
                }));
            };
            let a = rest.remove(i);
            state = state.apply_join(env.pool(), JoinAction::new(root.min(a), root.max(a))).expect("checked joinable");
        }
    }
    Ok(Ok(state))
}

pub fn evaluate_whatif(env: &Environment, groups: &[Vec<AttrId>]) -> Result<WhatIfOutcome, WhatIfError> {
    Ok(match materialize(env, groups)? {
        Ok(state) => WhatIfOutcome::Realizable { signature: state.signature(), report: env.report(&state) },
        Err(violation) => WhatIfOutcome::Unrealizable { violation },
    })
}
