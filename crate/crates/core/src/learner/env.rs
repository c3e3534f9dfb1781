use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::catalog::Catalog;
use crate::par::Execution;
use crate::schema::{ConstraintPool, JoinAction, SchemaState};
use crate::workload::{
    unanswerable_penalty, workload_cost_with, CostMode, CostOptions, CostReport, Workload, WorkloadError,
};

/// Everything an episode needs: the starting schema, the constraint pool and
/// the workload whose cost defines reward.
#[derive(Debug, Clone)]
pub struct Environment {
    catalog: Arc<Catalog>,
    pool: ConstraintPool,
    workload: Workload,
    initial: SchemaState,
    opts: CostOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Evaluation {
    pub cost: u64,
    pub storage: u64,
}

impl Environment {
    pub fn new(
        catalog: Arc<Catalog>,
        pool: ConstraintPool,
        workload: Workload,
        initial: SchemaState,
    ) -> Result<Self, WorkloadError> {
        Self::with_options(catalog, pool, workload, initial, CostMode::Units, Execution::default())
    }

    pub fn with_options(
        catalog: Arc<Catalog>,
        pool: ConstraintPool,
        workload: Workload,
        initial: SchemaState,
        mode: CostMode,
        exec: Execution,
    ) -> Result<Self, WorkloadError> {
        let base = CostOptions { penalty: None, mode, exec };
        let penalty = unanswerable_penalty(&workload, &initial, &pool, base)?;
        Ok(Environment { catalog, pool, workload, initial, opts: CostOptions { penalty: Some(penalty), ..base } })
    }

    pub fn catalog(&self) -> &Arc<Catalog> {
        &self.catalog
    }

    pub fn pool(&self) -> &ConstraintPool {
        &self.pool
    }

    pub fn workload(&self) -> &Workload {
        &self.workload
    }

    pub fn initial(&self) -> &SchemaState {
        &self.initial
    }

    pub fn attr_count(&self) -> usize {
        self.catalog.len()
    }

    pub fn penalty(&self) -> u64 {
        self.opts.penalty.unwrap_or_default()
    }

    pub fn cost_options(&self) -> CostOptions {
        self.opts
    }

    /// Same environment with a different execution mode for batch loops.
    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.opts.exec = exec;
        self
    }

    pub fn report(&self, state: &SchemaState) -> CostReport {
        workload_cost_with(&self.workload, state, &self.pool, self.opts)
            .expect("plans built against a state execute against it; unanswerable queries are penalised")
    }

    pub fn evaluate(&self, state: &SchemaState) -> Evaluation {
        let r = self.report(state);
        Evaluation { cost: r.total, storage: r.storage_bytes }
    }
}

/// Memo of materialized states by signature. Merged table contents depend
/// only on the attribute grouping, so one entry serves every join order.
#[derive(Debug, Default)]
pub struct StateCache {
    states: HashMap<String, (SchemaState, Evaluation)>,
}

impl StateCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn get_or_eval(&mut self, env: &Environment, state: &SchemaState) -> Evaluation {
        let sig = state.signature();
        if let Some((_, e)) = self.states.get(&sig) {
            return *e;
        }
        let e = env.evaluate(state);
        self.states.insert(sig, (state.clone(), e));
        e
    }

    /// Applies a valid action, reusing a cached result state when present.
    pub fn step(
        &mut self,
        env: &Environment,
        state: &SchemaState,
        act: JoinAction,
    ) -> (String, SchemaState, Evaluation) {
        let sig = state.joined_signature(act);
        if let Some((s, e)) = self.states.get(&sig) {
            return (sig, s.clone(), *e);
        }
        let next = state.apply_join(env.pool(), act).expect("selected actions are valid");
        let e = env.evaluate(&next);
        self.states.insert(sig.clone(), (next.clone(), e));
        (sig, next, e)
    }
}
