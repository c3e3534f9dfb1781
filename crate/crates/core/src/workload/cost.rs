use std::time::Instant;

use serde::Serialize;

use super::{plan, Query, Workload, WorkloadError};
use crate::engine::{self, CostUnits};
use crate::par::{self, Execution};
use crate::schema::{ConstraintPool, SchemaState};

/// Unanswerable queries cost this many times the initial schema's workload cost.
pub const PENALTY_FACTOR: u64 = 10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    /// Deterministic row counts.
    #[default]
    Units,
    /// Elapsed nanoseconds of each query; not reproducible.
    WallClock,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CostOptions {
    /// Per-execution cost charged for an unanswerable query. `None` makes
    /// such queries an error.
    pub penalty: Option<u64>,
    pub mode: CostMode,
    pub exec: Execution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryCost {
    pub name: String,
    pub weight: u64,
    pub answerable: bool,
    pub rows_scanned: u64,
    pub rows_joined: u64,
    /// Cost of one execution (the penalty when unanswerable).
    pub cost: u64,
    pub weighted_cost: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CostReport {
    pub queries: Vec<QueryCost>,
    pub total: u64,
    pub storage_bytes: u64,
}

pub fn workload_cost(w: &Workload, state: &SchemaState, pool: &ConstraintPool) -> Result<CostReport, WorkloadError> {
    workload_cost_with(w, state, pool, CostOptions::default())
}

/// Weighted workload cost plus storage. Queries are costed independently
/// (in parallel when enabled) and folded in query order.
pub fn workload_cost_with(
    w: &Workload,
    state: &SchemaState,
    pool: &ConstraintPool,
    opts: CostOptions,
) -> Result<CostReport, WorkloadError> {
    let per_query = par::map(opts.exec, &w.queries, |q| query_cost(q, state, pool, opts));
    let mut queries = Vec::with_capacity(per_query.len());
    let mut total = 0u64;
    for qc in per_query {
        let qc = qc?;
        total += qc.weighted_cost;
        queries.push(qc);
    }
    Ok(CostReport { queries, total, storage_bytes: engine::storage(state).0 })
}

fn query_cost(
    q: &Query,
    state: &SchemaState,
    pool: &ConstraintPool,
    opts: CostOptions,
) -> Result<QueryCost, WorkloadError> {
    let p = match plan(q, state, pool) {
        Ok(p) => p,
        Err(WorkloadError::Unanswerable { query }) => {
            let Some(penalty) = opts.penalty else {
                return Err(WorkloadError::Unanswerable { query });
            };
            return Ok(QueryCost {
                name: q.name.clone(),
                weight: q.weight,
                answerable: false,
                rows_scanned: 0,
                rows_joined: 0,
                cost: penalty,
                weighted_cost: penalty * q.weight,
            });
        }
        Err(e) => return Err(e),
    };
    let started = Instant::now();
    let (_, units) =
        engine::execute(&p, state).map_err(|source| WorkloadError::Engine { query: q.name.clone(), source })?;
    let cost = match opts.mode {
        CostMode::Units => units.total,
        CostMode::WallClock => (started.elapsed().as_nanos() as u64).max(1),
    };
    let CostUnits { rows_scanned, rows_joined, .. } = units;
    Ok(QueryCost {
        name: q.name.clone(),
        weight: q.weight,
        answerable: true,
        rows_scanned,
        rows_joined,
        cost,
        weighted_cost: cost * q.weight,
    })
}

/// `PENALTY_FACTOR` times the weighted cost of the answerable queries on
/// `initial` (at least 1).
pub fn unanswerable_penalty(
    w: &Workload,
    initial: &SchemaState,
    pool: &ConstraintPool,
    opts: CostOptions,
) -> Result<u64, WorkloadError> {
    let report = workload_cost_with(w, initial, pool, CostOptions { penalty: Some(0), ..opts })?;
    Ok(PENALTY_FACTOR * report.total.max(1))
}
