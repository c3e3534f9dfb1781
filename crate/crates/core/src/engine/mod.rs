//! Deterministic in-memory relational evaluator.
//!
//! Three jobs: physically merge two tables when a join action is applied,
//! execute join plans with row-count cost accounting, and size a schema with
//! a fixed-width storage formula.

mod exec;
mod merge;
mod storage;

use thiserror::Error;

use crate::schema::TableId;

pub use exec::{execute, CostUnits, ResultSet};
pub use merge::merge_tables;
pub use storage::{storage, table_storage, StorageBytes, TABLE_HEADER_BYTES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("tables {0} and {1} share no key family and no declared equivalence")]
    NotJoinable(TableId, TableId),
    #[error("plan does not match schema state: {0}")]
    PlanMismatch(String),
}
