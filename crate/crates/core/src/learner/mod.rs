//! Double Q-table learning over join actions, and the exhaustive oracle
//! used to check it on small instances.

mod env;
mod oracle;
mod qtables;
mod train;

use thiserror::Error;

pub use env::{Environment, Evaluation, StateCache};
pub use oracle::{brute_force_optimum, brute_force_optimum_with, OracleResult, DEFAULT_ORACLE_BOUND};
pub use qtables::{select_action, select_from, td_update, QTables};
pub use train::{
    note_seen, rank_seen, run_episode, train, train_seeds, train_with, EpisodeRecord, EpisodeSummary, LearnParams,
    RunResult, SchemaScore, SeenEntry, SortKey, StepRecord,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LearnError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no valid join action remains")]
    Terminal,
    #[error("exhaustive search is limited to {bound} attributes, instance has {attrs}")]
    OracleBound { attrs: usize, bound: usize },
}
