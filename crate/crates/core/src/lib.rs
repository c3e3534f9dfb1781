//! Relational schema design for multi-model data by reinforcement learning.
//!
//! Sources in JSON, N-Triples and CSV are ingested into one attribute
//! catalog and shredded into single-attribute tables. A learner then merges
//! tables through join actions, rewarded by the drop in weighted workload
//! cost measured on a deterministic in-memory engine.

pub mod catalog;
pub mod dataset;
pub mod ddl;
pub mod dsu;
pub mod engine;
pub mod ingest;
pub mod learner;
pub mod par;
pub mod reference;
pub mod schema;
pub mod shred;
pub mod synth;
pub mod value;
pub mod whatif;
pub mod workload;

use std::path::PathBuf;

use thiserror::Error;

pub use catalog::{AttrId, Catalog, CatalogEntry, EntityFact, FamilyId};
pub use dataset::{load_environment, Dataset};
pub use ingest::{IngestError, Model, SourceManifest};
pub use learner::{Environment, LearnError, LearnParams, RunResult};
pub use par::Execution;
pub use schema::{ConstraintError, ConstraintPool, JoinAction, SchemaError, SchemaState};
pub use shred::ShredError;
pub use value::{Value, ValueKind};
pub use whatif::WhatIfError;
pub use workload::{CostMode, CostReport, Workload, WorkloadError};

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Shred(#[from] ShredError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    WhatIf(#[from] WhatIfError),
}
