//! Loading pipeline from a source manifest to a learning environment.

use std::path::Path;
use std::sync::Arc;

use crate::catalog::Catalog;
use crate::ingest::{build_catalog_with, SourceManifest};
use crate::learner::Environment;
use crate::par::Execution;
use crate::schema::{init_state, ConstraintPool, SchemaState};
use crate::shred::{shred, BinaryTable};
use crate::workload::{parse_workload, CostMode, Workload};
use crate::Error;

/// A shredded dataset and its initial one-table-per-attribute schema.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: SourceManifest,
    pub catalog: Arc<Catalog>,
    pub fact_count: usize,
    pub tables: Vec<BinaryTable>,
    pub initial: SchemaState,
}

impl Dataset {
    pub fn load(manifest: &Path) -> Result<Self, Error> {
        Self::from_manifest(SourceManifest::load(manifest)?, Execution::default())
    }

    pub fn from_manifest(manifest: SourceManifest, exec: Execution) -> Result<Self, Error> {
        let (catalog, facts) = build_catalog_with(&manifest, exec)?;
        let tables = shred(&catalog, &facts)?;
        let initial = init_state(&tables);
        Ok(Dataset { manifest, catalog: Arc::new(catalog), fact_count: facts.len(), tables, initial })
    }

    pub fn constraints(&self, text: &str) -> Result<ConstraintPool, Error> {
        Ok(ConstraintPool::parse(text, &self.catalog)?)
    }

    pub fn workload(&self, text: &str) -> Result<Workload, Error> {
        Ok(parse_workload(text, &self.catalog)?)
    }

    pub fn environment(
        &self,
        pool: ConstraintPool,
        workload: Workload,
        mode: CostMode,
        exec: Execution,
    ) -> Result<Environment, Error> {
        Ok(Environment::with_options(self.catalog.clone(), pool, workload, self.initial.clone(), mode, exec)?)
    }
}

/// Reads a manifest, constraint file and workload file into an environment.
pub fn load_environment(manifest: &Path, constraints: &Path, workload: &Path) -> Result<(Dataset, Environment), Error> {
    let ds = Dataset::load(manifest)?;
    let pool = ds.constraints(&read(constraints)?)?;
    let w = ds.workload(&read(workload)?)?;
    let env = ds.environment(pool, w, CostMode::Units, Execution::default())?;
    Ok((ds, env))
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })
}
