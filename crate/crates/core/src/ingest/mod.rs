//! Multi-model ingestion: JSON documents, N-Triples and CSV into one
//! numbered fact stream.

mod json;
mod ntriples;
mod relational;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{AttrId, Catalog, EntityFact};
use crate::par::{self, Execution};
use crate::value::{Value, ValueKind};

pub use json::ingest_json;
pub use ntriples::ingest_rdf;
pub use relational::ingest_relational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Model {
    Json,
    Rdf,
    Relational,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Json => "JSON",
            Model::Rdf => "RDF",
            Model::Relational => "RELATIONAL",
        })
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: parse error: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("sources produced no facts")]
    Empty,
}

impl IngestError {
    pub(crate) fn invalid(path: &Path, message: impl Into<String>) -> Self {
        IngestError::Invalid { path: path.to_owned(), message: message.into() }
    }

    pub(crate) fn parse(path: &Path, line: usize, column: usize, message: impl Into<String>) -> Self {
        IngestError::Parse { path: path.to_owned(), line, column, message: message.into() }
    }
}

pub(crate) fn read_source(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|source| IngestError::Io { path: path.to_owned(), source })
}

/// A fact before attribute numbering and type sniffing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFact {
    pub entity_key: String,
    pub name: String,
    pub lexical: String,
}

impl RawFact {
    pub fn new(entity_key: impl Into<String>, name: impl Into<String>, lexical: impl Into<String>) -> Self {
        RawFact { entity_key: entity_key.into(), name: name.into(), lexical: lexical.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub path: PathBuf,
    pub model: Model,
    pub entity_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_field: Option<String>,
}

impl SourceSpec {
    pub fn key_field(&self) -> &str {
        self.key_field.as_deref().unwrap_or("id")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceManifest {
    pub sources: Vec<SourceSpec>,
}

impl SourceManifest {
    /// Parses a manifest, resolving relative source paths against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, IngestError> {
        let mut manifest: SourceManifest =
            serde_json::from_str(text).map_err(|e| IngestError::Manifest(e.to_string()))?;
        for source in &mut manifest.sources {
            if source.path.is_relative() {
                source.path = base_dir.join(&source.path);
            }
        }
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = read_source(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.sources.is_empty() {
            return Err(IngestError::Manifest("at least one source is required".into()));
        }
        let mut seen = HashSet::new();
        for s in &self.sources {
            if s.entity_label.is_empty() {
                return Err(IngestError::Manifest("entity_label must be nonempty".into()));
            }
            if !seen.insert(s.entity_label.as_str()) {
                return Err(IngestError::Manifest(format!("duplicate entity_label `{}`", s.entity_label)));
            }
        }
        Ok(())
    }
}

fn ingest_source(spec: &SourceSpec) -> Result<Vec<RawFact>, IngestError> {
    match spec.model {
        Model::Json => ingest_json(&spec.path, spec.key_field()),
        Model::Rdf => ingest_rdf(&spec.path),
        Model::Relational => ingest_relational(&spec.path),
    }
}

/// Ingests every source and assigns attribute ids in manifest order, then
/// first-appearance order within each source.
pub fn build_catalog(manifest: &SourceManifest) -> Result<(Catalog, Vec<EntityFact>), IngestError> {
    build_catalog_with(manifest, Execution::default())
}

pub fn build_catalog_with(
    manifest: &SourceManifest,
    exec: Execution,
) -> Result<(Catalog, Vec<EntityFact>), IngestError> {
    manifest.validate()?;
    let parsed = par::map(exec, &manifest.sources, ingest_source);
    let mut sources = Vec::with_capacity(parsed.len());
    for p in parsed {
        sources.push(p?);
    }
    assemble(manifest.sources.iter().map(|s| (s.model, s.entity_label.as_str())).zip(sources))
}

/// Deterministic fold from per-source raw facts to a catalog and typed facts.
pub fn assemble<'a>(
    sources: impl IntoIterator<Item = ((Model, &'a str), Vec<RawFact>)>,
) -> Result<(Catalog, Vec<EntityFact>), IngestError> {
    // pass 1: numbering and lexical collection
    let mut names: Vec<(String, Model, String)> = Vec::new();
    let mut lexicals: Vec<Vec<String>> = Vec::new();
    let mut staged: Vec<(String, AttrId, usize)> = Vec::new();
    for ((model, label), facts) in sources {
        let mut local: HashMap<String, AttrId> = HashMap::new();
        for fact in facts {
            let attr = *local.entry(fact.name.clone()).or_insert_with(|| {
                names.push((fact.name.clone(), model, label.to_owned()));
                lexicals.push(Vec::new());
                AttrId((names.len() - 1) as u32)
            });
            let slot = lexicals[attr.index()].len();
            lexicals[attr.index()].push(fact.lexical);
            staged.push((fact.entity_key, attr, slot));
        }
    }
    if staged.is_empty() {
        return Err(IngestError::Empty);
    }

    // pass 2: sniff then convert
    let kinds: Vec<ValueKind> = lexicals.iter().map(|ls| ValueKind::sniff(ls.iter().map(String::as_str))).collect();
    let facts = staged
        .into_iter()
        .map(|(entity_key, attr, slot)| {
            let lexical = &lexicals[attr.index()][slot];
            let value =
                Value::parse(lexical, kinds[attr.index()]).expect("sniffed kind accepts every observed lexical form");
            EntityFact { entity_key, attr, value }
        })
        .collect();
    let catalog = Catalog::from_entries(
        names.into_iter().zip(kinds).map(|((name, model, label), kind)| (name, model, label, kind)),
    );
    Ok((catalog, facts))
}
