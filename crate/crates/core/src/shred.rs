//! Fully decomposed storage: one `(key, value)` table per attribute.

use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::catalog::{AttrId, Catalog, EntityFact, FamilyId};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BinaryTable {
    pub attr: AttrId,
    pub key_family: String,
    #[serde(skip)]
    pub family: FamilyId,
    /// Sorted by `(entity_key, value)`, no duplicates.
    pub rows: Vec<(String, Value)>,
}

#[derive(Debug, Error)]
pub enum ShredError {
    #[error("fact for entity `{key}` references attribute {attr}, which is not in the catalog")]
    UnknownAttribute { key: String, attr: AttrId },
    #[error("fact for entity `{key}` on attribute {attr} has kind {found}, catalog says {expected}")]
    KindMismatch { key: String, attr: AttrId, found: crate::ValueKind, expected: crate::ValueKind },
}

pub fn shred(catalog: &Catalog, facts: &[EntityFact]) -> Result<Vec<BinaryTable>, ShredError> {
    let mut tables: Vec<BinaryTable> = catalog
        .entries()
        .iter()
        .map(|e| BinaryTable { attr: e.attr, key_family: e.entity_label.clone(), family: e.family, rows: Vec::new() })
        .collect();
    for f in facts {
        let Some(entry) = catalog.get(f.attr) else {
            return Err(ShredError::UnknownAttribute { key: f.entity_key.clone(), attr: f.attr });
        };
        if f.value.kind() != entry.value_kind {
            return Err(ShredError::KindMismatch {
                key: f.entity_key.clone(),
                attr: f.attr,
                found: f.value.kind(),
                expected: entry.value_kind,
            });
        }
        tables[f.attr.index()].rows.push((f.entity_key.clone(), f.value.clone()));
    }
    for t in &mut tables {
        t.rows.sort();
        t.rows.dedup();
    }
    Ok(tables)
}

/// Inverse of [`shred`] up to duplicate facts; output sorted by
/// `(entity_key, attr, value)`.
pub fn reconstruct(tables: &[BinaryTable]) -> Vec<EntityFact> {
    let mut facts: Vec<EntityFact> = tables
        .iter()
        .flat_map(|t| {
            t.rows.iter().map(move |(k, v)| EntityFact { entity_key: k.clone(), attr: t.attr, value: v.clone() })
        })
        .collect();
    facts.sort();
    facts
}

/// File name used by [`dump_csv`]: `t<attr>_<name>.csv`.
pub fn dump_file_name(catalog: &Catalog, attr: AttrId) -> String {
    format!("t{}_{}.csv", attr.0, crate::ddl::sanitize_ident(&catalog.entry(attr).name))
}

/// Writes one `key,value` CSV per table into `dir`.
pub fn dump_csv(catalog: &Catalog, tables: &[BinaryTable], dir: &Path) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::with_capacity(tables.len());
    for t in tables {
        let path = dir.join(dump_file_name(catalog, t.attr));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["key", "value"])?;
        for (k, v) in &t.rows {
            w.write_record([k.as_str(), &v.to_string()])?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
