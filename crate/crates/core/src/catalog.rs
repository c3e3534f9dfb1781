//! Global attribute numbering across every source model.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ingest::Model;
use crate::value::{Value, ValueKind};

/// Dense attribute identifier, `0..N` in catalog order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttrId(pub u32);

impl AttrId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AttrId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Key family: the surrogate-key space of one source (its entity label).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FamilyId(pub u16);

impl FamilyId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub attr: AttrId,
    pub name: String,
    pub source_model: Model,
    pub entity_label: String,
    pub value_kind: ValueKind,
    #[serde(skip)]
    pub family: FamilyId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Catalog {
    attributes: Vec<CatalogEntry>,
    families: Vec<String>,
}

impl Catalog {
    /// Builds a catalog from entries already numbered `0..N`.
    ///
    /// Families are numbered in first-appearance order of their labels.
    pub fn from_entries(entries: impl IntoIterator<Item = (String, Model, String, ValueKind)>) -> Catalog {
        let mut families: Vec<String> = Vec::new();
        let mut attributes = Vec::new();
        for (i, (name, model, label, kind)) in entries.into_iter().enumerate() {
            let family = match families.iter().position(|f| *f == label) {
                Some(p) => p,
                None => {
                    families.push(label.clone());
                    families.len() - 1
                }
            };
            attributes.push(CatalogEntry {
                attr: AttrId(i as u32),
                name,
                source_model: model,
                entity_label: label,
                value_kind: kind,
                family: FamilyId(family as u16),
            });
        }
        Catalog { attributes, families }
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.attributes
    }

    pub fn get(&self, attr: AttrId) -> Option<&CatalogEntry> {
        self.attributes.get(attr.index())
    }

    pub fn entry(&self, attr: AttrId) -> &CatalogEntry {
        &self.attributes[attr.index()]
    }

    pub fn attr_ids(&self) -> impl Iterator<Item = AttrId> + '_ {
        self.attributes.iter().map(|e| e.attr)
    }

    pub fn family_of(&self, attr: AttrId) -> FamilyId {
        self.attributes[attr.index()].family
    }

    pub fn family_count(&self) -> usize {
        self.families.len()
    }

    pub fn family_name(&self, family: FamilyId) -> &str {
        &self.families[family.index()]
    }

    pub fn families(&self) -> &[String] {
        &self.families
    }

    /// Finds an attribute by entity label and attribute name.
    pub fn lookup(&self, entity_label: &str, name: &str) -> Option<AttrId> {
        self.attributes.iter().find(|e| e.entity_label == entity_label && e.name == name).map(|e| e.attr)
    }
}

/// One `(entity, attribute, value)` fact after numbering and type sniffing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EntityFact {
    pub entity_key: String,
    pub attr: AttrId,
    pub value: Value,
}

impl EntityFact {
    pub fn new(entity_key: impl Into<String>, attr: AttrId, value: impl Into<Value>) -> Self {
        EntityFact { entity_key: entity_key.into(), attr, value: value.into() }
    }
}
