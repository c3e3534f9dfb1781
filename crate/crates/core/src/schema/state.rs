use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ConstraintPool;
use crate::catalog::{AttrId, FamilyId};
use crate::engine;
use crate::shred::BinaryTable;
use crate::value::Value;

/// Physical table id: the smallest attribute id the table hosts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TableId(pub u32);

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// One tuple: a slot per key column, then a slot per attribute column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Row {
    pub keys: Vec<Option<String>>,
    pub vals: Vec<Option<Value>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhysicalTable {
    pub id: TableId,
    /// Ascending.
    pub attrs: Vec<AttrId>,
    /// Ascending.
    pub key_cols: Vec<FamilyId>,
    /// Canonical: sorted, deduplicated, never all-NULL on `attrs`.
    pub rows: Vec<Row>,
}

impl PhysicalTable {
    pub fn attr_pos(&self, attr: AttrId) -> Option<usize> {
        self.attrs.binary_search(&attr).ok()
    }

    pub fn key_pos(&self, family: FamilyId) -> Option<usize> {
        self.key_cols.binary_search(&family).ok()
    }

    pub fn shares_family(&self, other: &PhysicalTable) -> bool {
        self.key_cols.iter().any(|f| other.key_pos(*f).is_some())
    }
}

/// An unordered attribute pair; joining it merges the two host tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JoinAction {
    pub left: AttrId,
    pub right: AttrId,
}

impl JoinAction {
    pub fn new(left: AttrId, right: AttrId) -> Self {
        JoinAction { left, right }
    }
}

impl fmt::Display for JoinAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⋈ {}", self.left, self.right)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("join {0} is not valid in this state")]
    RejectedAction(JoinAction),
    #[error("attribute {0} is not in the schema")]
    UnknownAttribute(AttrId),
    #[error("malformed partition `{0}`")]
    MalformedPartition(String),
}

/// Immutable schema value; tables are shared between derived states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaState {
    tables: Vec<Arc<PhysicalTable>>,
    attr_location: Vec<TableId>,
}

/// Initial DSM state: one single-attribute table per binary table.
pub fn init_state(tables: &[BinaryTable]) -> SchemaState {
    let mut out: Vec<Arc<PhysicalTable>> = tables
        .iter()
        .map(|t| {
            Arc::new(PhysicalTable {
                id: TableId(t.attr.0),
                attrs: vec![t.attr],
                key_cols: vec![t.family],
                rows: t
                    .rows
                    .iter()
                    .map(|(k, v)| Row { keys: vec![Some(k.clone())], vals: vec![Some(v.clone())] })
                    .collect(),
            })
        })
        .collect();
    out.sort_by_key(|t| t.id);
    SchemaState::from_tables(out)
}

impl SchemaState {
    pub fn from_tables(mut tables: Vec<Arc<PhysicalTable>>) -> Self {
        tables.sort_by_key(|t| t.id);
        let n = tables.iter().map(|t| t.attrs.len()).sum();
        let mut attr_location = vec![TableId(u32::MAX); n];
        for t in &tables {
            for a in &t.attrs {
                attr_location[a.index()] = t.id;
            }
        }
        debug_assert!(attr_location.iter().all(|t| t.0 != u32::MAX), "attribute ids must be dense");
        SchemaState { tables, attr_location }
    }

    pub fn tables(&self) -> &[Arc<PhysicalTable>] {
        &self.tables
    }

    pub fn attr_count(&self) -> usize {
        self.attr_location.len()
    }

    pub fn table(&self, id: TableId) -> Option<&PhysicalTable> {
        self.tables.binary_search_by_key(&id, |t| t.id).ok().map(|i| self.tables[i].as_ref())
    }

    pub fn table_of(&self, attr: AttrId) -> Option<TableId> {
        self.attr_location.get(attr.index()).copied()
    }

    fn host(&self, attr: AttrId) -> &PhysicalTable {
        self.table(self.attr_location[attr.index()]).expect("attr_location points at a live table")
    }

    /// Attribute groups, one per table, in table order.
    pub fn partition(&self) -> Vec<Vec<AttrId>> {
        self.tables.iter().map(|t| t.attrs.clone()).collect()
    }

    /// Canonical text form such as `{0,3}|{1}|{2,5,98}`.
    pub fn signature(&self) -> String {
        format_partition(self.tables.iter().map(|t| t.attrs.as_slice()))
    }

    /// Signature of the state `apply_join` would produce, without merging.
    pub fn joined_signature(&self, act: JoinAction) -> String {
        let (ta, tb) = (self.attr_location[act.left.index()], self.attr_location[act.right.index()]);
        let mut merged: Vec<AttrId> = Vec::new();
        let mut groups: Vec<&[AttrId]> = Vec::with_capacity(self.tables.len());
        for t in &self.tables {
            if t.id == ta || t.id == tb {
                merged.extend(&t.attrs);
            } else {
                groups.push(&t.attrs);
            }
        }
        merged.sort();
        groups.push(&merged);
        groups.sort_by_key(|g| g[0]);
        format_partition(groups.into_iter())
    }

    /// Merges the host tables of `act`. The input state is left untouched.
    pub fn apply_join(&self, pool: &ConstraintPool, act: JoinAction) -> Result<SchemaState, SchemaError> {
        if !joinable(pool, self, act.left, act.right) {
            return Err(SchemaError::RejectedAction(act));
        }
        let (a, b) = (self.host(act.left), self.host(act.right));
        let merged = engine::merge_tables(a, b, pool).map_err(|_| SchemaError::RejectedAction(act))?;
        let tables = self
            .tables
            .iter()
            .filter(|t| t.id != a.id && t.id != b.id)
            .cloned()
            .chain(std::iter::once(Arc::new(merged)))
            .collect();
        Ok(SchemaState::from_tables(tables))
    }
}

impl fmt::Display for SchemaState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.signature())
    }
}

fn format_partition<'a>(groups: impl Iterator<Item = &'a [AttrId]>) -> String {
    let mut out = String::new();
    for (i, g) in groups.enumerate() {
        if i > 0 {
            out.push('|');
        }
        out.push('{');
        for (j, a) in g.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&a.0.to_string());
        }
        out.push('}');
    }
    out
}

/// Parses `{0,3}|{1}|{2}` or the brace-less `0,3|1|2` into groups. Does not
/// check that the groups form a partition.
pub fn parse_partition(text: &str) -> Result<Vec<Vec<AttrId>>, SchemaError> {
    let bad = || SchemaError::MalformedPartition(text.to_owned());
    let mut groups = Vec::new();
    for part in text.trim().split('|') {
        let part = part.trim();
        let inner = part.strip_prefix('{').and_then(|p| p.strip_suffix('}')).unwrap_or(part);
        let mut group = Vec::new();
        for id in inner.split(',') {
            group.push(AttrId(id.trim().parse().map_err(|_| bad())?));
        }
        groups.push(group);
    }
    Ok(groups)
}

fn tables_joinable(pool: &ConstraintPool, a: &PhysicalTable, b: &PhysicalTable) -> bool {
    a.id != b.id && (a.shares_family(b) || pool.link_class(&a.attrs, &b.attrs).is_some())
}

/// Whether joining `a` and `b` is allowed: different tables that share a key
/// family or are linked by a declared equivalence.
pub fn joinable(pool: &ConstraintPool, state: &SchemaState, a: AttrId, b: AttrId) -> bool {
    match (state.table_of(a), state.table_of(b)) {
        (Some(ta), Some(tb)) if ta != tb => tables_joinable(pool, state.host(a), state.host(b)),
        _ => false,
    }
}

/// Every joinable pair `(a, b)` with `a < b`, in lexicographic order.
pub fn valid_actions(pool: &ConstraintPool, state: &SchemaState) -> Vec<JoinAction> {
    let tables = state.tables();
    let mut out = Vec::new();
    for (i, ta) in tables.iter().enumerate() {
        for tb in &tables[i + 1..] {
            if !tables_joinable(pool, ta, tb) {
                continue;
            }
            for &a in &ta.attrs {
                for &b in &tb.attrs {
                    out.push(if a < b { JoinAction::new(a, b) } else { JoinAction::new(b, a) });
                }
            }
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;
    use crate::ingest::Model;
    use crate::value::ValueKind;

    fn bt(attr: u32, family: u16, rows: &[(&str, &str)]) -> BinaryTable {
        BinaryTable {
            attr: AttrId(attr),
            key_family: format!("f{family}"),
            family: FamilyId(family),
            rows: rows.iter().map(|(k, v)| (k.to_string(), Value::from(*v))).collect(),
        }
    }

    /// attrs 0,1 in family 0 (json); 2,3 in family 1 (rdf); title = 1 and 2.
    fn setup() -> (Catalog, SchemaState) {
        let cat = Catalog::from_entries([
            ("name".to_string(), Model::Json, "j".to_string(), ValueKind::Text),
            ("title".to_string(), Model::Json, "j".to_string(), ValueKind::Text),
            ("title".to_string(), Model::Rdf, "r".to_string(), ValueKind::Text),
            ("year".to_string(), Model::Rdf, "r".to_string(), ValueKind::Text),
        ]);
        let state = init_state(&[
            bt(0, 0, &[("p1", "Ann"), ("p2", "Bo")]),
            bt(1, 0, &[("p1", "DB"), ("p3", "ML")]),
            bt(2, 1, &[("w1", "DB")]),
            bt(3, 1, &[("w1", "2001")]),
        ]);
        (cat, state)
    }

    #[test]
    fn initial_state_has_one_table_per_attribute() {
        let (_, s) = setup();
        assert_eq!(s.tables().len(), 4);
        assert_eq!(s.signature(), "{0}|{1}|{2}|{3}");
        assert_eq!(s.table(TableId(2)).unwrap().key_cols, vec![FamilyId(1)]);
    }

    #[test]
    fn joinability_follows_families_and_constraints() {
        let (cat, s) = setup();
        let none = ConstraintPool::empty(&cat);
        let pool = ConstraintPool::parse("1 = 2", &cat).unwrap();
        assert!(joinable(&none, &s, AttrId(0), AttrId(1)));
        assert!(!joinable(&none, &s, AttrId(1), AttrId(2)));
        assert!(joinable(&pool, &s, AttrId(1), AttrId(2)));
        let merged = s.apply_join(&pool, JoinAction::new(AttrId(0), AttrId(1))).unwrap();
        assert!(!joinable(&pool, &merged, AttrId(0), AttrId(1)));
        // the merged json table now reaches rdf through title
        assert!(!joinable(&pool, &merged, AttrId(0), AttrId(3)));
        assert!(joinable(&pool, &merged, AttrId(0), AttrId(2)));
    }

    #[test]
    fn valid_actions_and_constraint_monotonicity() {
        let (cat, s) = setup();
        let none = valid_actions(&ConstraintPool::empty(&cat), &s);
        let with = valid_actions(&ConstraintPool::parse("1 = 2", &cat).unwrap(), &s);
        assert_eq!(none, vec![JoinAction::new(AttrId(0), AttrId(1)), JoinAction::new(AttrId(2), AttrId(3))]);
        assert!(none.iter().all(|a| with.contains(a)));
        assert!(with.contains(&JoinAction::new(AttrId(1), AttrId(2))));
    }

    #[test]
    fn apply_join_shrinks_table_count_and_rejects_repeats() {
        let (cat, s) = setup();
        let pool = ConstraintPool::empty(&cat);
        let act = JoinAction::new(AttrId(0), AttrId(1));
        let next = s.apply_join(&pool, act).unwrap();
        assert_eq!(next.tables().len(), s.tables().len() - 1);
        assert_eq!(next.signature(), s.joined_signature(act));
        assert_eq!(next.signature(), "{0,1}|{2}|{3}");
        assert_eq!(s.signature(), "{0}|{1}|{2}|{3}");
        assert_eq!(next.apply_join(&pool, act), Err(SchemaError::RejectedAction(act)));
        assert!(s.apply_join(&pool, JoinAction::new(AttrId(1), AttrId(2))).is_err());
    }

    #[test]
    fn fully_merged_state_has_no_actions() {
        let (cat, s) = setup();
        let pool = ConstraintPool::parse("1 = 2", &cat).unwrap();
        let mut cur = s;
        while let Some(&a) = valid_actions(&pool, &cur).first() {
            cur = cur.apply_join(&pool, a).unwrap();
        }
        assert_eq!(cur.signature(), "{0,1,2,3}");
    }

    #[test]
    fn partition_text_round_trips() {
        let groups = parse_partition("{0,3}|{1}|{2,5,98}").unwrap();
        assert_eq!(format_partition(groups.iter().map(Vec::as_slice)), "{0,3}|{1}|{2,5,98}");
        assert_eq!(
            parse_partition("0,3|1|2").unwrap(),
            vec![vec![AttrId(0), AttrId(3)], vec![AttrId(1)], vec![AttrId(2)]]
        );
        assert!(parse_partition("0,x").is_err());
    }
}
