use std::collections::HashMap;
use std::hash::Hash;

use super::EngineError;
use crate::catalog::{AttrId, FamilyId};
use crate::schema::{ConstraintPool, PhysicalTable, Row};
use crate::value::Value;

/// Full outer join of two tables.
///
/// Tables sharing a key family join on that key. Otherwise they join on the
/// declared equivalence class linking them: a row's class value is the first
/// non-NULL member of that class it carries, and both sides' members stay as
/// separate columns. Unmatched rows are NULL-padded; the key columns of the
/// result are the union of both inputs' keys.
pub fn merge_tables(a: &PhysicalTable, b: &PhysicalTable, pool: &ConstraintPool) -> Result<PhysicalTable, EngineError> {
    let shared: Vec<FamilyId> = a.key_cols.iter().copied().filter(|f| b.key_pos(*f).is_some()).collect();
    let pairs = if !shared.is_empty() {
        let (ka, kb): (Vec<usize>, Vec<usize>) =
            shared.iter().map(|f| (a.key_pos(*f).unwrap(), b.key_pos(*f).unwrap())).unzip();
        outer_pairs(
            a,
            b,
            |r| ka.iter().map(|&i| r.keys[i].as_deref()).collect::<Option<Vec<&str>>>(),
            |r| kb.iter().map(|&i| r.keys[i].as_deref()).collect::<Option<Vec<&str>>>(),
        )
    } else if let Some(class) = pool.link_class(&a.attrs, &b.attrs) {
        let members = pool.class_members(class);
        let pa = positions(&a.attrs, members);
        let pb = positions(&b.attrs, members);
        outer_pairs(a, b, |r| coalesce(r, &pa), |r| coalesce(r, &pb))
    } else {
        return Err(EngineError::NotJoinable(a.id, b.id));
    };

    let key_cols = union_sorted(&a.key_cols, &b.key_cols);
    let attrs = union_sorted(&a.attrs, &b.attrs);
    let key_src: Vec<(Option<usize>, Option<usize>)> =
        key_cols.iter().map(|f| (a.key_pos(*f), b.key_pos(*f))).collect();
    let attr_src: Vec<(Option<usize>, Option<usize>)> =
        attrs.iter().map(|x| (a.attr_pos(*x), b.attr_pos(*x))).collect();

    let mut rows: Vec<Row> = pairs
        .into_iter()
        .map(|(ra, rb)| Row {
            keys: key_src
                .iter()
                .map(|&(ia, ib)| {
                    let left = ra.zip(ia).and_then(|(r, i)| r.keys[i].clone());
                    left.or_else(|| rb.zip(ib).and_then(|(r, i)| r.keys[i].clone()))
                })
                .collect(),
            vals: attr_src
                .iter()
                .map(|&(ia, ib)| match (ia, ib) {
                    (Some(i), _) => ra.and_then(|r| r.vals[i].clone()),
                    (None, Some(i)) => rb.and_then(|r| r.vals[i].clone()),
                    (None, None) => unreachable!("attribute comes from one side"),
                })
                .collect(),
        })
        .collect();
    rows.sort();
    rows.dedup();
    debug_assert!(rows.iter().all(|r| r.vals.iter().any(Option::is_some)));
    Ok(PhysicalTable { id: a.id.min(b.id), attrs, key_cols, rows })
}

fn positions(attrs: &[AttrId], members: &[AttrId]) -> Vec<usize> {
    members.iter().filter_map(|m| attrs.binary_search(m).ok()).collect()
}

fn coalesce<'r>(row: &'r Row, positions: &[usize]) -> Option<&'r Value> {
    positions.iter().find_map(|&i| row.vals[i].as_ref())
}

fn union_sorted<T: Ord + Copy>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out: Vec<T> = a.iter().chain(b).copied().collect();
    out.sort();
    out.dedup();
    out
}

/// Pairs of matched rows plus NULL-padded leftovers, in a deterministic order.
fn outer_pairs<'t, K, FA, FB>(
    a: &'t PhysicalTable,
    b: &'t PhysicalTable,
    key_a: FA,
    key_b: FB,
) -> Vec<(Option<&'t Row>, Option<&'t Row>)>
where
    K: Hash + Eq,
    FA: Fn(&'t Row) -> Option<K>,
    FB: Fn(&'t Row) -> Option<K>,
{
    let mut index: HashMap<K, Vec<usize>> = HashMap::new();
    for (i, r) in b.rows.iter().enumerate() {
        if let Some(k) = key_b(r) {
            index.entry(k).or_default().push(i);
        }
    }
    let mut matched = vec![false; b.rows.len()];
    let mut out = Vec::with_capacity(a.rows.len().max(b.rows.len()));
    for ra in &a.rows {
        match key_a(ra).and_then(|k| index.get(&k)) {
            Some(hits) => {
                for &j in hits {
                    matched[j] = true;
                    out.push((Some(ra), Some(&b.rows[j])));
                }
            }
            None => out.push((Some(ra), None)),
        }
    }
    for (j, rb) in b.rows.iter().enumerate() {
        if !matched[j] {
            out.push((None, Some(rb)));
        }
    }
    out
}
