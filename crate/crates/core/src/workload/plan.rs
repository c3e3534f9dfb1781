use std::collections::{BTreeMap, BTreeSet};

use super::{Predicate, Query, WorkloadError};
use crate::catalog::{AttrId, FamilyId};
use crate::schema::{ConstraintPool, PhysicalTable, SchemaState, TableId};

/// Base-table scan with pushed-down predicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanNode {
    pub table: TableId,
    /// Required attributes hosted by this table; rows with a NULL in any of
    /// them are dropped.
    pub attrs: Vec<AttrId>,
    /// Key columns carried up for joins.
    pub families: Vec<FamilyId>,
    pub predicates: Vec<Predicate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlanRef {
    Scan(usize),
    Join(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JoinCond {
    /// Equal entity keys of one family.
    Family(FamilyId),
    /// Equal values of two declared-equivalent attributes.
    Link(AttrId, AttrId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinStep {
    pub left: PlanRef,
    pub right: PlanRef,
    pub on: Vec<JoinCond>,
    pub estimate: u64,
}

/// Scans, then joins in execution order; the last join is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinPlan {
    pub scans: Vec<ScanNode>,
    pub joins: Vec<JoinStep>,
    pub project: Vec<AttrId>,
}

struct Component {
    node: PlanRef,
    attrs: Vec<AttrId>,
    families: BTreeSet<FamilyId>,
    card: u64,
}

/// Plans `q` against `state`.
///
/// The query touches its referenced attributes plus the equivalence links
/// joining their key families (fixed by the pool, independent of the state).
/// Host tables are joined greedily, smallest estimated output first: a key
/// join estimates `min` of its inputs, a value join their product.
pub fn plan(q: &Query, state: &SchemaState, pool: &ConstraintPool) -> Result<JoinPlan, WorkloadError> {
    let required = q.required_attrs(pool).ok_or_else(|| WorkloadError::Unanswerable { query: q.name.clone() })?;
    let mut hosted: BTreeMap<TableId, Vec<AttrId>> = BTreeMap::new();
    for &a in &required {
        let t = state.table_of(a).ok_or_else(|| WorkloadError::Invalid {
            query: q.name.clone(),
            message: format!("attribute {a} is not in the schema"),
        })?;
        hosted.entry(t).or_default().push(a);
    }

    let mut scans = Vec::with_capacity(hosted.len());
    let mut comps = Vec::with_capacity(hosted.len());
    for (i, (table, attrs)) in hosted.into_iter().enumerate() {
        let families: BTreeSet<FamilyId> = attrs.iter().map(|&a| pool.family_of(a)).collect();
        let predicates: Vec<Predicate> = q.predicates.iter().filter(|p| attrs.contains(&p.attr)).cloned().collect();
        let t = state.table(table).expect("host table exists");
        let card = filtered_cardinality(t, &attrs, &predicates);
        scans.push(ScanNode { table, attrs: attrs.clone(), families: families.iter().copied().collect(), predicates });
        comps.push(Component { node: PlanRef::Scan(i), attrs, families, card });
    }

    let mut joins = Vec::new();
    while comps.len() > 1 {
        let mut best: Option<(u64, usize, usize, Vec<JoinCond>)> = None;
        for i in 0..comps.len() {
            for j in i + 1..comps.len() {
                let on = conditions(pool, &comps[i], &comps[j]);
                if on.is_empty() {
                    continue;
                }
                let key_join = on.iter().any(|c| matches!(c, JoinCond::Family(_)));
                let est = if key_join {
                    comps[i].card.min(comps[j].card)
                } else {
                    comps[i].card.saturating_mul(comps[j].card)
                };
                if best.as_ref().is_none_or(|b| est < b.0) {
                    best = Some((est, i, j, on));
                }
            }
        }
        let Some((estimate, i, j, on)) = best else {
            return Err(WorkloadError::Unanswerable { query: q.name.clone() });
        };
        let right = comps.remove(j);
        let left = &mut comps[i];
        joins.push(JoinStep { left: left.node, right: right.node, on, estimate });
        left.node = PlanRef::Join(joins.len() - 1);
        left.attrs.extend(right.attrs);
        left.families.extend(right.families);
        left.card = estimate;
    }
    Ok(JoinPlan { scans, joins, project: q.project.clone() })
}

fn conditions(pool: &ConstraintPool, a: &Component, b: &Component) -> Vec<JoinCond> {
    let mut on: Vec<JoinCond> = a.families.intersection(&b.families).map(|&f| JoinCond::Family(f)).collect();
    for &x in &a.attrs {
        for &y in &b.attrs {
            if pool.equivalent(x, y) {
                on.push(JoinCond::Link(x, y));
            }
        }
    }
    on
}

fn filtered_cardinality(t: &PhysicalTable, attrs: &[AttrId], predicates: &[Predicate]) -> u64 {
    let idx: Vec<usize> = attrs.iter().filter_map(|&a| t.attr_pos(a)).collect();
    let preds: Vec<(usize, &Predicate)> =
        predicates.iter().filter_map(|p| t.attr_pos(p.attr).map(|i| (i, p))).collect();
    t.rows
        .iter()
        .filter(|r| idx.iter().all(|&i| r.vals[i].is_some()))
        .filter(|r| preds.iter().all(|(i, p)| r.vals[*i].as_ref().is_some_and(|v| p.matches(v))))
        .count() as u64
}
