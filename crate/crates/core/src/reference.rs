//! Nested-loop query evaluator over raw facts.
//!
//! Shares no code with the engine or the planner. It picks one entity per key
//! family, one value per attribute, keeps combinations where equivalent
//! attributes agree and predicates hold, and projects. Exponential in the
//! number of families; meant for cross-checking on small inputs.

use std::collections::{BTreeMap, BTreeSet};

use crate::catalog::{AttrId, Catalog, EntityFact, FamilyId};
use crate::schema::ConstraintPool;
use crate::value::Value;
use crate::workload::Query;

/// Sorted distinct answer rows, or `None` when the query is unanswerable.
pub fn naive_answer(
    catalog: &Catalog,
    facts: &[EntityFact],
    pool: &ConstraintPool,
    q: &Query,
) -> Option<Vec<Vec<Value>>> {
    let required = q.required_attrs(pool)?;
    let mut by_family: BTreeMap<FamilyId, Vec<AttrId>> = BTreeMap::new();
    for &a in &required {
        by_family.entry(catalog.family_of(a)).or_default().push(a);
    }

    // per family: every (attr -> value) choice of every qualifying entity
    let mut choices: Vec<Vec<BTreeMap<AttrId, Value>>> = Vec::new();
    for (family, attrs) in &by_family {
        let mut entities: BTreeMap<&str, BTreeMap<AttrId, BTreeSet<&Value>>> = BTreeMap::new();
        for f in facts {
            if catalog.family_of(f.attr) == *family && attrs.contains(&f.attr) {
                entities.entry(&f.entity_key).or_default().entry(f.attr).or_default().insert(&f.value);
            }
        }
        let mut local = Vec::new();
        for values in entities.values() {
            if values.len() < attrs.len() {
                continue;
            }
            let mut partial: Vec<BTreeMap<AttrId, Value>> = vec![BTreeMap::new()];
            for (&a, vs) in values {
                partial = partial
                    .into_iter()
                    .flat_map(|p| {
                        vs.iter().map(move |v| {
                            let mut p = p.clone();
                            p.insert(a, (*v).clone());
                            p
                        })
                    })
                    .collect();
            }
            local.extend(
                partial
                    .into_iter()
                    .filter(|row| q.predicates.iter().all(|p| row.get(&p.attr).is_none_or(|v| p.matches(v)))),
            );
        }
        choices.push(local);
    }

    let mut out = BTreeSet::new();
    let mut acc = BTreeMap::new();
    combine(&choices, 0, &mut acc, pool, q, &mut out);
    Some(out.into_iter().collect())
}

fn combine(
    choices: &[Vec<BTreeMap<AttrId, Value>>],
    depth: usize,
    acc: &mut BTreeMap<AttrId, Value>,
    pool: &ConstraintPool,
    q: &Query,
    out: &mut BTreeSet<Vec<Value>>,
) {
    if depth == choices.len() {
        out.insert(q.project.iter().map(|a| acc[a].clone()).collect());
        return;
    }
    for row in &choices[depth] {
        let consistent = row.iter().all(|(a, v)| acc.iter().all(|(b, w)| !pool.equivalent(*a, *b) || v == w));
        if !consistent {
            continue;
        }
        for (a, v) in row {
            acc.insert(*a, v.clone());
        }
        combine(choices, depth + 1, acc, pool, q, out);
        for a in row.keys() {
            acc.remove(a);
        }
    }
}
