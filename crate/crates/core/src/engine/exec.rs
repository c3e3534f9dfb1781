use std::collections::HashMap;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::catalog::{AttrId, FamilyId};
use crate::schema::SchemaState;
use crate::value::Value;
use crate::workload::{JoinCond, JoinPlan, PlanRef, ScanNode};

/// Row-count cost of evaluating a plan; the deterministic stand-in for time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CostUnits {
    pub rows_scanned: u64,
    pub rows_joined: u64,
    pub total: u64,
}

impl CostUnits {
    pub fn new(rows_scanned: u64, rows_joined: u64) -> Self {
        CostUnits { rows_scanned, rows_joined, total: rows_scanned + rows_joined }
    }
}

impl AddAssign for CostUnits {
    fn add_assign(&mut self, rhs: Self) {
        *self = CostUnits::new(self.rows_scanned + rhs.rows_scanned, self.rows_joined + rhs.rows_joined);
    }
}

/// Distinct projected tuples, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResultSet {
    pub columns: Vec<AttrId>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Col {
    Key(FamilyId),
    Attr(AttrId),
}

struct Relation {
    cols: Vec<Col>,
    rows: Vec<Vec<Value>>,
}

impl Relation {
    fn col(&self, c: Col) -> Option<usize> {
        self.cols.iter().position(|&x| x == c)
    }
}

/// Evaluates a plan bottom-up with hash joins.
///
/// `rows_scanned` counts every base-table row before filtering;
/// `rows_joined` counts the output rows of every join.
pub fn execute(plan: &JoinPlan, state: &SchemaState) -> Result<(ResultSet, CostUnits), EngineError> {
    let mut cost = CostUnits::default();
    let mut scans: Vec<Option<Relation>> = Vec::with_capacity(plan.scans.len());
    for node in &plan.scans {
        let (rel, scanned) = scan(node, state)?;
        cost.rows_scanned += scanned;
        scans.push(Some(rel));
    }
    let mut joins: Vec<Option<Relation>> = Vec::with_capacity(plan.joins.len());
    for step in &plan.joins {
        let left = take(&mut scans, &mut joins, step.left)?;
        let right = take(&mut scans, &mut joins, step.right)?;
        let out = hash_join(left, right, &step.on)?;
        cost.rows_joined += out.rows.len() as u64;
        joins.push(Some(out));
    }
    let root = match plan.joins.len() {
        0 if plan.scans.len() == 1 => take(&mut scans, &mut joins, PlanRef::Scan(0))?,
        0 => return Err(EngineError::PlanMismatch("several scans but no joins".into())),
        n => take(&mut scans, &mut joins, PlanRef::Join(n - 1))?,
    };
    if scans.iter().any(Option::is_some) || joins.iter().any(Option::is_some) {
        return Err(EngineError::PlanMismatch("plan leaves inputs unconsumed".into()));
    }
    let idx: Vec<usize> = plan
        .project
        .iter()
        .map(|&a| {
            root.col(Col::Attr(a)).ok_or_else(|| EngineError::PlanMismatch(format!("projection of {a} not produced")))
        })
        .collect::<Result<_, _>>()?;
    let mut rows: Vec<Vec<Value>> = root.rows.iter().map(|r| idx.iter().map(|&i| r[i].clone()).collect()).collect();
    rows.sort();
    rows.dedup();
    cost.total = cost.rows_scanned + cost.rows_joined;
    Ok((ResultSet { columns: plan.project.clone(), rows }, cost))
}

fn take(scans: &mut [Option<Relation>], joins: &mut [Option<Relation>], r: PlanRef) -> Result<Relation, EngineError> {
    let slot = match r {
        PlanRef::Scan(i) => scans.get_mut(i),
        PlanRef::Join(i) => joins.get_mut(i),
    };
    slot.and_then(Option::take).ok_or_else(|| EngineError::PlanMismatch(format!("input {r:?} missing or reused")))
}

fn scan(node: &ScanNode, state: &SchemaState) -> Result<(Relation, u64), EngineError> {
    let table = state
        .table(node.table)
        .ok_or_else(|| EngineError::PlanMismatch(format!("table {} is not in the state", node.table)))?;
    let attr_idx: Vec<usize> = node
        .attrs
        .iter()
        .map(|&a| {
            table.attr_pos(a).ok_or_else(|| EngineError::PlanMismatch(format!("attribute {a} is not in {}", table.id)))
        })
        .collect::<Result<_, _>>()?;
    let key_idx: Vec<usize> = node
        .families
        .iter()
        .map(|&f| {
            table.key_pos(f).ok_or_else(|| EngineError::PlanMismatch(format!("{} has no key family {}", table.id, f.0)))
        })
        .collect::<Result<_, _>>()?;
    let preds: Vec<(usize, &crate::workload::Predicate)> = node
        .predicates
        .iter()
        .map(|p| {
            table.attr_pos(p.attr).map(|i| (i, p)).ok_or_else(|| {
                EngineError::PlanMismatch(format!("predicate attribute {} is not in {}", p.attr, table.id))
            })
        })
        .collect::<Result<_, _>>()?;

    let mut cols: Vec<Col> = node.families.iter().map(|&f| Col::Key(f)).collect();
    cols.extend(node.attrs.iter().map(|&a| Col::Attr(a)));
    let mut rows = Vec::new();
    'rows: for row in &table.rows {
        let mut out = Vec::with_capacity(cols.len());
        for &k in &key_idx {
            match &row.keys[k] {
                Some(key) => out.push(Value::Text(key.clone())),
                None => continue 'rows,
            }
        }
        for &i in &attr_idx {
            match &row.vals[i] {
                Some(v) => out.push(v.clone()),
                None => continue 'rows,
            }
        }
        for (i, p) in &preds {
            match &row.vals[*i] {
                Some(v) if p.matches(v) => {}
                _ => continue 'rows,
            }
        }
        rows.push(out);
    }
    Ok((Relation { cols, rows }, table.rows.len() as u64))
}

fn hash_join(left: Relation, right: Relation, on: &[JoinCond]) -> Result<Relation, EngineError> {
    if on.is_empty() {
        return Err(EngineError::PlanMismatch("join without a condition".into()));
    }
    let mut lk = Vec::with_capacity(on.len());
    let mut rk = Vec::with_capacity(on.len());
    for cond in on {
        let (l, r) = match *cond {
            JoinCond::Family(f) => (left.col(Col::Key(f)), right.col(Col::Key(f))),
            JoinCond::Link(a, b) => match (left.col(Col::Attr(a)), right.col(Col::Attr(b))) {
                (Some(l), Some(r)) => (Some(l), Some(r)),
                _ => (left.col(Col::Attr(b)), right.col(Col::Attr(a))),
            },
        };
        match (l, r) {
            (Some(l), Some(r)) => {
                lk.push(l);
                rk.push(r);
            }
            _ => return Err(EngineError::PlanMismatch(format!("join condition {cond:?} not available"))),
        }
    }
    let mut index: HashMap<Vec<&Value>, Vec<usize>> = HashMap::new();
    for (j, row) in right.rows.iter().enumerate() {
        index.entry(rk.iter().map(|&i| &row[i]).collect()).or_default().push(j);
    }
    let keep: Vec<usize> = (0..right.cols.len()).filter(|&i| left.col(right.cols[i]).is_none()).collect();
    let mut cols = left.cols.clone();
    cols.extend(keep.iter().map(|&i| right.cols[i]));
    let mut rows = Vec::new();
    for row in &left.rows {
        let key: Vec<&Value> = lk.iter().map(|&i| &row[i]).collect();
        if let Some(hits) = index.get(&key) {
            for &j in hits {
                let mut out = row.clone();
                out.extend(keep.iter().map(|&i| right.rows[j][i].clone()));
                rows.push(out);
            }
        }
    }
    Ok(Relation { cols, rows })
}
