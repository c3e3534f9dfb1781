//! Query workloads: parsing, per-state planning and weighted costing.

mod cost;
mod plan;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use crate::catalog::{AttrId, Catalog};
use crate::engine::{self, EngineError, ResultSet};
use crate::schema::{ConstraintPool, SchemaState};
use crate::value::{Value, ValueKind};

pub use cost::{
    unanswerable_penalty, workload_cost, workload_cost_with, CostMode, CostOptions, CostReport, QueryCost,
    PENALTY_FACTOR,
};
pub use plan::{plan, JoinCond, JoinPlan, JoinStep, PlanRef, ScanNode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorkloadError {
    #[error("workload: {0}")]
    Malformed(String),
    #[error("workload has no queries")]
    Empty,
    #[error("query `{query}`: {message}")]
    Invalid { query: String, message: String },
    #[error(
        "query `{query}` cannot be answered: its attributes span key families that no declared equivalence connects"
    )]
    Unanswerable { query: String },
    #[error("query `{query}`: {source}")]
    Engine {
        query: String,
        #[source]
        source: EngineError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl CmpOp {
    fn parse(s: &str) -> Option<CmpOp> {
        Some(match s {
            "=" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            _ => return None,
        })
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Predicate {
    pub attr: AttrId,
    pub op: CmpOp,
    pub literal: Value,
}

impl Predicate {
    pub fn matches(&self, v: &Value) -> bool {
        let ord = v.cmp(&self.literal);
        match self.op {
            CmpOp::Eq => ord.is_eq(),
            CmpOp::Ne => ord.is_ne(),
            CmpOp::Lt => ord.is_lt(),
            CmpOp::Le => ord.is_le(),
            CmpOp::Gt => ord.is_gt(),
            CmpOp::Ge => ord.is_ge(),
        }
    }
}

/// A conjunctive select-project query over attribute ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Query {
    pub name: String,
    pub project: Vec<AttrId>,
    pub predicates: Vec<Predicate>,
    pub weight: u64,
}

impl Query {
    /// Projected and filtered attributes, ascending and distinct.
    pub fn referenced(&self) -> Vec<AttrId> {
        let set: BTreeSet<AttrId> =
            self.project.iter().copied().chain(self.predicates.iter().map(|p| p.attr)).collect();
        set.into_iter().collect()
    }

    /// Attributes a plan must touch: the referenced ones plus the equivalence
    /// links needed to connect their key families. `None` if unconnectable.
    pub fn required_attrs(&self, pool: &ConstraintPool) -> Option<Vec<AttrId>> {
        let referenced = self.referenced();
        let families = referenced.iter().map(|&a| pool.family_of(a)).collect();
        let links = pool.link_attrs(&families)?;
        let all: BTreeSet<AttrId> = referenced.into_iter().chain(links).collect();
        Some(all.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Workload {
    pub queries: Vec<Query>,
}

/// Per-query load-time check against a constraint pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryCheck {
    pub name: String,
    pub answerable: bool,
    pub required: Vec<AttrId>,
}

impl Workload {
    pub fn check(&self, pool: &ConstraintPool) -> Vec<QueryCheck> {
        self.queries
            .iter()
            .map(|q| {
                let required = q.required_attrs(pool);
                QueryCheck {
                    name: q.name.clone(),
                    answerable: required.is_some(),
                    required: required.unwrap_or_default(),
                }
            })
            .collect()
    }
}

/// Result rows of `q` evaluated on `state`.
pub fn answer(q: &Query, state: &SchemaState, pool: &ConstraintPool) -> Result<ResultSet, WorkloadError> {
    let p = plan(q, state, pool)?;
    engine::execute(&p, state).map(|(r, _)| r).map_err(|source| WorkloadError::Engine { query: q.name.clone(), source })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWorkload {
    queries: Vec<RawQuery>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuery {
    name: String,
    project: Vec<u64>,
    #[serde(default, rename = "where")]
    predicates: Vec<Json>,
    #[serde(default)]
    weight: Option<Json>,
}

/// Parses `{"queries":[{"name":..,"project":[ids],"where":[[id,"op",lit]],"weight":n}]}`.
pub fn parse_workload(text: &str, catalog: &Catalog) -> Result<Workload, WorkloadError> {
    let raw: RawWorkload = serde_json::from_str(text).map_err(|e| WorkloadError::Malformed(e.to_string()))?;
    if raw.queries.is_empty() {
        return Err(WorkloadError::Empty);
    }
    let mut names = BTreeSet::new();
    let queries = raw
        .queries
        .into_iter()
        .map(|rq| {
            let invalid = |message: String| WorkloadError::Invalid { query: rq.name.clone(), message };
            if !names.insert(rq.name.clone()) {
                return Err(invalid("duplicate query name".into()));
            }
            let attr = |id: u64| {
                if id < catalog.len() as u64 {
                    Ok(AttrId(id as u32))
                } else {
                    Err(invalid(format!("unknown attribute id {id}")))
                }
            };
            if rq.project.is_empty() {
                return Err(invalid("project list is empty".into()));
            }
            let project = rq.project.iter().map(|&id| attr(id)).collect::<Result<Vec<_>, _>>()?;
            let mut predicates = Vec::with_capacity(rq.predicates.len());
            for p in &rq.predicates {
                let Some([id, op, lit]) = p.as_array().and_then(|a| <&[Json; 3]>::try_from(a.as_slice()).ok()) else {
                    return Err(invalid(format!("predicate {p} must be [id, op, literal]")));
                };
                let a = attr(id.as_u64().ok_or_else(|| invalid(format!("bad attribute id {id}")))?)?;
                let op = op.as_str().and_then(CmpOp::parse).ok_or_else(|| invalid(format!("unknown operator {op}")))?;
                let kind = catalog.entry(a).value_kind;
                let literal = literal_for(lit, kind)
                    .ok_or_else(|| invalid(format!("literal {lit} does not match attribute {a} of kind {kind}")))?;
                predicates.push(Predicate { attr: a, op, literal });
            }
            let weight = match &rq.weight {
                None => 1,
                Some(w) => w
                    .as_u64()
                    .filter(|&w| w > 0)
                    .ok_or_else(|| invalid(format!("weight {w} must be a positive integer")))?,
            };
            Ok(Query { name: rq.name, project, predicates, weight })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Workload { queries })
}

fn literal_for(lit: &Json, kind: ValueKind) -> Option<Value> {
    match kind {
        ValueKind::Integer => lit.as_i64().map(Value::Int),
        ValueKind::Float => lit.as_f64().filter(|v| v.is_finite()).map(Value::Float),
        ValueKind::Text => lit.as_str().map(|s| Value::Text(s.to_owned())),
    }
}
