//! The semantic-constraint pool: declared value equivalences between
//! attributes of different sources.
//!
//! Equivalences close transitively into classes. Each class links the key
//! families of its members. Pools are kept so that the family/class
//! incidence graph is a forest and no class holds two attributes of one
//! family; under those two conditions any pair of families is linked by at
//! most one chain of classes, which is what makes query answers independent
//! of how tables were merged.

use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::catalog::{AttrId, Catalog, FamilyId};
use crate::dsu::DisjointSet;
use crate::value::ValueKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstraintErrorKind {
    #[error("expected `<id> = <id>`, got `{0}`")]
    Syntax(String),
    #[error("unknown attribute id {0}")]
    UnknownAttribute(u64),
    #[error("attribute {0} cannot be equal to itself")]
    SelfEquality(AttrId),
    #[error("attributes {a} ({ka}) and {b} ({kb}) have incompatible value kinds")]
    IncompatibleKinds { a: AttrId, b: AttrId, ka: ValueKind, kb: ValueKind },
    #[error("attributes {a} and {b} would share an equivalence class inside one key family")]
    SameFamily { a: AttrId, b: AttrId },
    #[error("declaring {a} = {b} links key families along a second path")]
    Cycle { a: AttrId, b: AttrId },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("constraints line {line}: {kind}")]
pub struct ConstraintError {
    pub line: usize,
    pub kind: ConstraintErrorKind,
}

pub type ClassId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintPool {
    attr_family: Vec<FamilyId>,
    attr_kind: Vec<ValueKind>,
    family_count: usize,
    declared: Vec<(AttrId, AttrId)>,
    class_of: Vec<Option<ClassId>>,
    classes: Vec<Vec<AttrId>>,
}

/// Serializable view of the pool for the service API.
#[derive(Debug, Clone, Serialize)]
pub struct PoolSummary {
    pub declared: Vec<(AttrId, AttrId)>,
    pub classes: Vec<Vec<AttrId>>,
}

impl ConstraintPool {
    /// Pool with only implicit key-family joinability.
    pub fn empty(catalog: &Catalog) -> Self {
        ConstraintPool {
            attr_family: catalog.entries().iter().map(|e| e.family).collect(),
            attr_kind: catalog.entries().iter().map(|e| e.value_kind).collect(),
            family_count: catalog.family_count(),
            declared: Vec::new(),
            class_of: vec![None; catalog.len()],
            classes: Vec::new(),
        }
    }

    /// Parses the `id = id` line format; `#` starts a comment.
    pub fn parse(text: &str, catalog: &Catalog) -> Result<Self, ConstraintError> {
        let mut pool = Self::empty(catalog);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let err = |kind| ConstraintError { line, kind };
            let (l, r) = body.split_once('=').ok_or_else(|| err(ConstraintErrorKind::Syntax(body.into())))?;
            let parse_id = |s: &str| -> Result<AttrId, ConstraintError> {
                let s = s.trim();
                let id: u64 = s.parse().map_err(|_| err(ConstraintErrorKind::Syntax(body.into())))?;
                if id >= catalog.len() as u64 {
                    return Err(err(ConstraintErrorKind::UnknownAttribute(id)));
                }
                Ok(AttrId(id as u32))
            };
            let (a, b) = (parse_id(l)?, parse_id(r)?);
            pool.declare(a, b).map_err(err)?;
        }
        Ok(pool)
    }

    pub fn with_pairs(catalog: &Catalog, pairs: &[(AttrId, AttrId)]) -> Result<Self, ConstraintError> {
        let mut pool = Self::empty(catalog);
        for (i, &(a, b)) in pairs.iter().enumerate() {
            if a.index() >= catalog.len() || b.index() >= catalog.len() {
                let bad = if a.index() >= catalog.len() { a } else { b };
                return Err(ConstraintError { line: i + 1, kind: ConstraintErrorKind::UnknownAttribute(bad.0 as u64) });
            }
            pool.declare(a, b).map_err(|kind| ConstraintError { line: i + 1, kind })?;
        }
        Ok(pool)
    }

    /// Adds `a = b`, leaving the pool untouched on error.
    pub fn declare(&mut self, a: AttrId, b: AttrId) -> Result<(), ConstraintErrorKind> {
        if a == b {
            return Err(ConstraintErrorKind::SelfEquality(a));
        }
        let (ka, kb) = (self.attr_kind[a.index()], self.attr_kind[b.index()]);
        if ka != kb {
            return Err(ConstraintErrorKind::IncompatibleKinds { a, b, ka, kb });
        }
        let pair = if a < b { (a, b) } else { (b, a) };
        if self.declared.contains(&pair) {
            return Ok(());
        }
        let mut declared = self.declared.clone();
        declared.push(pair);
        let (class_of, classes) = self.close(&declared);
        self.check_structure(&classes, pair)?;
        self.declared = declared;
        self.class_of = class_of;
        self.classes = classes;
        Ok(())
    }

    fn close(&self, declared: &[(AttrId, AttrId)]) -> (Vec<Option<ClassId>>, Vec<Vec<AttrId>>) {
        let n = self.attr_family.len();
        let mut dsu = DisjointSet::new(n);
        let mut touched = vec![false; n];
        for &(a, b) in declared {
            dsu.union(a.index(), b.index());
            touched[a.index()] = true;
            touched[b.index()] = true;
        }
        let mut class_of = vec![None; n];
        let mut classes: Vec<Vec<AttrId>> = Vec::new();
        let mut root_class = vec![None; n];
        // ascending attr order numbers classes by their smallest member
        for x in 0..n {
            if !touched[x] {
                continue;
            }
            let r = dsu.find(x);
            let c = *root_class[r].get_or_insert_with(|| {
                classes.push(Vec::new());
                classes.len() - 1
            });
            classes[c].push(AttrId(x as u32));
            class_of[x] = Some(c);
        }
        (class_of, classes)
    }

    fn check_structure(&self, classes: &[Vec<AttrId>], (a, b): (AttrId, AttrId)) -> Result<(), ConstraintErrorKind> {
        for members in classes {
            let mut fams = BTreeSet::new();
            for m in members {
                if !fams.insert(self.attr_family[m.index()]) {
                    return Err(ConstraintErrorKind::SameFamily { a, b });
                }
            }
        }
        // family/class incidence graph must be a forest
        let mut dsu = DisjointSet::new(self.family_count + classes.len());
        for (c, members) in classes.iter().enumerate() {
            for m in members {
                if !dsu.union(self.family_count + c, self.attr_family[m.index()].index()) {
                    return Err(ConstraintErrorKind::Cycle { a, b });
                }
            }
        }
        Ok(())
    }

    pub fn declared(&self) -> &[(AttrId, AttrId)] {
        &self.declared
    }

    /// Equivalence classes with at least two members, ordered by smallest member.
    pub fn classes(&self) -> &[Vec<AttrId>] {
        &self.classes
    }

    pub fn summary(&self) -> PoolSummary {
        PoolSummary { declared: self.declared.clone(), classes: self.classes.clone() }
    }

    pub fn attr_count(&self) -> usize {
        self.attr_family.len()
    }

    pub fn family_of(&self, attr: AttrId) -> FamilyId {
        self.attr_family[attr.index()]
    }

    pub fn class_of(&self, attr: AttrId) -> Option<ClassId> {
        self.class_of[attr.index()]
    }

    pub fn class_members(&self, class: ClassId) -> &[AttrId] {
        &self.classes[class]
    }

    /// True when `a` and `b` are distinct members of one closure class.
    pub fn equivalent(&self, a: AttrId, b: AttrId) -> bool {
        a != b && self.class_of(a).is_some() && self.class_of(a) == self.class_of(b)
    }

    /// A class with members on both sides, if any.
    pub fn link_class(&self, left: &[AttrId], right: &[AttrId]) -> Option<ClassId> {
        left.iter().filter_map(|&a| self.class_of(a)).find(|&c| right.iter().any(|&b| self.class_of(b) == Some(c)))
    }

    /// Link attributes needed to connect `families` through declared
    /// equivalences: the minimal subtree of the family/class forest spanning
    /// them. `None` when some family is unreachable.
    pub fn link_attrs(&self, families: &BTreeSet<FamilyId>) -> Option<Vec<AttrId>> {
        let mut terminals = families.iter().map(|f| f.index());
        let Some(root) = terminals.next() else {
            return Some(Vec::new());
        };
        let fc = self.family_count;
        let nodes = fc + self.classes.len();
        // adjacency: family -> classes and class -> (family, member)
        let mut adj: Vec<Vec<(usize, AttrId)>> = vec![Vec::new(); nodes];
        for (c, members) in self.classes.iter().enumerate() {
            for &m in members {
                let f = self.attr_family[m.index()].index();
                adj[fc + c].push((f, m));
                adj[f].push((fc + c, m));
            }
        }
        let mut parent: Vec<Option<(usize, AttrId)>> = vec![None; nodes];
        let mut seen = vec![false; nodes];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &(v, m) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some((u, m));
                    queue.push_back(v);
                }
            }
        }
        let mut on_tree = vec![false; nodes];
        on_tree[root] = true;
        let mut links = BTreeSet::new();
        for t in terminals {
            if !seen[t] {
                return None;
            }
            let mut u = t;
            while !on_tree[u] {
                on_tree[u] = true;
                let (p, m) = parent[u].expect("reachable non-root node has a parent");
                links.insert(m);
                u = p;
            }
        }
        Some(links.into_iter().collect())
    }
}
