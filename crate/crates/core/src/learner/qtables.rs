use rand::Rng;
use serde::Serialize;

use super::LearnError;
use crate::catalog::AttrId;
use crate::schema::{valid_actions, ConstraintPool, JoinAction, SchemaState};

/// The two learning tables: `q1` scores the first attribute of a join,
/// `q2` scores the (first, second) pair. Neither is indexed by state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QTables {
    n: usize,
    q1: Vec<f64>,
    q2: Vec<f64>,
}

impl QTables {
    pub fn new(n: usize) -> Self {
        QTables { n, q1: vec![0.0; n], q2: vec![0.0; n * n] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn q1(&self, a: AttrId) -> f64 {
        self.q1[a.index()]
    }

    pub fn q2(&self, left: AttrId, right: AttrId) -> f64 {
        self.q2[left.index() * self.n + right.index()]
    }

    pub fn set_q1(&mut self, a: AttrId, v: f64) {
        self.q1[a.index()] = v;
    }

    pub fn set_q2(&mut self, left: AttrId, right: AttrId, v: f64) {
        self.q2[left.index() * self.n + right.index()] = v;
    }

    /// Largest `q2` over `actions`, or 0 when there are none.
    pub fn bootstrap(&self, actions: &[JoinAction]) -> f64 {
        actions.iter().map(|a| self.q2(a.left, a.right)).reduce(f64::max).unwrap_or(0.0)
    }

    /// In-place temporal-difference step. Both tables move toward the same
    /// target `reward + gamma * max q2(next)`.
    pub fn update(&mut self, act: JoinAction, reward: f64, next_actions: &[JoinAction], alpha: f64, gamma: f64) {
        let target = reward + gamma * self.bootstrap(next_actions);
        let q2 = self.q2(act.left, act.right);
        self.set_q2(act.left, act.right, q2 + alpha * (target - q2));
        let q1 = self.q1(act.left);
        self.set_q1(act.left, q1 + alpha * (target - q1));
    }
}

/// Pure TD update: returns new tables, bootstrapping from `s_next`.
#[allow(clippy::too_many_arguments)]
pub fn td_update(
    q: &QTables,
    s: &SchemaState,
    act: JoinAction,
    reward: f64,
    s_next: &SchemaState,
    pool: &ConstraintPool,
    alpha: f64,
    gamma: f64,
) -> QTables {
    debug_assert!(crate::schema::joinable(pool, s, act.left, act.right));
    let mut out = q.clone();
    out.update(act, reward, &valid_actions(pool, s_next), alpha, gamma);
    out
}

/// Epsilon-greedy two-stage choice over the valid actions of `state`.
pub fn select_action<R: Rng + ?Sized>(
    q: &QTables,
    state: &SchemaState,
    pool: &ConstraintPool,
    greedy: f64,
    rng: &mut R,
) -> Result<JoinAction, LearnError> {
    select_from(q, &valid_actions(pool, state), greedy, rng)
}

/// With probability `greedy`, pick the left attribute by `q1` and then the
/// right one by `q2[left]`, both restricted to valid actions and tie-broken
/// by lowest id; otherwise sample a valid action uniformly. `actions` must be
/// sorted as [`valid_actions`] returns them.
pub fn select_from<R: Rng + ?Sized>(
    q: &QTables,
    actions: &[JoinAction],
    greedy: f64,
    rng: &mut R,
) -> Result<JoinAction, LearnError> {
    if actions.is_empty() {
        return Err(LearnError::Terminal);
    }
    if rng.gen::<f64>() < greedy {
        // sorted input: lefts ascend, so strict `>` keeps the lowest id on ties
        let mut left = actions[0].left;
        for a in actions {
            if q.q1(a.left) > q.q1(left) {
                left = a.left;
            }
        }
        let mut best: Option<JoinAction> = None;
        for &a in actions.iter().filter(|a| a.left == left) {
            if best.is_none_or(|b| q.q2(left, a.right) > q.q2(left, b.right)) {
                best = Some(a);
            }
        }
        Ok(best.expect("chosen left has at least one action"))
    } else {
        Ok(actions[rng.gen_range(0..actions.len())])
    }
}
