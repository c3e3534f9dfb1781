use std::collections::BTreeMap;
use std::ops::ControlFlow;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{select_from, Environment, LearnError, QTables, StateCache};
use crate::par::{self, Execution};
use crate::schema::{valid_actions, JoinAction, SchemaState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnParams {
    pub alpha: f64,
    pub gamma: f64,
    /// Probability of exploiting the tables instead of exploring.
    pub greedy: f64,
    pub episodes: u32,
    /// Steps per episode; `None` means one fewer than the attribute count.
    pub max_steps: Option<u32>,
    pub seed: u64,
    pub baseline_time: Option<f64>,
    pub baseline_space: Option<f64>,
}

impl Default for LearnParams {
    fn default() -> Self {
        LearnParams {
            alpha: 0.1,
            gamma: 0.9,
            greedy: 0.9,
            episodes: 20,
            max_steps: None,
            seed: 0,
            baseline_time: None,
            baseline_space: None,
        }
    }
}

impl LearnParams {
    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: &str| Err(LearnError::InvalidParams(m.to_owned()));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.greedy) {
            return bad("greedy must be in [0, 1]");
        }
        if self.episodes == 0 {
            return bad("episodes must be positive");
        }
        if self.max_steps == Some(0) {
            return bad("max_steps must be positive");
        }
        for b in [self.baseline_time, self.baseline_space].into_iter().flatten() {
            if !b.is_finite() || b < 0.0 {
                return bad("baselines must be finite and non-negative");
            }
        }
        Ok(())
    }

    pub fn steps_for(&self, attrs: usize) -> usize {
        self.max_steps.map_or(attrs.saturating_sub(1), |s| s as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub action: JoinAction,
    /// Workload cost before the step minus cost after it.
    pub reward: i64,
    pub cost: u64,
    pub storage: u64,
    pub signature: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub initial_cost: u64,
    pub steps: Vec<StepRecord>,
    pub final_cost: u64,
    pub final_storage: u64,
    pub final_signature: String,
}

impl EpisodeRecord {
    pub fn total_reward(&self) -> i64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SchemaScore {
    pub signature: String,
    pub cost: u64,
    pub storage: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeenEntry {
    pub cost: u64,
    pub storage: u64,
    /// 0 for the initial schema, otherwise the first episode reaching it.
    pub first_episode: usize,
}

/// Progress emitted after each episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode: usize,
    pub final_cost: u64,
    pub final_storage: u64,
    pub best_cost: u64,
    pub best_storage: u64,
    pub baseline_time: Option<f64>,
    pub baseline_space: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub initial: SchemaScore,
    pub best_by_time: SchemaScore,
    pub best_by_space: SchemaScore,
    pub all_seen: BTreeMap<String, SeenEntry>,
    pub episodes: Vec<EpisodeRecord>,
    pub stopped: bool,
    #[serde(skip)]
    pub tables: QTables,
}

impl RunResult {
    pub fn completed_episodes(&self) -> usize {
        self.episodes.len()
    }

    /// Seen schemas ordered by (cost, storage, signature).
    pub fn ranked_by_time(&self) -> Vec<SchemaScore> {
        rank_seen(&self.all_seen, SortKey::Time)
    }

    /// Seen schemas ordered by (storage, cost, signature).
    pub fn ranked_by_space(&self) -> Vec<SchemaScore> {
        rank_seen(&self.all_seen, SortKey::Space)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortKey {
    Time,
    Space,
}

/// Adds every schema the episode visited; earlier sightings win.
pub fn note_seen(all_seen: &mut BTreeMap<String, SeenEntry>, record: &EpisodeRecord) {
    for s in &record.steps {
        all_seen.entry(s.signature.clone()).or_insert(SeenEntry {
            cost: s.cost,
            storage: s.storage,
            first_episode: record.episode,
        });
    }
}

/// Time orders by (cost, storage, signature), space by (storage, cost,
/// signature); the first entry is the matching best-so-far schema.
pub fn rank_seen(all_seen: &BTreeMap<String, SeenEntry>, key: SortKey) -> Vec<SchemaScore> {
    let mut v: Vec<SchemaScore> =
        all_seen.iter().map(|(s, e)| SchemaScore { signature: s.clone(), cost: e.cost, storage: e.storage }).collect();
    match key {
        SortKey::Time => v.sort_by(|a, b| (a.cost, a.storage, &a.signature).cmp(&(b.cost, b.storage, &b.signature))),
        SortKey::Space => v.sort_by(|a, b| (a.storage, a.cost, &a.signature).cmp(&(b.storage, b.cost, &b.signature))),
    }
    v
}

/// Runs one episode from the initial schema and returns the updated tables.
/// Stops after `params.max_steps` joins or when no join is valid.
pub fn run_episode<R: rand::Rng + ?Sized>(
    env: &Environment,
    q: &QTables,
    params: &LearnParams,
    rng: &mut R,
) -> (QTables, EpisodeRecord) {
    let mut q = q.clone();
    let max_steps = params.steps_for(env.attr_count());
    let record = episode_in_place(env, &mut q, params, max_steps, 1, &mut StateCache::new(), rng);
    (q, record)
}

fn episode_in_place<R: rand::Rng + ?Sized>(
    env: &Environment,
    q: &mut QTables,
    params: &LearnParams,
    max_steps: usize,
    episode: usize,
    cache: &mut StateCache,
    rng: &mut R,
) -> EpisodeRecord {
    let mut state: SchemaState = env.initial().clone();
    let mut eval = cache.get_or_eval(env, &state);
    let initial_cost = eval.cost;
    let mut signature = state.signature();
    let mut actions = valid_actions(env.pool(), &state);
    let mut steps = Vec::new();
    for step in 1..=max_steps {
        let Ok(act) = select_from(q, &actions, params.greedy, rng) else {
            break;
        };
        let (sig, next, next_eval) = cache.step(env, &state, act);
        let reward = eval.cost as i64 - next_eval.cost as i64;
        let next_actions = valid_actions(env.pool(), &next);
        q.update(act, reward as f64, &next_actions, params.alpha, params.gamma);
        steps.push(StepRecord {
            step,
            action: act,
            reward,
            cost: next_eval.cost,
            storage: next_eval.storage,
            signature: sig.clone(),
        });
        state = next;
        eval = next_eval;
        signature = sig;
        actions = next_actions;
    }
    EpisodeRecord {
        episode,
        initial_cost,
        steps,
        final_cost: eval.cost,
        final_storage: eval.storage,
        final_signature: signature,
    }
}

pub fn train(env: &Environment, params: &LearnParams) -> Result<RunResult, LearnError> {
    train_with(env, params, |_, _| ControlFlow::Continue(()))
}

/// Trains for `params.episodes` episodes. The observer sees every finished
/// episode and may stop the run early by returning `Break`.
pub fn train_with<F>(env: &Environment, params: &LearnParams, mut observer: F) -> Result<RunResult, LearnError>
where
    F: FnMut(&EpisodeRecord, &EpisodeSummary) -> ControlFlow<()>,
{
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut q = QTables::new(env.attr_count());
    let mut cache = StateCache::new();
    let max_steps = params.steps_for(env.attr_count());

    let init = cache.get_or_eval(env, env.initial());
    let initial = SchemaScore { signature: env.initial().signature(), cost: init.cost, storage: init.storage };
    let mut all_seen = BTreeMap::new();
    all_seen.insert(initial.signature.clone(), SeenEntry { cost: init.cost, storage: init.storage, first_episode: 0 });
    let mut best_by_time = initial.clone();
    let mut best_by_space = initial.clone();
    let mut episodes = Vec::with_capacity(params.episodes as usize);
    let mut stopped = false;

    for episode in 1..=params.episodes as usize {
        let record = episode_in_place(env, &mut q, params, max_steps, episode, &mut cache, &mut rng);
        note_seen(&mut all_seen, &record);
        for s in &record.steps {
            let score = SchemaScore { signature: s.signature.clone(), cost: s.cost, storage: s.storage };
            if (score.cost, score.storage, &score.signature)
                < (best_by_time.cost, best_by_time.storage, &best_by_time.signature)
            {
                best_by_time = score.clone();
            }
            if (score.storage, score.cost, &score.signature)
                < (best_by_space.storage, best_by_space.cost, &best_by_space.signature)
            {
                best_by_space = score;
            }
        }
        let summary = EpisodeSummary {
            episode,
            final_cost: record.final_cost,
            final_storage: record.final_storage,
            best_cost: best_by_time.cost,
            best_storage: best_by_space.storage,
            baseline_time: params.baseline_time,
            baseline_space: params.baseline_space,
        };
        let flow = observer(&record, &summary);
        episodes.push(record);
        if flow.is_break() {
            stopped = episode < params.episodes as usize;
            break;
        }
    }
    Ok(RunResult { initial, best_by_time, best_by_space, all_seen, episodes, stopped, tables: q })
}

/// Independent training runs for each seed; results come back in seed order.
pub fn train_seeds(
    env: &Environment,
    params: &LearnParams,
    seeds: &[u64],
    exec: Execution,
) -> Result<Vec<RunResult>, LearnError> {
    params.validate()?;
    par::map(exec, seeds, |&seed| train(env, &LearnParams { seed, ..params.clone() })).into_iter().collect()
}
