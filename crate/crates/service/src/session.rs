//! Single-run session state machine behind the HTTP API.
//!
//! Phases move IDLE -> LOADED -> RUNNING -> {STOPPED, DONE}; any
//! configuration call after a run re-enters LOADED. All transitions happen
//! under one mutex, which is never held across an await point. Training runs
//! on its own thread and reports back through [`Service`] after every
//! episode; a stop request is honored at the next episode boundary.

use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use mmschema_core::learner::{note_seen, rank_seen, EpisodeSummary, SchemaScore, SeenEntry, SortKey};
use mmschema_core::whatif::{evaluate_whatif, WhatIfError, WhatIfOutcome};
use mmschema_core::workload::{parse_workload, CostMode, QueryCheck, Workload};
use mmschema_core::{
    ddl, AttrId, CatalogEntry, ConstraintPool, Dataset, Environment, Execution, LearnParams, RunResult, SourceManifest,
};
use serde::Serialize;
use thiserror::Error;
use tokio::sync::broadcast;

use crate::rundir::{state_of, train_into, RunWriter};

#[derive(Debug, Error)]
pub enum ApiError {
    /// The call is not legal in the current phase.
    #[error("{0}")]
    Conflict(String),
    /// The request body failed validation.
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Internal(String),
}

impl From<mmschema_core::Error> for ApiError {
    fn from(e: mmschema_core::Error) -> Self {
        ApiError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Idle,
    Loaded,
    Running,
    Stopped,
    Done,
}

#[derive(Debug, Clone, Serialize)]
pub struct Status {
    pub phase: Phase,
    /// Directory name of the current or last run under the runs root.
    pub run: Option<String>,
    pub episode_done: usize,
    pub episodes: u32,
    pub best_by_time: Option<SchemaScore>,
    pub best_by_space: Option<SchemaScore>,
    /// Why the last run ended early, if it failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatalogView {
    pub facts: usize,
    pub families: Vec<String>,
    pub attributes: Vec<CatalogEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemaRow {
    pub signature: String,
    pub cost: u64,
    pub storage: u64,
    pub first_episode: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Started {
    pub run: String,
    pub episodes: u32,
}

/// Messages on the live event channel.
#[derive(Debug, Clone)]
pub enum RunEvent {
    Episode(EpisodeSummary),
    End(Status),
}

/// A stream subscription: episodes so far plus a live receiver while the run
/// is going.
pub struct Subscription {
    pub backlog: Vec<EpisodeSummary>,
    pub live: Option<broadcast::Receiver<RunEvent>>,
    pub status: Status,
}

/// Per-run state; replaced wholesale by every start.
#[derive(Default)]
struct RunState {
    name: Option<String>,
    episodes: u32,
    history: Vec<EpisodeSummary>,
    all_seen: BTreeMap<String, SeenEntry>,
    stop: Arc<AtomicBool>,
    result: Option<Arc<RunResult>>,
    env: Option<Arc<Environment>>,
    error: Option<String>,
}

struct Session {
    phase: Phase,
    dataset: Option<Arc<Dataset>>,
    constraints: String,
    pool: Option<ConstraintPool>,
    workload_text: Option<String>,
    workload: Option<Workload>,
    params: LearnParams,
    run: RunState,
}

impl Session {
    fn status(&self) -> Status {
        let best = |key| rank_seen(&self.run.all_seen, key).into_iter().next();
        Status {
            phase: self.phase,
            run: self.run.name.clone(),
            episode_done: self.run.history.len(),
            episodes: self.run.episodes,
            best_by_time: best(SortKey::Time),
            best_by_space: best(SortKey::Space),
            error: self.run.error.clone(),
        }
    }

    fn configurable(&self) -> Result<(), ApiError> {
        match self.phase {
            Phase::Running => Err(ApiError::Conflict("a run is in progress".into())),
            _ => Ok(()),
        }
    }

    fn dataset(&self) -> Result<&Arc<Dataset>, ApiError> {
        self.dataset.as_ref().ok_or_else(|| ApiError::Conflict("no dataset loaded".into()))
    }

    /// New inputs invalidate the previous run's schemas.
    fn reload(&mut self) {
        self.phase = Phase::Loaded;
        self.run = RunState::default();
    }

    fn environment(&self) -> Result<Environment, ApiError> {
        let ds = self.dataset()?;
        let workload = self.workload.clone().ok_or_else(|| ApiError::Conflict("no workload loaded".into()))?;
        let pool = self.pool.clone().unwrap_or_else(|| ConstraintPool::empty(&ds.catalog));
        Ok(ds.environment(pool, workload, CostMode::Units, Execution::default())?)
    }
}

/// Cloneable handle to the session, shared by request handlers and the
/// training thread.
#[derive(Clone)]
pub struct Service {
    session: Arc<Mutex<Session>>,
    events: broadcast::Sender<RunEvent>,
    runs_root: PathBuf,
    data_root: PathBuf,
}

impl Service {
    /// Runs are written under `runs_root`; relative source paths in posted
    /// manifests resolve against `data_root`.
    pub fn new(runs_root: impl Into<PathBuf>, data_root: impl Into<PathBuf>) -> Self {
        let (events, _) = broadcast::channel(4096);
        let session = Session {
            phase: Phase::Idle,
            dataset: None,
            constraints: String::new(),
            pool: None,
            workload_text: None,
            workload: None,
            params: LearnParams::default(),
            run: RunState::default(),
        };
        Service {
            session: Arc::new(Mutex::new(session)),
            events,
            runs_root: runs_root.into(),
            data_root: data_root.into(),
        }
    }

    fn lock(&self) -> MutexGuard<'_, Session> {
        // a panicking handler must not wedge the service
        self.session.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn runs_root(&self) -> &Path {
        &self.runs_root
    }

    pub fn status(&self) -> Status {
        self.lock().status()
    }

    pub fn load_dataset(&self, manifest: &str) -> Result<CatalogView, ApiError> {
        self.lock().configurable()?;
        let manifest =
            SourceManifest::from_json(manifest, &self.data_root).map_err(|e| ApiError::Invalid(e.to_string()))?;
        let ds = Dataset::from_manifest(manifest, Execution::default())?;
        let view = CatalogView {
            facts: ds.fact_count,
            families: ds.catalog.families().to_vec(),
            attributes: ds.catalog.entries().to_vec(),
        };
        let mut s = self.lock();
        s.configurable()?;
        s.pool = Some(ConstraintPool::empty(&ds.catalog));
        s.dataset = Some(Arc::new(ds));
        s.constraints.clear();
        s.workload = None;
        s.workload_text = None;
        s.reload();
        Ok(view)
    }

    /// Returns the derived equivalence classes.
    pub fn set_constraints(&self, text: &str) -> Result<Vec<Vec<AttrId>>, ApiError> {
        let mut s = self.lock();
        s.configurable()?;
        let pool = s.dataset()?.constraints(text)?;
        let classes = pool.classes().to_vec();
        s.pool = Some(pool);
        s.constraints = text.to_string();
        s.reload();
        Ok(classes)
    }

    /// Returns per-query validation against the current constraints.
    pub fn set_workload(&self, text: &str) -> Result<Vec<QueryCheck>, ApiError> {
        let mut s = self.lock();
        s.configurable()?;
        let ds = s.dataset()?;
        let workload = parse_workload(text, &ds.catalog).map_err(|e| ApiError::Invalid(e.to_string()))?;
        let pool = s.pool.clone().unwrap_or_else(|| ConstraintPool::empty(&ds.catalog));
        let checks = workload.check(&pool);
        s.workload = Some(workload);
        s.workload_text = Some(text.to_string());
        s.reload();
        Ok(checks)
    }

    pub fn set_params(&self, text: &str) -> Result<LearnParams, ApiError> {
        let params: LearnParams = serde_json::from_str(text).map_err(|e| ApiError::Invalid(e.to_string()))?;
        params.validate().map_err(|e| ApiError::Invalid(e.to_string()))?;
        let mut s = self.lock();
        s.configurable()?;
        s.params = params.clone();
        if matches!(s.phase, Phase::Stopped | Phase::Done) {
            s.phase = Phase::Loaded;
        }
        Ok(params)
    }

    /// Creates the next run directory and spawns training.
    pub fn start(&self) -> Result<Started, ApiError> {
        let mut s = self.lock();
        match s.phase {
            Phase::Idle => return Err(ApiError::Conflict("no dataset loaded".into())),
            Phase::Running => return Err(ApiError::Conflict("a run is in progress".into())),
            Phase::Loaded | Phase::Stopped | Phase::Done => {}
        }
        let env = Arc::new(s.environment()?);
        let dataset = Arc::clone(s.dataset()?);
        let (name, dir) = self.next_run_dir();
        let workload = s.workload_text.clone().unwrap_or_default();
        let writer = RunWriter::create(&dir, &dataset, &s.constraints, &workload, &s.params)
            .map_err(|e| ApiError::Internal(e.to_string()))?;

        let stop = Arc::new(AtomicBool::new(false));
        s.run = RunState {
            name: Some(name.clone()),
            episodes: s.params.episodes,
            all_seen: BTreeMap::from([(env.initial().signature(), {
                let e = env.evaluate(env.initial());
                SeenEntry { cost: e.cost, storage: e.storage, first_episode: 0 }
            })]),
            stop: Arc::clone(&stop),
            env: Some(Arc::clone(&env)),
            ..RunState::default()
        };
        s.phase = Phase::Running;
        let params = s.params.clone();
        let episodes = params.episodes;
        drop(s);

        let svc = self.clone();
        std::thread::spawn(move || {
            let outcome = train_into(writer, &env, &params, |record, summary| {
                let mut s = svc.lock();
                note_seen(&mut s.run.all_seen, record);
                s.run.history.push(summary.clone());
                let _ = svc.events.send(RunEvent::Episode(summary.clone()));
                if stop.load(Ordering::SeqCst) {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            });
            let mut s = svc.lock();
            match outcome {
                Ok(result) => {
                    s.phase = if result.stopped { Phase::Stopped } else { Phase::Done };
                    s.run.result = Some(Arc::new(result));
                }
                Err(e) => {
                    s.phase = Phase::Stopped;
                    s.run.error = Some(e.to_string());
                }
            }
            let _ = svc.events.send(RunEvent::End(s.status()));
        });
        Ok(Started { run: name, episodes })
    }

    fn next_run_dir(&self) -> (String, PathBuf) {
        (1..)
            .map(|i| format!("run-{i:04}"))
            .map(|n| (n.clone(), self.runs_root.join(n)))
            .find(|(_, p)| !p.exists())
            .expect("unbounded range")
    }

    pub fn stop(&self) -> Result<Status, ApiError> {
        let s = self.lock();
        if s.phase != Phase::Running {
            return Err(ApiError::Conflict("no run in progress".into()));
        }
        s.run.stop.store(true, Ordering::SeqCst);
        Ok(s.status())
    }

    /// Episodes after `after`, plus a live receiver while running.
    /// Subscribing under the session lock means the two never overlap or
    /// leave a gap.
    pub fn subscribe(&self, after: usize) -> Result<Subscription, ApiError> {
        let s = self.lock();
        if s.run.name.is_none() {
            return Err(ApiError::Conflict("no run has been started".into()));
        }
        Ok(Subscription {
            backlog: s.run.history.iter().filter(|e| e.episode > after).cloned().collect(),
            live: (s.phase == Phase::Running).then(|| self.events.subscribe()),
            status: s.status(),
        })
    }

    pub fn schemas(&self, key: SortKey) -> Result<Vec<SchemaRow>, ApiError> {
        let s = self.lock();
        if s.run.name.is_none() {
            return Err(ApiError::Conflict("no run has been started".into()));
        }
        Ok(rank_seen(&s.run.all_seen, key)
            .into_iter()
            .map(|sc| SchemaRow {
                first_episode: s.run.all_seen[&sc.signature].first_episode,
                signature: sc.signature,
                cost: sc.cost,
                storage: sc.storage,
            })
            .collect())
    }

    pub fn whatif(&self, groups: &[Vec<AttrId>]) -> Result<WhatIfOutcome, ApiError> {
        let env = {
            let s = self.lock();
            match &s.run.env {
                Some(env) => Arc::clone(env),
                None => Arc::new(s.environment()?),
            }
        };
        evaluate_whatif(&env, groups).map_err(|e| match e {
            WhatIfError::NotAPartition(_) => ApiError::Invalid(e.to_string()),
        })
    }

    /// DDL of a schema seen in the current run; the best-by-time one when
    /// no signature is given.
    pub fn export_ddl(&self, signature: Option<&str>) -> Result<String, ApiError> {
        let (env, signature) = {
            let s = self.lock();
            let env = s.run.env.clone().ok_or_else(|| ApiError::Conflict("no run has been started".into()))?;
            let signature = match signature {
                Some(sig) if s.run.all_seen.contains_key(sig) => sig.to_string(),
                Some(sig) => return Err(ApiError::NotFound(format!("schema {sig} was not seen in this run"))),
                None => s.status().best_by_time.expect("initial schema is always seen").signature,
            };
            (env, signature)
        };
        let state =
            state_of(&env, &signature).ok_or_else(|| ApiError::Internal(format!("cannot rebuild {signature}")))?;
        Ok(ddl::export(env.catalog(), &state))
    }

    /// The finished run's result, if any.
    pub fn result(&self) -> Option<Arc<RunResult>> {
        self.lock().run.result.clone()
    }
}
