//! Run directory layout and batch training into it.
//!
//! `episodes.jsonl` is append-only and flushed after every episode, so a
//! killed run leaves a prefix of complete lines. `result.json` and `ddl.sql`
//! are written once, after the last episode.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use mmschema_core::learner::{train_with, EpisodeRecord, EpisodeSummary};
use mmschema_core::schema::parse_partition;
use mmschema_core::whatif::materialize;
use mmschema_core::{
    ddl, load_environment, AttrId, Dataset, Environment, LearnError, LearnParams, RunResult, SchemaState,
};
use serde::Serialize;
use thiserror::Error;

pub const MANIFEST: &str = "manifest.json";
pub const CATALOG: &str = "catalog.json";
pub const CONSTRAINTS: &str = "constraints.txt";
pub const WORKLOAD: &str = "workload.json";
pub const PARAMS: &str = "params.json";
pub const EPISODES: &str = "episodes.jsonl";
pub const RESULT: &str = "result.json";
pub const DDL: &str = "ddl.sql";

#[derive(Debug, Error)]
pub enum RunDirError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] mmschema_core::Error),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunDirError + '_ {
    move |source| RunDirError::Io { path: path.to_path_buf(), source }
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunDirError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// One line of `episodes.jsonl`.
#[derive(Debug, Serialize)]
struct StepLine<'a> {
    episode: usize,
    step: usize,
    left: AttrId,
    right: AttrId,
    reward: i64,
    cost: u64,
    storage: u64,
    signature: &'a str,
}

pub struct RunWriter {
    root: PathBuf,
    episodes: BufWriter<File>,
}

impl RunWriter {
    /// Creates `root` and writes every input file. Source paths in the
    /// manifest copy are made absolute so the directory is self-describing.
    pub fn create(
        root: &Path,
        dataset: &Dataset,
        constraints: &str,
        workload: &str,
        params: &LearnParams,
    ) -> Result<Self, RunDirError> {
        fs::create_dir_all(root).map_err(io_err(root))?;
        let mut manifest = dataset.manifest.clone();
        for s in &mut manifest.sources {
            s.path = std::path::absolute(&s.path).map_err(io_err(&s.path))?;
        }
        write_file(&root.join(MANIFEST), &pretty(&manifest))?;
        write_file(&root.join(CATALOG), &pretty(dataset.catalog.as_ref()))?;
        write_file(&root.join(CONSTRAINTS), constraints)?;
        write_file(&root.join(WORKLOAD), workload)?;
        write_file(&root.join(PARAMS), &pretty(params))?;
        let path = root.join(EPISODES);
        let file = File::create(&path).map_err(io_err(&path))?;
        Ok(RunWriter { root: root.to_path_buf(), episodes: BufWriter::new(file) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Appends one line per step and flushes.
    pub fn append(&mut self, record: &EpisodeRecord) -> Result<(), RunDirError> {
        let path = self.root.join(EPISODES);
        for s in &record.steps {
            let line = StepLine {
                episode: record.episode,
                step: s.step,
                left: s.action.left,
                right: s.action.right,
                reward: s.reward,
                cost: s.cost,
                storage: s.storage,
                signature: &s.signature,
            };
            let text = serde_json::to_string(&line).expect("plain data serializes");
            writeln!(self.episodes, "{text}").map_err(io_err(&path))?;
        }
        self.episodes.flush().map_err(io_err(&path))
    }

    /// Writes `result.json` and the DDL of the best-by-time schema.
    pub fn finish(mut self, env: &Environment, result: &RunResult) -> Result<(), RunDirError> {
        let path = self.root.join(EPISODES);
        self.episodes.flush().map_err(io_err(&path))?;
        write_file(&self.root.join(RESULT), &pretty(result))?;
        let state = state_of(env, &result.best_by_time.signature).expect("seen schemas are realizable");
        write_file(&self.root.join(DDL), &ddl::export(env.catalog(), &state))
    }
}

/// Trains while logging every episode to `writer`, then finishes the run
/// directory. The observer may stop the run between episodes.
pub fn train_into<F>(
    mut writer: RunWriter,
    env: &Environment,
    params: &LearnParams,
    mut observer: F,
) -> Result<RunResult, RunDirError>
where
    F: FnMut(&EpisodeRecord, &EpisodeSummary) -> ControlFlow<()>,
{
    let mut failed = None;
    let result = train_with(env, params, |record, summary| {
        if let Err(e) = writer.append(record) {
            failed = Some(e);
            return ControlFlow::Break(());
        }
        observer(record, summary)
    })?;
    if let Some(e) = failed {
        return Err(e);
    }
    writer.finish(env, &result)?;
    Ok(result)
}

/// Batch equivalent of a full service run.
pub fn learn_to_dir(
    dataset: &Dataset,
    env: &Environment,
    constraints: &str,
    workload: &str,
    params: &LearnParams,
    out: &Path,
) -> Result<RunResult, RunDirError> {
    params.validate()?;
    let writer = RunWriter::create(out, dataset, constraints, workload, params)?;
    train_into(writer, env, params, |_, _| ControlFlow::Continue(()))
}

/// Rebuilds the schema named by a signature, `None` when the text is not a
/// realizable partition of the environment's attributes.
pub fn state_of(env: &Environment, signature: &str) -> Option<SchemaState> {
    let groups = parse_partition(signature).ok()?;
    materialize(env, &groups).ok()?.ok()
}

/// A finished or partial run read back from disk.
pub struct LoadedRun {
    pub dataset: Dataset,
    pub env: Environment,
    /// `None` while the run has not finished.
    pub result: Option<serde_json::Value>,
}

impl LoadedRun {
    pub fn open(root: &Path) -> Result<Self, RunDirError> {
        let (dataset, env) = load_environment(&root.join(MANIFEST), &root.join(CONSTRAINTS), &root.join(WORKLOAD))?;
        let path = root.join(RESULT);
        let result = match fs::read_to_string(&path) {
            Ok(text) => Some(
                serde_json::from_str(&text)
                    .map_err(|e| RunDirError::Format { path: path.clone(), message: e.to_string() })?,
            ),
            Err(e) if e.kind() == io::ErrorKind::NotFound => None,
            Err(e) => return Err(RunDirError::Io { path, source: e }),
        };
        Ok(LoadedRun { dataset, env, result })
    }

    pub fn best_by_time(&self) -> Option<&str> {
        self.result.as_ref()?.pointer("/best_by_time/signature")?.as_str()
    }
}
