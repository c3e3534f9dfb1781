use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mmschema_core::learner::{brute_force_optimum_with, DEFAULT_ORACLE_BOUND};
use mmschema_core::schema::parse_partition;
use mmschema_core::shred::dump_csv;
use mmschema_core::whatif::evaluate_whatif;
use mmschema_core::workload::CostMode;
use mmschema_core::{synth, Dataset, Environment, Execution, LearnParams};
use mmschema_service::{learn_to_dir, router, state_of, LoadedRun, Service};

#[derive(Parser)]
#[command(name = "mmschema", version, about = "Learn relational schemas for multi-model data")]
struct Cli {
    /// Cost queries one at a time instead of in parallel.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Inputs {
    /// Source manifest (JSON).
    manifest: PathBuf,
    /// Constraint file, one `a = b` per line.
    #[arg(long)]
    constraints: Option<PathBuf>,
    /// Workload file (JSON).
    #[arg(long)]
    workload: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Shred sources into one key/value CSV per attribute.
    Shred {
        manifest: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Train and write a run directory.
    Learn {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 0.9)]
        gamma: f64,
        #[arg(long, default_value_t = 0.9)]
        greedy: f64,
        #[arg(long, default_value_t = 20)]
        episodes: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Step cap per episode; defaults to attributes - 1.
        #[arg(long)]
        max_steps: Option<u32>,
        /// Reference workload cost echoed in progress events.
        #[arg(long)]
        baseline_time: Option<f64>,
        /// Reference storage in bytes echoed in progress events.
        #[arg(long)]
        baseline_space: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cost a grouping of attributes against a run's inputs.
    Whatif {
        rundir: PathBuf,
        /// Groups separated by `|`, ids by `,`, e.g. "0,3|1|2".
        #[arg(long)]
        groups: String,
    },
    /// Exhaustively search every reachable schema.
    Oracle {
        #[command(flatten)]
        inputs: Inputs,
        /// Refuse instances with more attributes than this.
        #[arg(long, default_value_t = DEFAULT_ORACLE_BOUND)]
        bound: usize,
    },
    /// Print CREATE TABLE statements for a schema seen in a run.
    ExportDdl {
        rundir: PathBuf,
        /// Defaults to the run's best-by-time schema.
        #[arg(long)]
        signature: Option<String>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: std::net::IpAddr,
        /// Where run directories are created.
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
        /// Base for relative source paths in posted manifests; defaults to
        /// the working directory.
        #[arg(long)]
        data_root: Option<PathBuf>,
    },
    /// Write a generated fixture (manifest, sources, constraints, workload).
    Synth {
        kind: Fixture,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Attribute count for the small fixture (4 to 6).
        #[arg(long, default_value_t = 5)]
        attrs: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Fixture {
    Demo,
    Canonical,
    Small,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(inputs: &Inputs, exec: Execution) -> Result<(Dataset, Environment, String, String)> {
    let ds = Dataset::load(&inputs.manifest)?;
    let constraints = inputs.constraints.as_deref().map(read).transpose()?.unwrap_or_default();
    let workload = read(&inputs.workload)?;
    let pool = ds.constraints(&constraints)?;
    let w = ds.workload(&workload)?;
    let env = ds.environment(pool, w, CostMode::Units, exec)?;
    Ok((ds, env, constraints, workload))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    match cli.command {
        Command::Shred { manifest, out } => {
            let ds = Dataset::load(&manifest)?;
            let files =
                dump_csv(&ds.catalog, &ds.tables, &out).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "{} facts, {} attributes, {} files in {}",
                ds.fact_count,
                ds.catalog.len(),
                files.len(),
                out.display()
            );
        }
        Command::Learn {
            inputs,
            alpha,
            gamma,
            greedy,
            episodes,
            seed,
            max_steps,
            baseline_time,
            baseline_space,
            out,
        } => {
            let params = LearnParams { alpha, gamma, greedy, episodes, max_steps, seed, baseline_time, baseline_space };
            let (ds, env, constraints, workload) = load(&inputs, exec)?;
            let r = learn_to_dir(&ds, &env, &constraints, &workload, &params, &out)?;
            println!("episodes      {}", r.completed_episodes());
            println!("initial       {} cost {} storage {}", r.initial.signature, r.initial.cost, r.initial.storage);
            println!(
                "best by time  {} cost {} storage {}",
                r.best_by_time.signature, r.best_by_time.cost, r.best_by_time.storage
            );
            println!(
                "best by space {} cost {} storage {}",
                r.best_by_space.signature, r.best_by_space.cost, r.best_by_space.storage
            );
            println!("schemas seen  {}", r.all_seen.len());
        }
        Command::Whatif { rundir, groups } => {
            let run = LoadedRun::open(&rundir)?;
            let groups = parse_partition(&groups)?;
            print_json(&evaluate_whatif(&run.env, &groups)?)?;
        }
        Command::Oracle { inputs, bound } => {
            let (_, env, _, _) = load(&inputs, exec)?;
            print_json(&brute_force_optimum_with(&env, bound, exec)?)?;
        }
        Command::ExportDdl { rundir, signature } => {
            let run = LoadedRun::open(&rundir)?;
            let signature = match signature.as_deref().or(run.best_by_time()) {
                Some(s) => s.to_string(),
                None => bail!("{} has no result.json; pass --signature", rundir.display()),
            };
            let Some(state) = state_of(&run.env, &signature) else {
                bail!("{signature} is not a realizable schema for this run");
            };
            print!("{}", mmschema_core::ddl::export(run.env.catalog(), &state));
        }
        Command::Serve { port, bind, runs, data_root } => {
            fs::create_dir_all(&runs).with_context(|| format!("creating {}", runs.display()))?;
            let data_root = match data_root {
                Some(d) => d,
                None => std::env::current_dir()?,
            };
            let service = Service::new(runs, data_root);
            let addr = SocketAddr::new(bind, port);
            tokio::runtime::Runtime::new()?.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                axum::serve(listener, router(service)).await?;
                anyhow::Ok(())
            })?;
        }
        Command::Synth { kind, out, seed, attrs } => {
            if matches!(kind, Fixture::Small) && !(4..=6).contains(&attrs) {
                bail!("--attrs must be between 4 and 6");
            }
            let fx = match kind {
                Fixture::Demo => synth::write_demo(&out, seed),
                Fixture::Canonical => synth::write_canonical(&out),
                Fixture::Small => synth::write_small(&out, seed, attrs),
            }
            .with_context(|| format!("writing {}", out.display()))?;
            println!("manifest    {}", fx.manifest.display());
            println!("constraints {}", fx.constraints.display());
            println!("workload    {}", fx.workload.display());
        }
    }
    Ok(())
}
