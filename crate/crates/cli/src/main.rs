// Copyright 2026 The neo-lite Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! `neo`: generate a synthetic database, bootstrap from the expert, train
//! the value network episode by episode, and plan queries with it.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand};
use neo_core::driver::{EpisodeMetrics, RunState, Split, METRICS_HEADER};
use neo_core::featurize::Variant;
use neo_core::plan::Query;
use neo_core::rvec::{build_sentences, train_embeddings, EmbeddingModel};
use neo_core::simdb::{generate_catalog, generate_workload, simulate_latency, Catalog};
use neo_core::valuemodel::CostMode;
use neo_core::{NeoError, Result};
use serde_json::json;

use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "neo", version, about = "Learned query optimizer over a synthetic database")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    show_config: bool,
    /// Worker threads for parallel search and simulation (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for catalog, workload, embeddings and driver.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Query featurization: one-hot, histogram or r-vector.
    #[arg(long, global = true)]
    variant: Option<Variant>,
    /// Training cost: absolute or relative (to the expert plan).
    #[arg(long, global = true)]
    cost_mode: Option<CostMode>,
    /// Search budget in expanded plans.
    #[arg(long, global = true, conflicts_with = "wallclock")]
    expansions: Option<usize>,
    /// Use a 250 ms wall-clock search budget instead of an expansion count.
    #[arg(long, global = true)]
    wallclock: bool,
    /// Reinitialize the network before every retraining.
    #[arg(long, global = true)]
    cold_start: bool,
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    #[arg(long, global = true)]
    workload: Option<PathBuf>,
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    /// Run-state directory.
    #[arg(long, global = true)]
    state: Option<PathBuf>,
    /// Metrics CSV that `train` appends to.
    #[arg(long, global = true)]
    metrics: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic catalog.
    GenCatalog,
    /// Generate a query workload over the catalog.
    GenWorkload,
    /// Train row-vector embeddings over the catalog.
    EmbedTrain,
    /// Split the workload, record expert plans and save a fresh run state.
    Bootstrap,
    /// Run training episodes on a saved state.
    Train {
        #[arg(long)]
        episodes: usize,
    },
    /// Plan and simulate every workload query with the current policy.
    Evaluate,
    /// Plan one query: a workload query id or a query JSON file.
    Optimize {
        #[arg(long)]
        query: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("neo: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &NeoError) -> u8 {
    match e {
        NeoError::Integrity(_) => 3,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.apply(&Overrides {
        seed: cli.seed,
        variant: cli.variant,
        cost_mode: cli.cost_mode,
        expansions: cli.expansions,
        wallclock: cli.wallclock,
        cold_start: cli.cold_start,
        catalog: cli.catalog,
        workload: cli.workload,
        embeddings: cli.embeddings,
        state: cli.state,
        metrics: cli.metrics,
    });
    cfg.validate()?;
    if cli.show_config {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| NeoError::Config(format!("cannot start {n} workers: {e}")))?;
    }
    let Some(command) = cli.command else {
        Cli::command()
            .error(ErrorKind::MissingSubcommand, "a subcommand is required unless --show-config is given")
            .exit();
    };
    let json = cli.json;
    match command {
        Command::GenCatalog => {
            let catalog = generate_catalog(&cfg.catalog, cfg.seeds.catalog)?;
            fs::write(&cfg.paths.catalog, catalog.to_json())?;
            report(json, json!({"catalog": cfg.paths.catalog, "hash": catalog.content_hash()}), || {
                format!("wrote {} ({})", cfg.paths.catalog.display(), catalog.content_hash())
            });
        }
        Command::GenWorkload => {
            let catalog = read_catalog(&cfg.paths.catalog)?;
            let queries = generate_workload(&catalog, &cfg.workload, cfg.seeds.workload)?;
            fs::write(&cfg.paths.workload, serde_json::to_string_pretty(&queries)?)?;
            report(json, json!({"workload": cfg.paths.workload, "queries": queries.len()}), || {
                format!("wrote {} queries to {}", queries.len(), cfg.paths.workload.display())
            });
        }
        Command::EmbedTrain => {
            let catalog = read_catalog(&cfg.paths.catalog)?;
            let model = train_embeddings(&build_sentences(&catalog, cfg.denormalize), &cfg.sgns)?;
            fs::write(&cfg.paths.embeddings, model.to_json())?;
            let loss = model.loss_history.last().copied().unwrap_or(f64::NAN);
            report(json, json!({"embeddings": cfg.paths.embeddings, "tokens": model.tokens.len(), "final_loss": loss}), || {
                format!(
                    "wrote {} ({} tokens, final loss {loss:.4})",
                    cfg.paths.embeddings.display(),
                    model.tokens.len()
                )
            });
        }
        Command::Bootstrap => {
            let catalog = Arc::new(read_catalog(&cfg.paths.catalog)?);
            let queries: Vec<Query> = read_json(&cfg.paths.workload)?;
            let embeddings = embeddings_for(&cfg, cfg.driver.variant)?;
            let mut state = RunState::new(catalog, queries, cfg.driver.clone(), embeddings)?;
            state.bootstrap()?;
            state.save(&cfg.paths.state)?;
            report(
                json,
                json!({"state": cfg.paths.state, "train": state.train.len(), "test": state.test.len()}),
                || {
                    format!(
                        "bootstrapped {} train / {} test queries into {}",
                        state.train.len(),
                        state.test.len(),
                        cfg.paths.state.display()
                    )
                },
            );
        }
        Command::Train { episodes } => {
            let mut state = load_state(&cfg)?;
            let fresh = !cfg.paths.metrics.exists();
            let mut out = fs::OpenOptions::new().create(true).append(true).open(&cfg.paths.metrics)?;
            if fresh {
                out.write_all(METRICS_HEADER.as_bytes())?;
            }
            for _ in 0..episodes {
                let m = state.run_episode()?;
                out.write_all(m.csv_rows().as_bytes())?;
                print_metrics(json, &m);
                state.save(&cfg.paths.state)?;
            }
        }
        Command::Evaluate => {
            let state = load_state(&cfg)?;
            let m = state.evaluate_all()?;
            if json {
                println!("{}", serde_json::to_string(&m)?);
            } else {
                print!("{METRICS_HEADER}{}", m.csv_rows());
                eprintln!("{}", summary(&m));
            }
        }
        Command::Optimize { query } => {
            let state = load_state(&cfg)?;
            let q = if Path::new(&query).is_file() {
                read_json::<Query>(Path::new(&query))?
            } else {
                state
                    .train
                    .iter()
                    .chain(&state.test)
                    .find(|q| q.id.as_str() == query)
                    .cloned()
                    .ok_or_else(|| NeoError::Config(format!("no query {query:?} in the workload")))?
            };
            let (plan, score) = state.plan_for(&q)?;
            let latency = simulate_latency(&state.catalog, &plan, &q, &state.config.latency)?;
            let predicted = score.map(|s| state.config.transform.invert(s));
            let out = json!({
                "query_id": q.id,
                "plan": plan,
                "predicted_cost": predicted,
                "simulated_latency": latency,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
    }
    Ok(())
}

fn report(json: bool, value: serde_json::Value, text: impl FnOnce() -> String) {
    if json {
        println!("{value}");
    } else {
        println!("{}", text());
    }
}

fn summary(m: &EpisodeMetrics) -> String {
    let fmt = |r: Option<f64>| r.map_or("-".into(), |r| format!("{r:.4}"));
    format!(
        "episode {}: train mean ratio {}, test mean ratio {}, test regressions {}",
        m.episode,
        fmt(m.train_mean_ratio),
        fmt(m.test_mean_ratio),
        m.regressions(Split::Test)
    )
}

fn print_metrics(json: bool, m: &EpisodeMetrics) {
    if json {
        println!(
            "{}",
            json!({
                "episode": m.episode,
                "train_mean_ratio": m.train_mean_ratio,
                "test_mean_ratio": m.test_mean_ratio,
                "test_regressions": m.regressions(Split::Test),
                "loss_first": m.loss_first,
                "loss_last": m.loss_last,
            })
        );
    } else {
        println!("{}", summary(m));
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| NeoError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| NeoError::Parse(format!("{}: {e}", path.display())))
}

fn read_catalog(path: &Path) -> Result<Catalog> {
    let text = fs::read_to_string(path)
        .map_err(|e| NeoError::Config(format!("cannot read {}: {e}", path.display())))?;
    Catalog::from_json(&text)
}

fn embeddings_for(cfg: &RunConfig, variant: Variant) -> Result<Option<Arc<EmbeddingModel>>> {
    if variant != Variant::RVector {
        return Ok(None);
    }
    let text = fs::read_to_string(&cfg.paths.embeddings).map_err(|e| {
        NeoError::Config(format!(
            "r-vector featurization needs embeddings at {} ({e}); run embed-train first",
            cfg.paths.embeddings.display()
        ))
    })?;
    Ok(Some(Arc::new(EmbeddingModel::from_json(&text)?)))
}

/// Loads the saved state. Its recorded config decides variant, cost mode
/// and network shape; the search budget comes from the current flags.
fn load_state(cfg: &RunConfig) -> Result<RunState> {
    let catalog = Arc::new(read_catalog(&cfg.paths.catalog)?);
    let probe: serde_json::Value = read_json(&cfg.paths.state.join("state.json"))
        .map_err(|e| NeoError::Integrity(format!("unreadable run state: {e}")))?;
    let variant: Variant = serde_json::from_value(probe["config"]["variant"].clone())
        .map_err(|e| NeoError::Integrity(format!("run state has no valid variant: {e}")))?;
    let embeddings = embeddings_for(cfg, variant)?;
    let mut state = RunState::load(&cfg.paths.state, catalog, embeddings)?;
    state.config.search = cfg.driver.search.clone();
    Ok(state)
}
