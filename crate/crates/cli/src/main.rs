mod config;
mod render;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use scout_core::planner::{expand_beliefs, pbvi_solve};
use scout_core::pomdp::export_cassandra;
use scout_core::sim::{metrics_csv, metrics_json, run_batch, Simulator};
use scout_core::{Belief, PolicyKind};

use crate::config::{parse_config, RunConfig};

const ALPHAS_SCHEMA: &str = "scout.alphas.v1";

/// Belief-space planning for eye-in-hand object search.
#[derive(Parser)]
#[command(name = "scout", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the search model as a Cassandra .pomdp file.
    Export(RunArgs),
    /// Run point-based value iteration and write the alpha vectors as JSON.
    Solve(RunArgs),
    /// Run one episode and report the outcome.
    Simulate(RunArgs),
    /// Compare policies over shared-seed episode batches.
    Bench(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override `sim.seed`.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Write the primary output here instead of stdout (simulate: the JSONL episode log).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Print a belief heatmap after every step (simulate).
    #[arg(long)]
    render: bool,
    /// Metrics format (bench).
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn load(args: &RunArgs) -> anyhow::Result<(RunConfig, PathBuf)> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read config {}", args.config.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| anyhow::anyhow!("{}: {e}", args.config.display()))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn export(args: &RunArgs) -> anyhow::Result<()> {
    let (cfg, base) = load(args)?;
    let model = cfg.build_model(&cfg.sensor_model(&base)?)?;
    emit(args.out.as_deref(), &export_cassandra(&model)?)
}

fn solve(args: &RunArgs) -> anyhow::Result<()> {
    let (cfg, base) = load(args)?;
    let model = cfg.build_model(&cfg.sensor_model(&base)?)?;
    let PolicyKind::Pbvi {
        iterations,
        expansion_rounds,
        max_beliefs,
        objective,
    } = cfg.pbvi
    else {
        unreachable!("pbvi settings are always a pbvi policy")
    };
    let start = model.initial_belief()?;
    let beliefs = expand_beliefs(&model, &start, expansion_rounds, max_beliefs);
    let alphas = pbvi_solve(&model, &beliefs, iterations, objective);
    let vectors: Vec<_> = alphas
        .vectors
        .iter()
        .map(|v| {
            serde_json::json!({
                "action": v.action.map(|a| model.actions[a].clone()),
                "values": v.values,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "schema": ALPHAS_SCHEMA,
        "variant": cfg.variant,
        "discount": model.discount,
        "objective": objective,
        "iterations": iterations,
        "beliefs": beliefs.len(),
        "initial_value": alphas.value(&start),
        "states": model.states,
        "actions": model.actions,
        "vectors": vectors,
    });
    emit(args.out.as_deref(), &(serde_json::to_string_pretty(&doc)? + "\n"))
}

fn simulate(args: &RunArgs) -> anyhow::Result<()> {
    let (cfg, base) = load(args)?;
    let sensor = cfg.sensor_model(&base)?;
    let sim = Simulator::new(cfg.episode_config(sensor.clone(), cfg.policy))?;
    let result = sim.run_episode(cfg.seed)?;
    if let Some(path) = &args.out {
        std::fs::write(path, result.to_jsonl()).with_context(|| format!("cannot write {}", path.display()))?;
    }
    let mut text = String::new();
    if args.render {
        let mut belief: Belief = sim.model().initial_belief()?;
        text.push_str(&format!("step 0\n{}", render::heatmap(&cfg.world, &belief)));
        for r in &result.records {
            belief = belief.bayes_update(r.view, r.observation, &sensor, &cfg.world)?;
            text.push_str(&render::frame(&cfg.world, r, &belief));
        }
    }
    text.push_str(&format!(
        "truth={} declared={} termination={}\n",
        result.truth,
        result.declared,
        serde_json::to_value(result.termination)?.as_str().unwrap_or("?")
    ));
    text.push_str(&format!("success={} steps={}\n", result.success, result.steps_taken));
    std::io::stdout().write_all(text.as_bytes())?;
    Ok(())
}

fn bench(args: &RunArgs) -> anyhow::Result<()> {
    let (cfg, base) = load(args)?;
    let sensor = cfg.sensor_model(&base)?;
    let rows = cfg
        .bench_policies
        .iter()
        .map(|&p| run_batch(&cfg.episode_config(sensor.clone(), p), cfg.episodes, cfg.workers))
        .collect::<Result<Vec<_>, _>>()?;
    let text = match args.format {
        Format::Csv => metrics_csv(&rows),
        Format::Json => metrics_json(&rows),
    };
    emit(args.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, result) = match &cli.command {
        Command::Export(a) => ("export", export(a)),
        Command::Solve(a) => ("solve", solve(a)),
        Command::Simulate(a) => ("simulate", simulate(a)),
        Command::Bench(a) => ("bench", bench(a)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("scout {name}: {e:#}");
            ExitCode::FAILURE
        }
    }
}
