use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use socnav_core::config::SimConfig;
use socnav_core::episode::Simulator;
use socnav_core::harness::{record_demonstrations, run_benchmark, BaselinePolicy, PolicySpec};
use socnav_core::server::{serve_stdio, serve_tcp, Session};
use socnav_core::world::WorldMap;

mod replay;

#[derive(Parser)]
#[command(name = "socnav", version, about = "2D social navigation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve one environment session over stdio or TCP.
    Serve(ServeArgs),
    /// Run baseline or external policies on the same seeded episodes.
    Bench(BenchArgs),
    /// Record (observation, action, reward, done) transitions of a baseline.
    Record(RecordArgs),
    /// Render a step log to one SVG file per frame.
    Replay(ReplayArgs),
    /// Check a map file's invariants.
    ValidateMap {
        /// Map file, or builtin:<name>.
        map: String,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Simulator config (JSON). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Transport {
    #[arg(long)]
    stdio: bool,
    /// Listen on 127.0.0.1:<PORT> for a single connection (0 picks a port).
    #[arg(long)]
    port: Option<u16>,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    transport: Transport,
    /// Append one JSON line per step to this file.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated: goalone, ref, random, halt, or "external:<cmd> [args]".
    #[arg(long, value_delimiter = ',', default_value = "goalone,ref,random,halt")]
    policies: Vec<PolicySpec>,
    #[arg(long, default_value_t = 200)]
    episodes: usize,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run episodes on one thread.
    #[arg(long)]
    serial: bool,
}

#[derive(Args)]
struct RecordArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value = "ref")]
    policy: BaselinePolicy,
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReplayArgs {
    /// Config whose map the log was recorded on.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Step log written by `serve --log`.
    #[arg(long)]
    log: PathBuf,
    /// Output directory for frame_NNNNN.svg files.
    #[arg(long)]
    out_dir: PathBuf,
    /// Render every n-th step.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    every: u64,
}

fn load_config(path: Option<&Path>) -> Result<(SimConfig, WorldMap)> {
    let (cfg, map) = match path {
        Some(path) => SimConfig::load(path)?,
        None => {
            let cfg = SimConfig::default();
            let map = cfg.load_map()?;
            (cfg, map)
        }
    };
    if let Some(issue) = map.validate().into_iter().next() {
        bail!("map '{}' is invalid: {issue}", map.name);
    }
    Ok((cfg, map))
}

fn simulator(args: &ConfigArgs) -> Result<Arc<Simulator>> {
    let (mut cfg, map) = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.scenario.seed = seed;
    }
    Ok(Arc::new(Simulator::new(cfg, Arc::new(map))?))
}

fn serve(args: ServeArgs) -> Result<()> {
    let sim = simulator(&args.config)?;
    let mut session = Session::new(sim);
    if let Some(path) = &args.log {
        let file =
            File::create(path).with_context(|| format!("cannot create log {}", path.display()))?;
        session = session.with_log(Box::new(BufWriter::new(file)));
    }
    if args.transport.stdio {
        serve_stdio(&mut session)?;
    } else {
        let port = args.transport.port.expect("clap requires a transport");
        serve_tcp(&mut session, port, |addr| {
            // Clients launching the server read the port from here.
            eprintln!("listening on {addr}");
        })?;
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let sim = simulator(&args.config)?;
    let report = run_benchmark(&sim, &args.policies, args.episodes, !args.serial)?;
    for p in &report.policies {
        log::info!(
            "{}: success {:.3}, max_force {:.4}",
            p.policy,
            p.success_rate,
            p.max_force.as_ref().map_or(f64::NAN, |m| m.mean)
        );
    }
    let json = report.to_json();
    match &args.out {
        Some(path) => std::fs::write(path, json + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{json}")?;
        }
    }
    Ok(())
}

fn record(args: RecordArgs) -> Result<()> {
    let sim = simulator(&args.config)?;
    let n = record_demonstrations(&sim, args.policy, args.episodes, &args.out)?;
    log::info!("wrote {n} transitions to {}", args.out.display());
    Ok(())
}

fn validate_map(spec: &str) -> Result<()> {
    let map = WorldMap::resolve(spec, None)?;
    let issues = map.validate();
    if issues.is_empty() {
        println!(
            "{}: ok ({} walls, {} nodes, {} edges, {} legal poses)",
            map.name,
            map.segments.len(),
            map.nav_nodes.len(),
            map.nav_edges.len(),
            map.legal_pose_indices.len()
        );
        return Ok(());
    }
    for issue in &issues {
        eprintln!("{spec}: {issue}");
    }
    bail!("{} invariant violation(s)", issues.len())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Serve(args) => serve(args),
        Command::Bench(args) => bench(args),
        Command::Record(args) => record(args),
        Command::Replay(args) => {
            let (_, map) = load_config(args.config.as_deref())?;
            let n = replay::render(&map, &args.log, &args.out_dir, args.every as usize)?;
            log::info!("wrote {n} frames to {}", args.out_dir.display());
            Ok(())
        }
        Command::ValidateMap { map } => validate_map(&map),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SOCNAV_LOG_LEVEL", "warn"))
        .init();
    // Usage errors exit with 2 inside parse().
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
