use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pushbench::baseline::ControllerParams;
use pushbench::bench::{self, BaselinePolicy, Policy, ProtocolAgent, ScriptedPolicy, Trace};
use pushbench::env::{Env, EpisodeConfig};
use pushbench::geometry::Vec2;
use pushbench::perception::{EncoderSpec, OccupancyGrid};
use pushbench::planner::LazyThetaStar;
use pushbench::server::{Server, ServerConfig};
use pushbench::sim::{ActionDelta, LimitSurfaceParams};
use pushbench::world::{PusheeKind, ScenarioSpec, SuiteId};

#[derive(Parser)]
#[command(name = "pushbench", version, about = "Planar pushing simulation and benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scenario files.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
    /// Plan on a PGM occupancy grid and print the path as JSON.
    Plan {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, value_parser = parse_point)]
        start: Vec2,
        #[arg(long, value_parser = parse_point)]
        goal: Vec2,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the environment over TCP.
    Serve {
        #[arg(long, default_value_t = 5555)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[command(flatten)]
        env: EnvArgs,
    },
    #[command(subcommand)]
    Bench(BenchCmd),
    /// Re-run a recorded action sequence and write its episode CSV and trace.
    Replay {
        /// Trace to re-execute; its configuration and actions are used.
        #[arg(long, conflicts_with_all = ["scenario", "actions"])]
        trace: Option<PathBuf>,
        #[arg(long, requires = "actions")]
        scenario: Option<PathBuf>,
        /// JSON list of [dx, dy, dtheta] triples.
        #[arg(long, requires = "scenario")]
        actions: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        encoder: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Write a scenario spec as JSON.
    Gen {
        #[arg(long, value_parser = parse_suite)]
        suite: SuiteId,
        #[arg(long, default_value = "small_cube")]
        pushee: PusheeKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        gap: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct EnvArgs {
    /// Scenario spec JSON; defaults to free space.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Encoder weight file; defaults to the builtin encoder.
    #[arg(long)]
    encoder: Option<PathBuf>,
    #[arg(long)]
    d_min: Option<f64>,
    #[arg(long)]
    d_max: Option<f64>,
    #[arg(long)]
    max_steps: Option<u64>,
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Run a policy over a suite and export results.
    Run {
        #[arg(long, value_parser = parse_suite)]
        suite: SuiteId,
        #[arg(long, default_value = "baseline")]
        policy: String,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "small_cube")]
        pushee: PusheeKind,
        #[arg(long)]
        baseline_params: Option<PathBuf>,
        /// Address of an external agent (for `--policy agent`).
        #[arg(long)]
        agent: Option<String>,
        #[arg(long, default_value_t = 5000)]
        deadline_ms: u64,
        #[command(flatten)]
        env: EnvArgs,
    },
    /// Paired comparison of two result directories.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
}

fn parse_point(s: &str) -> std::result::Result<Vec2, String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok(Vec2::new(p(x)?, p(y)?))
}

fn parse_suite(s: &str) -> std::result::Result<SuiteId, String> {
    s.parse().map_err(|e: pushbench::Error| e.to_string())
}

fn write_or_print(out: Option<&FsPath>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_encoder(path: Option<&FsPath>) -> Result<EncoderSpec> {
    match path {
        Some(p) => Ok(EncoderSpec::from_weight_file(&fs::read_to_string(p)?)?),
        None => Ok(EncoderSpec::default()),
    }
}

fn load_scenario(path: &FsPath) -> Result<ScenarioSpec> {
    Ok(ScenarioSpec::from_json(&fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)?)
}

fn episode_config(args: &EnvArgs, pushee: PusheeKind) -> Result<EpisodeConfig> {
    let mut cfg = EpisodeConfig::default();
    cfg.scenario.pushee_shape = pushee.shape();
    if let Some(p) = &args.scenario {
        cfg.scenario = load_scenario(p)?;
    }
    if let Some(v) = args.d_min {
        cfg.d_min = v;
    }
    if let Some(v) = args.d_max {
        cfg.d_max = v;
    }
    if let Some(v) = args.max_steps {
        cfg.max_steps = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_replay(trace: &Trace, out: &FsPath) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("episodes.csv"), bench::episodes_csv(std::slice::from_ref(&trace.record))?)?;
    fs::write(out.join("trace.json"), bench::trace_json(trace)?)?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Scenario(ScenarioCmd::Gen { suite, pushee, seed, gap, out }) => {
            let mut spec = ScenarioSpec::new(suite, pushee, seed);
            if gap.is_some() {
                spec.obstacle_params.gap = gap;
            }
            spec.validate()?;
            write_or_print(out.as_deref(), &spec.to_json()?)?;
        }
        Cmd::Plan { grid, start, goal, out } => {
            let g = OccupancyGrid::from_pgm(&fs::read_to_string(&grid)?)?;
            let path = LazyThetaStar::default().plan(&g, start, goal)?;
            write_or_print(out.as_deref(), &serde_json::to_string_pretty(&path)?)?;
        }
        Cmd::Serve { port, host, env } => {
            let config = ServerConfig {
                episode: episode_config(&env, PusheeKind::SmallCube)?,
                encoder: load_encoder(env.encoder.as_deref())?,
                sim: LimitSurfaceParams::default(),
            };
            let server = Server::bind((host.as_str(), port), config)?;
            eprintln!("listening on {}", server.local_addr()?);
            server.run()?;
        }
        Cmd::Bench(BenchCmd::Run {
            suite,
            policy,
            episodes,
            seed,
            out,
            pushee,
            baseline_params,
            agent,
            deadline_ms,
            env,
        }) => {
            let base = episode_config(&env, pushee)?;
            let encoder = load_encoder(env.encoder.as_deref())?;
            let sim = LimitSurfaceParams::default();
            let params: Option<ControllerParams> = match &baseline_params {
                Some(p) => Some(serde_json::from_str(&fs::read_to_string(p)?)?),
                None => None,
            };
            let (traces, skipped) = match policy.as_str() {
                "baseline" => {
                    let make = move || Box::new(BaselinePolicy::new(params.clone())) as Box<dyn Policy>;
                    bench::run_suite(suite, episodes, seed, &base, &make, &encoder, &sim)?
                }
                "scripted" => {
                    let make = || Box::new(ScriptedPolicy::new(vec![])) as Box<dyn Policy>;
                    bench::run_suite(suite, episodes, seed, &base, &make, &encoder, &sim)?
                }
                "agent" => {
                    // One connection, episodes run in order.
                    let addr = agent.context("--agent is required for the agent policy")?;
                    let mut policy = ProtocolAgent::connect(addr.as_str(), Duration::from_millis(deadline_ms))?;
                    let mut env = Env::new(encoder.clone(), sim.clone())?;
                    let (mut traces, mut skipped) = (Vec::new(), Vec::new());
                    for i in 0..episodes {
                        let cfg = bench::suite_episode_config(suite, i, seed, &base)?;
                        match bench::run_episode(&mut policy, &mut env, &cfg) {
                            Ok(t) => traces.push(t),
                            Err(pushbench::Error::ResetFailed(_)) => skipped.push(i),
                            Err(e) => return Err(e.into()),
                        }
                    }
                    (traces, skipped)
                }
                other => bail!("unknown policy `{other}` (baseline, scripted, agent)"),
            };
            if traces.is_empty() {
                bail!("no episode could be reset");
            }
            let records: Vec<_> = traces.iter().map(|t| t.record.clone()).collect();
            let table = bench::aggregate_metrics(&records, None)?;
            bench::export_results(&traces, &table, &out)?;
            if !skipped.is_empty() {
                eprintln!("skipped {} episodes whose reset failed: {:?}", skipped.len(), skipped);
            }
            println!("{}", serde_json::to_string_pretty(&table)?);
        }
        Cmd::Bench(BenchCmd::Compare { a, b, alpha }) => {
            let ra = bench::read_episodes_csv(&a.join("episodes.csv"))?;
            let rb = bench::read_episodes_csv(&b.join("episodes.csv"))?;
            let cmp = bench::compare_runs(&ra, &rb, alpha)?;
            println!("{}", serde_json::to_string_pretty(&cmp)?);
        }
        Cmd::Replay { trace, scenario, actions, seed, out, encoder } => {
            let encoder = load_encoder(encoder.as_deref())?;
            let sim = LimitSurfaceParams::default();
            let (config, recorded, original) = match (trace, scenario, actions) {
                (Some(t), _, _) => {
                    let tr: Trace = serde_json::from_str(&fs::read_to_string(&t)?)?;
                    (tr.config.clone(), tr.actions.clone(), Some(tr))
                }
                (None, Some(s), Some(a)) => {
                    let scenario = load_scenario(&s)?;
                    let acts: Vec<[f64; 3]> = serde_json::from_str(&fs::read_to_string(&a)?)?;
                    (EpisodeConfig { scenario, seed, ..Default::default() }, acts, None)
                }
                _ => bail!("give either --trace or both --scenario and --actions"),
            };
            let mut env = Env::new(encoder, sim)?;
            let mut policy = ScriptedPolicy::new(recorded.iter().map(|a| ActionDelta::from_array(*a)).collect());
            let again = bench::run_episode(&mut policy, &mut env, &config)?;
            if let Some(out) = &out {
                write_replay(&again, out)?;
            }
            if let Some(orig) = original {
                if orig != again {
                    bail!("replayed trace differs from the recording");
                }
                eprintln!("replay matches the recorded trace ({} steps)", again.record.steps);
            }
        }
    }
    Ok(())
}
