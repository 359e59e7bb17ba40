//! Episode runner, evaluation metrics, significance testing and result
//! export.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::path::Path as FsPath;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::baseline::{BaselineController, ControllerParams};
use crate::env::{Env, EpisodeConfig, Observation, StepResult};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::perception::EncoderSpec;
use crate::sim::{ActionDelta, LimitSurfaceParams};
use crate::world::{self, SuiteId};

/// Something that turns observations into actions.
pub trait Policy {
    fn name(&self) -> &str;

    /// Called after every reset.
    fn begin(&mut self, _env: &Env, _obs: &Observation) -> Result<()> {
        Ok(())
    }

    fn act(&mut self, env: &Env, obs: &Observation) -> Result<ActionDelta>;

    /// Called after every step with its outcome.
    fn observe(&mut self, _result: &StepResult) -> Result<()> {
        Ok(())
    }
}

/// The push/relocate controller; rebuilt at every reset.
pub struct BaselinePolicy {
    pub params: Option<ControllerParams>,
    controller: Option<BaselineController>,
}

impl BaselinePolicy {
    /// `params` of `None` picks the defaults for the episode's pushee.
    pub fn new(params: Option<ControllerParams>) -> Self {
        BaselinePolicy { params, controller: None }
    }
}

impl Policy for BaselinePolicy {
    fn name(&self) -> &str {
        "baseline"
    }

    fn begin(&mut self, env: &Env, _obs: &Observation) -> Result<()> {
        let world = env.world().ok_or(Error::NoEpisode)?;
        let params = self.params.clone().unwrap_or_else(|| ControllerParams::for_shape(&world.pushee().shape));
        self.controller = Some(BaselineController::new(world, params, env.sim.caps)?);
        Ok(())
    }

    fn act(&mut self, env: &Env, _obs: &Observation) -> Result<ActionDelta> {
        let world = env.world().ok_or(Error::NoEpisode)?;
        let ctl = self.controller.as_mut().ok_or(Error::NoEpisode)?;
        Ok(ctl.decide(world)?.action)
    }
}

/// Plays a fixed action list, then zeros.
pub struct ScriptedPolicy {
    pub actions: Vec<ActionDelta>,
    cursor: usize,
}

impl ScriptedPolicy {
    pub fn new(actions: Vec<ActionDelta>) -> Self {
        ScriptedPolicy { actions, cursor: 0 }
    }
}

impl Policy for ScriptedPolicy {
    fn name(&self) -> &str {
        "scripted"
    }

    fn begin(&mut self, _env: &Env, _obs: &Observation) -> Result<()> {
        self.cursor = 0;
        Ok(())
    }

    fn act(&mut self, _env: &Env, _obs: &Observation) -> Result<ActionDelta> {
        let a = self.actions.get(self.cursor).copied().unwrap_or(ActionDelta::ZERO);
        self.cursor += 1;
        Ok(a)
    }
}

/// An external agent reached over TCP. Each message is one JSON line:
/// the bench sends `{"event":"reset","obs":[..]}` or
/// `{"event":"step","obs":[..],"reward":{..},"done":b}` and expects
/// `{"action":[dx,dy,dth]}` back within the deadline.
pub struct ProtocolAgent {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    deadline: Duration,
    pending: Option<serde_json::Value>,
}

impl ProtocolAgent {
    pub fn connect(addr: impl ToSocketAddrs, deadline: Duration) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(deadline))?;
        Ok(ProtocolAgent { reader: BufReader::new(stream.try_clone()?), writer: stream, deadline, pending: None })
    }

    fn exchange(&mut self, msg: &serde_json::Value) -> Result<ActionDelta> {
        serde_json::to_writer(&mut self.writer, msg)?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        let mut line = String::new();
        match self.reader.read_line(&mut line) {
            Ok(0) => return Err(Error::Protocol("agent closed the connection".into())),
            Ok(_) => {}
            Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {
                return Err(Error::PolicyTimeout(self.deadline));
            }
            Err(e) => return Err(e.into()),
        }
        #[derive(Deserialize)]
        struct Reply {
            action: [f64; 3],
        }
        let reply: Reply = serde_json::from_str(&line).map_err(|e| Error::Protocol(format!("bad agent reply: {e}")))?;
        Ok(ActionDelta::from_array(reply.action))
    }
}

impl Policy for ProtocolAgent {
    fn name(&self) -> &str {
        "agent"
    }

    fn begin(&mut self, _env: &Env, obs: &Observation) -> Result<()> {
        self.pending = Some(json!({"event": "reset", "obs": obs}));
        Ok(())
    }

    fn act(&mut self, _env: &Env, obs: &Observation) -> Result<ActionDelta> {
        let msg = self.pending.take().unwrap_or_else(|| json!({"event": "step", "obs": obs}));
        self.exchange(&msg)
    }

    fn observe(&mut self, r: &StepResult) -> Result<()> {
        self.pending = Some(json!({"event": "step", "obs": r.observation, "reward": r.reward, "done": r.done}));
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub suite: SuiteId,
    pub seed: u64,
    pub success: bool,
    pub steps: u64,
    pub ee_trace: Vec<Vec2>,
    pub object_trace: Vec<Vec2>,
    pub contact_steps_after_first_touch: u64,
    pub steps_after_first_touch: u64,
    pub collision_steps: u64,
    pub initial_shortest_path: f64,
    pub object_path_length: f64,
    pub ee_path_length: f64,
    pub final_goal_distance: f64,
}

impl EpisodeRecord {
    /// Share of steps with contact, counted from the first touching step;
    /// 0 if the pushee was never touched.
    pub fn contact_rate(&self) -> f64 {
        if self.steps_after_first_touch == 0 {
            0.0
        } else {
            self.contact_steps_after_first_touch as f64 / self.steps_after_first_touch as f64
        }
    }

    pub fn collision_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.collision_steps as f64 / self.steps as f64
        }
    }
}

/// A complete replayable episode: the configuration, the actions taken and
/// the resulting traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub config: EpisodeConfig,
    pub start: Vec2,
    pub goal: Vec2,
    pub initial_path: Vec<Vec2>,
    pub actions: Vec<[f64; 3]>,
    pub record: EpisodeRecord,
}

fn polyline(points: &[Vec2]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Runs one episode to completion.
pub fn run_episode(policy: &mut dyn Policy, env: &mut Env, config: &EpisodeConfig) -> Result<Trace> {
    let mut obs = env.reset(config)?;
    let world = env.world().ok_or(Error::NoEpisode)?;
    let start = world.pushee().pose.position();
    let goal = world.goal.position();
    let initial_path = env.path().map(|p| p.waypoints.clone()).unwrap_or_default();
    let initial_shortest_path = env.normalizers().map_or(0.0, |n| n.path_length);
    let mut ee_trace = vec![world.ee().pose.position()];
    let mut object_trace = vec![start];
    policy.begin(env, &obs)?;
    let mut actions = Vec::new();
    let (mut first_touch, mut contact_steps, mut collision_steps) = (None, 0u64, 0u64);
    let mut last = None;
    while !env.is_done() {
        let action = policy.act(env, &obs)?;
        let r = env.step(&action)?;
        actions.push(action.to_array());
        let w = env.world().ok_or(Error::NoEpisode)?;
        ee_trace.push(w.ee().pose.position());
        object_trace.push(w.pushee().pose.position());
        if r.info.contact {
            first_touch.get_or_insert(r.info.step);
        }
        if first_touch.is_some() && r.info.contact {
            contact_steps += 1;
        }
        if r.info.collision {
            collision_steps += 1;
        }
        policy.observe(&r)?;
        obs = r.observation.clone();
        last = Some(r);
    }
    let steps = env.steps();
    let last = last.ok_or(Error::EmptyInput)?;
    let record = EpisodeRecord {
        suite: config.scenario.suite_id,
        seed: config.seed,
        success: last.info.goal_reached,
        steps,
        contact_steps_after_first_touch: contact_steps,
        steps_after_first_touch: first_touch.map_or(0, |t| steps - t + 1),
        collision_steps,
        initial_shortest_path,
        object_path_length: polyline(&object_trace),
        ee_path_length: polyline(&ee_trace),
        final_goal_distance: last.info.goal_distance,
        ee_trace,
        object_trace,
    };
    Ok(Trace { config: config.clone(), start, goal, initial_path, actions, record })
}

/// Configuration of episode `i` of a suite run: scenario variants cycle,
/// episode seeds count up from `seed`.
pub fn suite_episode_config(suite: SuiteId, i: usize, seed: u64, base: &EpisodeConfig) -> Result<EpisodeConfig> {
    let scenarios = world::scenario_suite(suite)?;
    let mut scenario = scenarios[i % scenarios.len()].clone();
    scenario.pushee_shape = base.scenario.pushee_shape.clone();
    Ok(EpisodeConfig { scenario, seed: seed.wrapping_add(i as u64), ..base.clone() })
}

/// Runs `episodes` episodes of a suite, in parallel, returning traces in
/// episode order. Episodes whose reset fails are skipped with their index
/// reported in the second vector.
pub fn run_suite(
    suite: SuiteId,
    episodes: usize,
    seed: u64,
    base: &EpisodeConfig,
    make_policy: &(dyn Fn() -> Box<dyn Policy> + Sync),
    encoder: &EncoderSpec,
    sim: &LimitSurfaceParams,
) -> Result<(Vec<Trace>, Vec<usize>)> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(episodes.max(1));
    let results: Vec<Vec<(usize, Result<Trace>)>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                s.spawn(move || {
                    let mut out = Vec::new();
                    let mut env = match Env::new(encoder.clone(), sim.clone()) {
                        Ok(e) => e,
                        Err(e) => return vec![(w, Err(e))],
                    };
                    let mut policy = make_policy();
                    for i in (w..episodes).step_by(workers) {
                        let r = suite_episode_config(suite, i, seed, base)
                            .and_then(|cfg| run_episode(policy.as_mut(), &mut env, &cfg));
                        out.push((i, r));
                    }
                    out
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut all: Vec<(usize, Result<Trace>)> = results.into_iter().flatten().collect();
    all.sort_by_key(|(i, _)| *i);
    let (mut traces, mut skipped) = (Vec::new(), Vec::new());
    for (i, r) in all {
        match r {
            Ok(t) => traces.push(t),
            Err(Error::ResetFailed(_)) => skipped.push(i),
            Err(e) => return Err(e),
        }
    }
    Ok((traces, skipped))
}

/// Success weighted by path length: mean of `S·ℓ / max(p, ℓ)`.
pub fn compute_spl(records: &[EpisodeRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum: f64 = records
        .iter()
        .map(|r| {
            if r.success {
                let l = r.initial_shortest_path;
                l / r.object_path_length.max(l)
            } else {
                0.0
            }
        })
        .sum();
    Ok(sum / records.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

/// Mean and sample standard deviation (0 below two values).
pub fn mean_sd(values: &[f64]) -> MeanSd {
    let n = values.len();
    if n == 0 {
        return MeanSd { mean: 0.0, sd: 0.0 };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    MeanSd { mean, sd }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub n_episodes: usize,
    pub success_rate: f64,
    pub contact_rate: MeanSd,
    pub collision_rate: MeanSd,
    pub spl: f64,
    /// Object path length over the selected subset.
    pub path_length: MeanSd,
    pub n_subset: usize,
}

/// Aggregates records. Contact rate, collision rate and path length are
/// taken over `subset` (e.g. episodes that every compared method solved);
/// by default over the successful episodes. Success rate and SPL always use
/// all records.
pub fn aggregate_metrics(records: &[EpisodeRecord], subset: Option<&[bool]>) -> Result<MetricsTable> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(s) = subset {
        if s.len() != records.len() {
            return Err(Error::LengthMismatch(s.len(), records.len()));
        }
    }
    let selected: Vec<&EpisodeRecord> = match subset {
        Some(s) => records.iter().zip(s).filter(|(_, k)| **k).map(|(r, _)| r).collect(),
        None => records.iter().filter(|r| r.success).collect(),
    };
    let n = records.len();
    let pick = |f: fn(&EpisodeRecord) -> f64| selected.iter().map(|r| f(r)).collect::<Vec<_>>();
    Ok(MetricsTable {
        n_episodes: n,
        success_rate: records.iter().filter(|r| r.success).count() as f64 / n as f64,
        contact_rate: mean_sd(&pick(EpisodeRecord::contact_rate)),
        collision_rate: mean_sd(&pick(EpisodeRecord::collision_rate)),
        spl: compute_spl(records)?,
        path_length: mean_sd(&pick(|r| r.object_path_length)),
        n_subset: selected.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p_value: f64,
    pub df: f64,
    pub significant: bool,
    /// All differences were identical, so the statistic is 0 or ±∞.
    pub degenerate_variance: bool,
}

/// Two-sided paired t-test on `a − b`.
pub fn paired_t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::InsufficientEntries { have: a.len(), need: 2 });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let df = n - 1.0;
    let MeanSd { mean, sd } = mean_sd(&d);
    if d.iter().all(|v| *v == d[0]) {
        let (t, p) = if mean == 0.0 { (0.0, 1.0) } else { (mean.signum() * f64::INFINITY, 0.0) };
        return Ok(TTest { t, p_value: p, df, significant: p < alpha, degenerate_variance: true });
    }
    let t = mean / (sd / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let p = 2.0 * dist.sf(t.abs());
    Ok(TTest { t, p_value: p, df, significant: p < alpha, degenerate_variance: false })
}

pub const EPISODE_CSV_HEADER: [&str; 14] = [
    "episode",
    "suite",
    "seed",
    "success",
    "steps",
    "contact_steps_after_first_touch",
    "steps_after_first_touch",
    "contact_rate",
    "collision_steps",
    "collision_rate",
    "initial_shortest_path",
    "object_path_length",
    "ee_path_length",
    "final_goal_distance",
];

/// Per-episode CSV, one row per record in [`EPISODE_CSV_HEADER`] order.
pub fn episodes_csv(records: &[EpisodeRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(EPISODE_CSV_HEADER)?;
    for (i, r) in records.iter().enumerate() {
        w.write_record([
            i.to_string(),
            r.suite.to_string(),
            r.seed.to_string(),
            (r.success as u8).to_string(),
            r.steps.to_string(),
            r.contact_steps_after_first_touch.to_string(),
            r.steps_after_first_touch.to_string(),
            r.contact_rate().to_string(),
            r.collision_steps.to_string(),
            r.collision_rate().to_string(),
            r.initial_shortest_path.to_string(),
            r.object_path_length.to_string(),
            r.ee_path_length.to_string(),
            r.final_goal_distance.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn metrics_csv(table: &MetricsTable) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "n_episodes",
        "success_rate",
        "contact_rate_mean",
        "contact_rate_sd",
        "collision_rate_mean",
        "collision_rate_sd",
        "spl",
        "path_length_mean",
        "path_length_sd",
        "n_subset",
    ])?;
    w.write_record([
        table.n_episodes.to_string(),
        table.success_rate.to_string(),
        table.contact_rate.mean.to_string(),
        table.contact_rate.sd.to_string(),
        table.collision_rate.mean.to_string(),
        table.collision_rate.sd.to_string(),
        table.spl.to_string(),
        table.path_length.mean.to_string(),
        table.path_length.sd.to_string(),
        table.n_subset.to_string(),
    ])?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// One row of a per-episode CSV, as read back for comparisons.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct EpisodeRow {
    pub episode: usize,
    pub suite: String,
    pub seed: u64,
    pub success: u8,
    pub steps: u64,
    pub contact_steps_after_first_touch: u64,
    pub steps_after_first_touch: u64,
    pub contact_rate: f64,
    pub collision_steps: u64,
    pub collision_rate: f64,
    pub initial_shortest_path: f64,
    pub object_path_length: f64,
    pub ee_path_length: f64,
    pub final_goal_distance: f64,
}

pub fn read_episodes_csv(path: &FsPath) -> Result<Vec<EpisodeRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn trace_json(trace: &Trace) -> Result<String> {
    Ok(serde_json::to_string_pretty(trace)?)
}

/// Writes `episodes.csv`, `metrics.csv` and `traces/episode_NNNN.json`.
pub fn export_results(traces: &[Trace], table: &MetricsTable, out_dir: &FsPath) -> Result<()> {
    fs::create_dir_all(out_dir.join("traces"))?;
    let records: Vec<EpisodeRecord> = traces.iter().map(|t| t.record.clone()).collect();
    fs::write(out_dir.join("episodes.csv"), episodes_csv(&records)?)?;
    fs::write(out_dir.join("metrics.csv"), metrics_csv(table)?)?;
    for (i, t) in traces.iter().enumerate() {
        fs::write(out_dir.join("traces").join(format!("episode_{i:04}.json")), trace_json(t)?)?;
    }
    Ok(())
}

/// Re-executes a trace's actions from its configuration.
pub fn replay_trace(trace: &Trace, encoder: &EncoderSpec, sim: &LimitSurfaceParams) -> Result<Trace> {
    let mut env = Env::new(encoder.clone(), sim.clone())?;
    let mut policy = ScriptedPolicy::new(trace.actions.iter().map(|a| ActionDelta::from_array(*a)).collect());
    run_episode(&mut policy, &mut env, &trace.config)
}

/// Paired comparison of two per-episode CSVs on the shared (suite, seed)
/// pairs, per metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub n_pairs: usize,
    pub metric: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub test: TTest,
}

pub fn compare_runs(a: &[EpisodeRow], b: &[EpisodeRow], alpha: f64) -> Result<Vec<Comparison>> {
    let key = |r: &EpisodeRow| (r.suite.clone(), r.seed);
    let pairs: Vec<(&EpisodeRow, &EpisodeRow)> =
        a.iter().filter_map(|ra| b.iter().find(|rb| key(rb) == key(ra)).map(|rb| (ra, rb))).collect();
    let both_solved: Vec<&(&EpisodeRow, &EpisodeRow)> =
        pairs.iter().filter(|(x, y)| x.success == 1 && y.success == 1).collect();
    let mut out = Vec::new();
    let mut push = |metric: &str, rows: &[&(&EpisodeRow, &EpisodeRow)], f: fn(&EpisodeRow) -> f64| -> Result<()> {
        let xa: Vec<f64> = rows.iter().map(|(x, _)| f(x)).collect();
        let xb: Vec<f64> = rows.iter().map(|(_, y)| f(y)).collect();
        if xa.len() < 2 {
            return Ok(());
        }
        out.push(Comparison {
            n_pairs: xa.len(),
            metric: metric.into(),
            mean_a: mean_sd(&xa).mean,
            mean_b: mean_sd(&xb).mean,
            test: paired_t_test(&xa, &xb, alpha)?,
        });
        Ok(())
    };
    let all: Vec<&(&EpisodeRow, &EpisodeRow)> = pairs.iter().collect();
    push("success", &all, |r| r.success as f64)?;
    push("contact_rate", &both_solved, |r| r.contact_rate)?;
    push("collision_rate", &both_solved, |r| r.collision_rate)?;
    push("path_length", &both_solved, |r| r.object_path_length)?;
    Ok(out)
}
