//! The episodic pushing environment: reset/step lifecycle, observation
//! assembly, reward and the curriculum schedule.

use std::collections::VecDeque;
use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::wrap_angle;
use crate::perception::{self, EncoderSpec, OccupancyGrid, LATENT_DIM};
use crate::planner::{self, LazyThetaStar, Path, SubgoalHistory, SubgoalPair, DEFAULT_SUBGOAL_LAG};
use crate::sim::{self, ActionDelta, LimitSurfaceParams};
use crate::world::{self, PusheeKind, ScenarioSpec, SuiteId, WorldState};

pub const OBS_DIM: usize = 49;
pub const ACTION_DIM: usize = 3;
/// Bumped whenever the observation layout or the wire format changes.
pub const LAYOUT_VERSION: u32 = 1;

/// Slices of the observation vector.
pub mod layout {
    use std::ops::Range;

    pub const LATENT: Range<usize> = 0..32;
    /// x, y, yaw of the end effector in the pushee frame, then pitch and roll.
    pub const EE_POSE: Range<usize> = 32..37;
    pub const JOINTS: Range<usize> = 37..43;
    pub const SG_NOW: Range<usize> = 43..45;
    pub const SG_LAGGED: Range<usize> = 45..47;
    pub const CONTACT: usize = 47;
    pub const GOAL_DISTANCE: usize = 48;
}

pub const REWARD_GOAL: f64 = 50.0;
pub const PENALTY_OUT_OF_BOUNDS: f64 = -10.0;
pub const PENALTY_COLLISION: f64 = -5.0;

/// Maximum start–goal distance per curriculum stage, in meters.
pub const CURRICULUM_LADDER: [f64; 6] = [0.06, 0.12, 0.2, 0.3, 0.45, 0.6];
pub const CURRICULUM_THRESHOLD: f64 = 0.8;
pub const CURRICULUM_MIN_EPISODES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn slice(&self, r: Range<usize>) -> &[f64] {
        &self.0[r]
    }

    pub fn contact(&self) -> bool {
        self.0[layout::CONTACT] == 1.0
    }

    pub fn goal_distance(&self) -> f64 {
        self.0[layout::GOAL_DISTANCE]
    }

    pub fn is_well_formed(&self) -> bool {
        self.0.len() == OBS_DIM && self.0.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub dist: f64,
    pub collision: f64,
    pub touch: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn new(dist: f64, collision: f64, touch: f64) -> Self {
        RewardBreakdown { dist, collision, touch, total: dist + collision + touch }
    }

    /// Whether `total` is exactly the sum of its parts.
    pub fn is_consistent(&self) -> bool {
        self.total == self.dist + self.collision + self.touch
    }
}

/// Everything the reward depends on for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardInputs {
    pub path_length: f64,
    pub initial_path_length: f64,
    pub ee_distance: f64,
    pub initial_ee_distance: f64,
    pub goal_reached: bool,
    pub out_of_bounds: bool,
    pub collision: bool,
    pub contact: bool,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        (a / b).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

pub fn compute_reward(inp: &RewardInputs) -> RewardBreakdown {
    let r_g = ratio(inp.path_length, inp.initial_path_length);
    let r_o = ratio(inp.ee_distance, inp.initial_ee_distance);
    let dist = if inp.goal_reached { REWARD_GOAL } else { -r_g - r_o };
    let collision = if inp.out_of_bounds {
        PENALTY_OUT_OF_BOUNDS
    } else if inp.collision {
        PENALTY_COLLISION
    } else {
        0.0
    };
    let touch = if inp.contact { r_o } else { 0.0 };
    RewardBreakdown::new(dist, collision, touch)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub scenario: ScenarioSpec,
    pub max_steps: u64,
    pub goal_tolerance: f64,
    /// Also require the pushee yaw to be within this many radians of the goal.
    pub goal_orientation_tolerance: Option<f64>,
    /// When set, caps `d_max` at the ladder value of this stage.
    pub curriculum_stage: Option<usize>,
    pub d_min: f64,
    pub d_max: f64,
    pub seed: u64,
    pub subgoal_lag: usize,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            scenario: ScenarioSpec::new(SuiteId::FreeSpace, PusheeKind::SmallCube, 0),
            max_steps: 500,
            goal_tolerance: 0.03,
            goal_orientation_tolerance: None,
            curriculum_stage: None,
            d_min: 0.2,
            d_max: 0.6,
            seed: 0,
            subgoal_lag: DEFAULT_SUBGOAL_LAG,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if !(self.d_min > 0.0 && self.d_min <= self.d_max && self.d_max <= 0.6) {
            return Err(Error::InvalidConfig(format!("need 0 < d_min <= d_max <= 0.6, got [{}, {}]", self.d_min, self.d_max)));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be positive".into()));
        }
        if !(self.goal_tolerance > 0.0) {
            return Err(Error::InvalidConfig("goal_tolerance must be positive".into()));
        }
        if let Some(stage) = self.curriculum_stage {
            if stage >= CURRICULUM_LADDER.len() {
                return Err(Error::InvalidConfig(format!("curriculum stage {stage} out of range")));
            }
        }
        Ok(())
    }

    /// The start–goal distance range after applying the curriculum stage.
    pub fn distance_range(&self) -> (f64, f64) {
        match self.curriculum_stage {
            Some(stage) => {
                let d_max = CURRICULUM_LADDER[stage];
                (self.d_min.min(d_max), d_max)
            }
            None => (self.d_min, self.d_max),
        }
    }
}

/// Next curriculum stage given the rolling success rate over `episodes`.
pub fn curriculum_advance(stage: usize, success_rate: f64, episodes: usize) -> usize {
    let last = CURRICULUM_LADDER.len() - 1;
    if episodes >= CURRICULUM_MIN_EPISODES && success_rate >= CURRICULUM_THRESHOLD {
        (stage + 1).min(last)
    } else {
        stage.min(last)
    }
}

/// Rolling success tracker driving [`curriculum_advance`].
#[derive(Debug, Clone, PartialEq)]
pub struct Curriculum {
    pub stage: usize,
    recent: VecDeque<bool>,
}

impl Default for Curriculum {
    fn default() -> Self {
        Curriculum { stage: 0, recent: VecDeque::with_capacity(CURRICULUM_MIN_EPISODES) }
    }
}

impl Curriculum {
    pub fn d_max(&self) -> f64 {
        CURRICULUM_LADDER[self.stage]
    }

    /// Records an episode outcome and returns the (possibly advanced) stage.
    pub fn record(&mut self, success: bool) -> usize {
        if self.recent.len() == CURRICULUM_MIN_EPISODES {
            self.recent.pop_front();
        }
        self.recent.push_back(success);
        let n = self.recent.len();
        let rate = self.recent.iter().filter(|s| **s).count() as f64 / n as f64;
        let next = curriculum_advance(self.stage, rate, n);
        if next != self.stage {
            self.stage = next;
            self.recent.clear();
        }
        self.stage
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub contact: bool,
    pub collision: bool,
    pub oob: bool,
    pub goal_reached: bool,
    pub path_len: f64,
    pub ee_distance: f64,
    pub goal_distance: f64,
    pub object_obstacle: bool,
    pub ee_obstacle: bool,
    pub replan_failed: bool,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub info: StepInfo,
}

/// Quantities latched at reset and used for normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizers {
    pub path_length: f64,
    pub ee_distance: f64,
    pub goal_distance: f64,
}

#[derive(Debug, Clone)]
struct Episode {
    config: EpisodeConfig,
    world: WorldState,
    grid: OccupancyGrid,
    path: Path,
    history: SubgoalHistory,
    norm: Normalizers,
    steps: u64,
    done: bool,
}

/// Observation for a world, given the current path and subgoals.
pub fn build_observation(
    world: &WorldState,
    subgoals: &SubgoalPair,
    encoder: &EncoderSpec,
    initial_goal_distance: f64,
) -> Result<Observation> {
    let pushee = world.pushee();
    let ee = world.ee();
    let depth = perception::render_depth(world);
    let window = perception::egocentric_window(&depth, pushee, ee);
    let latent = perception::encode_window(&window, encoder)?;
    debug_assert_eq!(latent.len(), LATENT_DIM);
    let mut v = Vec::with_capacity(OBS_DIM);
    v.extend(latent);
    let rel = pushee.pose.inverse_transform_point(ee.pose.position());
    v.extend([rel.x, rel.y, wrap_angle(ee.pose.theta - pushee.pose.theta), 0.0, 0.0]);
    v.extend([0.0; 6]);
    v.extend([subgoals.sg_now.x, subgoals.sg_now.y, subgoals.sg_lagged.x, subgoals.sg_lagged.y]);
    v.push(if sim::detect_contacts(world).ee_object { 1.0 } else { 0.0 });
    v.push(ratio_unclamped(pushee.pose.position().distance(world.goal.position()), initial_goal_distance));
    Ok(Observation(v))
}

fn ratio_unclamped(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}

/// A single environment instance.
#[derive(Debug, Clone, Default)]
pub struct Env {
    pub encoder: EncoderSpec,
    pub sim: LimitSurfaceParams,
    planner: LazyThetaStar,
    episode: Option<Episode>,
}

impl Env {
    pub fn new(encoder: EncoderSpec, sim: LimitSurfaceParams) -> Result<Self> {
        encoder.validate()?;
        sim.validate()?;
        Ok(Env { encoder, sim, planner: LazyThetaStar::default(), episode: None })
    }

    /// Builds the scenario, samples start, goal and end-effector pose, plans
    /// the initial path and returns the first observation.
    pub fn reset(&mut self, config: &EpisodeConfig) -> Result<Observation> {
        config.validate()?;
        let wrap = |e: Error| Error::ResetFailed(Box::new(e));
        let mut world = world::make_scenario(&config.scenario).map_err(wrap)?;
        let (d_min, d_max) = config.distance_range();
        let (start, goal) = world::sample_start_goal(&world, d_min, d_max, config.seed).map_err(wrap)?;
        world.pushee_mut().pose = start;
        world.goal = goal;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        let ee = world::place_ee_on_ring(&world, &mut rng)
            .ok_or(Error::NoValidPlacement { attempts: 1000 })
            .map_err(wrap)?;
        world.ee_mut().pose = ee;
        self.reset_with_world(world, config)
    }

    /// Starts an episode from a fully specified world (pushee at its start
    /// pose, goal set, end effector placed).
    pub fn reset_with_world(&mut self, world: WorldState, config: &EpisodeConfig) -> Result<Observation> {
        let wrap = |e: Error| Error::ResetFailed(Box::new(e));
        world.validate().map_err(wrap)?;
        let grid = perception::planning_grid(&world);
        let start = world.pushee().pose.position();
        let goal = world.goal.position();
        let path = self.planner.plan_relaxed(&grid, start, goal).map_err(wrap)?;
        let norm = Normalizers {
            path_length: path.length,
            ee_distance: world.ee().pose.position().distance(start),
            goal_distance: start.distance(goal),
        };
        let mut history = SubgoalHistory::new(config.subgoal_lag);
        let sg = planner::sample_subgoals(&path, &mut history, &world.pushee().pose)?;
        let obs = build_observation(&world, &sg, &self.encoder, norm.goal_distance)?;
        self.episode = Some(Episode { config: config.clone(), world, grid, path, history, norm, steps: 0, done: false });
        Ok(obs)
    }

    pub fn step(&mut self, action: &ActionDelta) -> Result<StepResult> {
        let ep = self.episode.as_mut().ok_or(Error::NoEpisode)?;
        if ep.done {
            return Err(Error::EpisodeFinished);
        }
        let out = sim::step_ee(&ep.world, action, &self.sim);
        ep.world = out.world;
        ep.steps += 1;
        let pushee = ep.world.pushee().pose;
        let goal = ep.world.goal;
        let replan = self.planner.plan_relaxed(&ep.grid, pushee.position(), goal.position());
        let replan_failed = replan.is_err();
        if let Ok(path) = replan {
            ep.path = path;
        }
        let goal_distance = pushee.position().distance(goal.position());
        let yaw_ok = ep
            .config
            .goal_orientation_tolerance
            .is_none_or(|tol| wrap_angle(pushee.theta - goal.theta).abs() <= tol);
        let goal_reached = goal_distance <= ep.config.goal_tolerance && yaw_ok;
        let ee_distance = ep.world.ee().pose.position().distance(pushee.position());
        let collision = out.object_obstacle_collision || out.ee_obstacle_collision;
        let reward = compute_reward(&RewardInputs {
            path_length: ep.path.length,
            initial_path_length: ep.norm.path_length,
            ee_distance,
            initial_ee_distance: ep.norm.ee_distance,
            goal_reached,
            out_of_bounds: out.out_of_bounds,
            collision,
            contact: out.ee_object_contact,
        });
        debug_assert!(reward.is_consistent());
        let sg = planner::sample_subgoals(&ep.path, &mut ep.history, &pushee)?;
        let observation = build_observation(&ep.world, &sg, &self.encoder, ep.norm.goal_distance)?;
        ep.done = goal_reached || out.out_of_bounds || ep.steps >= ep.config.max_steps;
        let info = StepInfo {
            contact: out.ee_object_contact,
            collision,
            oob: out.out_of_bounds,
            goal_reached,
            path_len: ep.path.length,
            ee_distance,
            goal_distance,
            object_obstacle: out.object_obstacle_collision,
            ee_obstacle: out.ee_obstacle_collision,
            replan_failed,
            step: ep.steps,
        };
        Ok(StepResult { observation, reward, done: ep.done, info })
    }

    pub fn world(&self) -> Option<&WorldState> {
        self.episode.as_ref().map(|e| &e.world)
    }

    /// The current global path of the pushee.
    pub fn path(&self) -> Option<&Path> {
        self.episode.as_ref().map(|e| &e.path)
    }

    /// The inflated obstacle grid used for planning this episode.
    pub fn planning_grid(&self) -> Option<&OccupancyGrid> {
        self.episode.as_ref().map(|e| &e.grid)
    }

    pub fn normalizers(&self) -> Option<Normalizers> {
        self.episode.as_ref().map(|e| e.norm)
    }

    pub fn config(&self) -> Option<&EpisodeConfig> {
        self.episode.as_ref().map(|e| &e.config)
    }

    pub fn steps(&self) -> u64 {
        self.episode.as_ref().map_or(0, |e| e.steps)
    }

    pub fn is_done(&self) -> bool {
        self.episode.as_ref().is_some_and(|e| e.done)
    }

    pub fn close(&mut self) {
        self.episode = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2D;

    fn inputs() -> RewardInputs {
        RewardInputs {
            path_length: 1.0,
            initial_path_length: 1.0,
            ee_distance: 0.1,
            initial_ee_distance: 0.1,
            goal_reached: false,
            out_of_bounds: false,
            collision: false,
            contact: false,
        }
    }

    #[test]
    fn stationary_reward() {
        assert_eq!(compute_reward(&inputs()), RewardBreakdown::new(-2.0, 0.0, 0.0));
    }

    #[test]
    fn contact_cancels_ee_term() {
        let r = compute_reward(&RewardInputs { path_length: 0.5, ee_distance: 0.03, contact: true, ..inputs() });
        assert_eq!(r.total, -0.5);
    }

    #[test]
    fn goal_branch() {
        let r = compute_reward(&RewardInputs { goal_reached: true, contact: true, ee_distance: 0.02, ..inputs() });
        assert_eq!(r.dist, 50.0);
        assert_eq!(r.total, 50.0 + 0.2);
    }

    #[test]
    fn collision_penalties() {
        assert_eq!(compute_reward(&RewardInputs { collision: true, ..inputs() }).collision, -5.0);
        let r = compute_reward(&RewardInputs { collision: true, out_of_bounds: true, ..inputs() });
        assert_eq!(r.collision, -10.0);
    }

    #[test]
    fn ratios_are_clamped() {
        let r = compute_reward(&RewardInputs { path_length: 3.0, ee_distance: 0.5, ..inputs() });
        assert_eq!(r.dist, -2.0);
    }

    #[test]
    fn curriculum_steps() {
        assert_eq!(curriculum_advance(0, 0.9, 50), 1);
        assert_eq!(curriculum_advance(5, 1.0, 100), 5);
        assert_eq!(curriculum_advance(2, 0.5, 100), 2);
        assert_eq!(curriculum_advance(2, 0.9, 49), 2);
        let mut c = Curriculum::default();
        for _ in 0..49 {
            assert_eq!(c.record(true), 0);
        }
        assert_eq!(c.record(true), 1);
        assert_eq!(c.d_max(), 0.12);
        for _ in 0..200 {
            c.record(false);
        }
        assert_eq!(c.stage, 1);
    }

    #[test]
    fn stage_sets_distance() {
        let cfg = EpisodeConfig { curriculum_stage: Some(0), d_min: 0.06, ..Default::default() };
        assert_eq!(cfg.distance_range(), (0.06, 0.06));
        let mut env = Env::default();
        env.reset(&cfg).unwrap();
        let w = env.world().unwrap();
        let d = w.pushee().pose.position().distance(w.goal.position());
        assert!((d - 0.06).abs() < 1e-12, "{d}");
    }

    #[test]
    fn reset_is_deterministic_and_free_space_latent_is_zero() {
        let cfg = EpisodeConfig { seed: 11, ..Default::default() };
        let a = Env::default().reset(&cfg).unwrap();
        let b = Env::default().reset(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.is_well_formed());
        assert!(a.slice(layout::LATENT).iter().all(|v| *v == 0.0));
        assert_eq!(a.goal_distance(), 1.0);
    }

    #[test]
    fn zero_action_first_step() {
        let mut env = Env::default();
        env.reset(&EpisodeConfig { seed: 3, ..Default::default() }).unwrap();
        let r = env.step(&ActionDelta::ZERO).unwrap();
        assert!(!r.done);
        assert_eq!(r.reward, RewardBreakdown::new(-2.0, 0.0, 0.0));
    }

    #[test]
    fn step_requires_episode() {
        let mut env = Env::default();
        assert!(matches!(env.step(&ActionDelta::ZERO), Err(Error::NoEpisode)));
        let cfg = EpisodeConfig { max_steps: 1, ..Default::default() };
        env.reset(&cfg).unwrap();
        assert!(env.step(&ActionDelta::ZERO).unwrap().done);
        assert!(matches!(env.step(&ActionDelta::ZERO), Err(Error::EpisodeFinished)));
    }

    #[test]
    fn ee_behind_pushee() {
        let mut env = Env::default();
        env.reset(&EpisodeConfig::default()).unwrap();
        let mut w = env.world().unwrap().clone();
        w.pushee_mut().pose = Pose2D::new(0.0, 0.0, 0.0);
        w.ee_mut().pose = Pose2D::new(-0.1, 0.0, 0.3);
        w.goal = Pose2D::new(0.3, 0.0, 0.0);
        let obs = env.reset_with_world(w, &EpisodeConfig::default()).unwrap();
        let ee = obs.slice(layout::EE_POSE);
        assert!((ee[0] + 0.1).abs() < 1e-15 && ee[1].abs() < 1e-15);
        assert!((ee[2] - 0.3).abs() < 1e-15);
        assert_eq!(&ee[3..], &[0.0, 0.0]);
    }

    #[test]
    fn invalid_config_rejected() {
        let bad = EpisodeConfig { d_min: 0.3, d_max: 0.2, ..Default::default() };
        assert!(matches!(Env::default().reset(&bad), Err(Error::InvalidConfig(_))));
        let bad = EpisodeConfig { d_max: 0.7, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
