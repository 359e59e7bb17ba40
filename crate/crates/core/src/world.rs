//! The planar world: workspace, pushee, obstacles and end effector, plus the
//! scenario suites and start/goal sampling.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{signed_distance, Aabb, Placed, Pose2D, ShapeSpec, Vec2};
use crate::perception;
use crate::planner;

/// Side length of the square workspace, centered on the origin.
pub const WORKSPACE_EXTENT: f64 = 1.0;
/// End-effector tip radius.
pub const EE_RADIUS: f64 = 0.01;
/// Nominal obstacle scale range for the single-obstacle suites.
pub const SCALE_RANGE: (f64, f64) = (0.8, 1.2);
/// Admissible inter-obstacle gaps for the gap suites.
pub const GAP_RANGE: (f64, f64) = (0.10, 0.20);
/// Ring around the pushee on which the end effector is placed at reset.
pub const EE_RING: (f64, f64) = (0.05, 0.10);
/// Corridor width between obstacles of the cluttered suites, as a multiple of
/// the pushee diameter.
pub const CORRIDOR_FACTOR: f64 = 1.2;

const SCENARIO_ATTEMPTS: usize = 1000;
const START_GOAL_ATTEMPTS: usize = 10_000;

pub fn default_bounds() -> Aabb {
    let h = WORKSPACE_EXTENT / 2.0;
    Aabb::new(Vec2::new(-h, -h), Vec2::new(h, h))
}

/// The pushee catalogue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PusheeKind {
    SmallCube,
    LargeCube,
    SmallCylinder,
    Fragment,
}

impl PusheeKind {
    pub const ALL: [PusheeKind; 4] =
        [PusheeKind::SmallCube, PusheeKind::LargeCube, PusheeKind::SmallCylinder, PusheeKind::Fragment];

    pub fn shape(self) -> ShapeSpec {
        match self {
            PusheeKind::SmallCube => ShapeSpec::rect(0.05, 0.05),
            PusheeKind::LargeCube => ShapeSpec::rect(0.08, 0.08),
            PusheeKind::SmallCylinder => ShapeSpec::disk(0.025),
            PusheeKind::Fragment => {
                let r = 0.035;
                let vertices = [0.0_f64, 55.0, 130.0, 175.0, 235.0, 300.0]
                    .iter()
                    .map(|deg| Vec2::from_angle(deg.to_radians()) * r)
                    .collect();
                ShapeSpec::ConvexPolygon { vertices }
            }
        }
    }
}

impl FromStr for PusheeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| Error::InvalidConfig(format!("unknown pushee `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Pushee,
    Obstacle,
    EndEffector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    pub pose: Pose2D,
    pub shape: ShapeSpec,
    pub role: Role,
}

impl BodyState {
    pub fn placed(&self) -> Placed {
        Placed::new(&self.shape, &self.pose)
    }
}

/// Full simulation state for one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub bodies: Vec<BodyState>,
    pub bounds: Aabb,
    pub goal: Pose2D,
    pub time_step_index: u64,
}

impl WorldState {
    fn index_of(&self, role: Role) -> usize {
        self.bodies
            .iter()
            .position(|b| b.role == role)
            .expect("world holds exactly one pushee and one end effector")
    }

    pub fn pushee(&self) -> &BodyState {
        &self.bodies[self.index_of(Role::Pushee)]
    }

    pub fn pushee_mut(&mut self) -> &mut BodyState {
        let i = self.index_of(Role::Pushee);
        &mut self.bodies[i]
    }

    pub fn ee(&self) -> &BodyState {
        &self.bodies[self.index_of(Role::EndEffector)]
    }

    pub fn ee_mut(&mut self) -> &mut BodyState {
        let i = self.index_of(Role::EndEffector);
        &mut self.bodies[i]
    }

    pub fn obstacles(&self) -> impl Iterator<Item = &BodyState> {
        self.bodies.iter().filter(|b| b.role == Role::Obstacle)
    }

    /// Checks the structural and initial-placement invariants.
    pub fn validate(&self) -> Result<()> {
        let count = |r| self.bodies.iter().filter(|b| b.role == r).count();
        if count(Role::Pushee) != 1 || count(Role::EndEffector) != 1 {
            return Err(Error::InvalidScenario("need exactly one pushee and one end effector".into()));
        }
        for b in &self.bodies {
            b.shape.validate().map_err(Error::InvalidScenario)?;
            if !b.pose.is_finite() {
                return Err(Error::InvalidScenario("non-finite pose".into()));
            }
        }
        let obstacles: Vec<Placed> = self.obstacles().map(BodyState::placed).collect();
        for i in 0..obstacles.len() {
            for j in i + 1..obstacles.len() {
                if signed_distance(&obstacles[i], &obstacles[j]) < 0.0 {
                    return Err(Error::InvalidScenario(format!("obstacles {i} and {j} overlap")));
                }
            }
        }
        let pushee = self.pushee();
        let p = pushee.placed();
        if obstacles.iter().any(|o| signed_distance(&p, o) < 0.0) {
            return Err(Error::InvalidScenario("pushee overlaps an obstacle".into()));
        }
        if self.bounds.inner_clearance(pushee.pose.position()) < pushee.shape.circumscribed_radius() {
            return Err(Error::InvalidScenario("pushee too close to the workspace edge".into()));
        }
        Ok(())
    }

    /// Rigidly translates every body, the goal and the bounds.
    pub fn translated(&self, offset: Vec2) -> WorldState {
        let mut w = self.clone();
        for b in &mut w.bodies {
            b.pose.x += offset.x;
            b.pose.y += offset.y;
        }
        w.goal.x += offset.x;
        w.goal.y += offset.y;
        w.bounds = Aabb::new(w.bounds.min + offset, w.bounds.max + offset);
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteId {
    FreeSpace,
    EnvA,
    EnvB,
    EnvC,
    EnvD,
    EnvE,
    Complex1,
    Complex2,
    Custom,
}

impl SuiteId {
    pub const ALL: [SuiteId; 9] = [
        SuiteId::FreeSpace,
        SuiteId::EnvA,
        SuiteId::EnvB,
        SuiteId::EnvC,
        SuiteId::EnvD,
        SuiteId::EnvE,
        SuiteId::Complex1,
        SuiteId::Complex2,
        SuiteId::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteId::FreeSpace => "free_space",
            SuiteId::EnvA => "env_a",
            SuiteId::EnvB => "env_b",
            SuiteId::EnvC => "env_c",
            SuiteId::EnvD => "env_d",
            SuiteId::EnvE => "env_e",
            SuiteId::Complex1 => "complex_1",
            SuiteId::Complex2 => "complex_2",
            SuiteId::Custom => "custom",
        }
    }

    /// Nominal gap of the gap suites.
    pub fn nominal_gap(self) -> Option<f64> {
        match self {
            SuiteId::EnvC => Some(0.20),
            SuiteId::EnvD => Some(0.15),
            SuiteId::EnvE => Some(0.10),
            _ => None,
        }
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SuiteId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownSuite(s.to_owned()))
    }
}

/// An explicitly placed obstacle (custom suite).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSpec {
    pub pose: Pose2D,
    pub shape: ShapeSpec,
}

/// Per-suite obstacle parameters. Unset values are drawn from the scenario
/// seed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ObstacleParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yaw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub obstacles: Vec<ObstacleSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub suite_id: SuiteId,
    #[serde(default)]
    pub obstacle_params: ObstacleParams,
    pub pushee_shape: ShapeSpec,
    pub rng_seed: u64,
}

impl ScenarioSpec {
    pub fn new(suite_id: SuiteId, pushee: PusheeKind, rng_seed: u64) -> Self {
        ScenarioSpec {
            suite_id,
            obstacle_params: ObstacleParams { gap: suite_id.nominal_gap(), ..Default::default() },
            pushee_shape: pushee.shape(),
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pushee_shape.validate().map_err(Error::InvalidScenario)?;
        let p = &self.obstacle_params;
        if let Some(gap) = p.gap {
            if matches!(self.suite_id, SuiteId::EnvC | SuiteId::EnvD | SuiteId::EnvE)
                && !(GAP_RANGE.0 - 1e-12..=GAP_RANGE.1 + 1e-12).contains(&gap)
            {
                return Err(Error::InvalidScenario(format!("gap {gap} outside [0.10, 0.20] m")));
            }
        }
        if let Some(scale) = p.scale {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::InvalidScenario(format!("scale must be > 0, got {scale}")));
            }
        }
        if let Some(yaw) = p.yaw {
            if !yaw.is_finite() {
                return Err(Error::InvalidScenario("yaw must be finite".into()));
            }
        }
        for o in &p.obstacles {
            o.shape.validate().map_err(Error::InvalidScenario)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: ScenarioSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }
}

fn obstacle(pose: Pose2D, shape: ShapeSpec) -> BodyState {
    BodyState { pose, shape, role: Role::Obstacle }
}

fn scaled_shape(shape: &ShapeSpec, s: f64) -> ShapeSpec {
    match shape {
        ShapeSpec::Disk { radius } => ShapeSpec::disk(radius * s),
        ShapeSpec::Box { half_extents } => ShapeSpec::Box { half_extents: [half_extents[0] * s, half_extents[1] * s] },
        ShapeSpec::ConvexPolygon { vertices } => {
            ShapeSpec::ConvexPolygon { vertices: vertices.iter().map(|v| *v * s).collect() }
        }
    }
}

fn single_obstacle(rng: &mut ChaCha8Rng, params: &ObstacleParams, nominal: ShapeSpec) -> Vec<BodyState> {
    let yaw = params.yaw.unwrap_or_else(|| rng.random_range(-PI / 2.0..PI / 2.0));
    let scale = params.scale.unwrap_or_else(|| rng.random_range(SCALE_RANGE.0..=SCALE_RANGE.1));
    vec![obstacle(Pose2D::new(0.0, 0.0, yaw), scaled_shape(&nominal, scale))]
}

/// Two wall segments along y at x = 0 with an edge-to-edge gap between them.
fn gap_pair(gap: f64) -> Vec<BodyState> {
    let (thickness, length) = (0.06, 0.35);
    let offset = gap / 2.0 + length / 2.0;
    vec![
        obstacle(Pose2D::new(0.0, offset, 0.0), ShapeSpec::rect(thickness, length)),
        obstacle(Pose2D::new(0.0, -offset, 0.0), ShapeSpec::rect(thickness, length)),
    ]
}

fn cluttered(rng: &mut ChaCha8Rng, count: usize, pushee_diameter: f64) -> Result<Vec<BodyState>> {
    let min_gap = CORRIDOR_FACTOR * pushee_diameter;
    let max_neighbor_gap = 2.5 * pushee_diameter;
    let region = 0.3;
    let mut placed: Vec<BodyState> = Vec::with_capacity(count);
    let mut attempts = 0;
    while placed.len() < count {
        attempts += 1;
        if attempts > SCENARIO_ATTEMPTS {
            return Err(Error::InvalidScenario(format!(
                "could not place {count} obstacles within {SCENARIO_ATTEMPTS} samples"
            )));
        }
        let shape = if rng.random_bool(0.6) {
            ShapeSpec::rect(rng.random_range(0.04..0.12), rng.random_range(0.04..0.12))
        } else {
            ShapeSpec::disk(rng.random_range(0.025..0.06))
        };
        let pose = Pose2D::new(
            rng.random_range(-region..region),
            rng.random_range(-region..region),
            rng.random_range(-PI..PI),
        );
        let candidate = obstacle(pose, shape);
        let cp = candidate.placed();
        let gaps: Vec<f64> = placed.iter().map(|o| signed_distance(&cp, &o.placed())).collect();
        let clear = gaps.iter().all(|g| *g >= min_gap);
        let clustered = placed.is_empty() || gaps.iter().any(|g| *g <= max_neighbor_gap);
        if clear && clustered {
            placed.push(candidate);
        }
    }
    Ok(placed)
}

fn place_obstacles(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Result<Vec<BodyState>> {
    let params = &spec.obstacle_params;
    let diameter = spec.pushee_shape.circumscribed_diameter();
    Ok(match spec.suite_id {
        SuiteId::FreeSpace => Vec::new(),
        SuiteId::EnvA => single_obstacle(rng, params, ShapeSpec::rect(0.12, 0.12)),
        SuiteId::EnvB => single_obstacle(rng, params, ShapeSpec::rect(0.30, 0.05)),
        id @ (SuiteId::EnvC | SuiteId::EnvD | SuiteId::EnvE) => {
            gap_pair(params.gap.or(id.nominal_gap()).expect("gap suites have a nominal gap"))
        }
        SuiteId::Complex1 => cluttered(rng, 5, diameter)?,
        SuiteId::Complex2 => cluttered(rng, 7, diameter)?,
        SuiteId::Custom => params.obstacles.iter().map(|o| obstacle(o.pose, o.shape.clone())).collect(),
    })
}

/// Samples a pushee position with edge clearance ≥ its circumscribed radius
/// and no obstacle within that radius.
fn place_pushee(bounds: &Aabb, obstacles: &[BodyState], shape: &ShapeSpec, rng: &mut ChaCha8Rng) -> Option<Pose2D> {
    let r = shape.circumscribed_radius();
    let placed: Vec<Placed> = obstacles.iter().map(BodyState::placed).collect();
    for _ in 0..SCENARIO_ATTEMPTS {
        let p = Vec2::new(
            rng.random_range(bounds.min.x + r..=bounds.max.x - r),
            rng.random_range(bounds.min.y + r..=bounds.max.y - r),
        );
        let disk = Placed::Disk { center: p, radius: r };
        if placed.iter().all(|o| signed_distance(&disk, o) > 0.0) {
            return Some(Pose2D::new(p.x, p.y, rng.random_range(-PI..PI)));
        }
    }
    None
}

/// Places the end effector on the reset ring around the pushee, clear of all
/// bodies by more than the contact epsilon and inside the workspace.
pub fn place_ee_on_ring(world: &WorldState, rng: &mut ChaCha8Rng) -> Option<Pose2D> {
    let center = world.pushee().pose.position();
    let pushee = world.pushee().placed();
    let others: Vec<Placed> = world.obstacles().map(BodyState::placed).collect();
    let margin = crate::sim::CONTACT_EPSILON;
    for _ in 0..SCENARIO_ATTEMPTS {
        let radius = rng.random_range(EE_RING.0..=EE_RING.1);
        let angle = rng.random_range(-PI..PI);
        let p = center + Vec2::from_angle(angle) * radius;
        if world.bounds.inner_clearance(p) < EE_RADIUS {
            continue;
        }
        let disk = Placed::Disk { center: p, radius: EE_RADIUS };
        if signed_distance(&disk, &pushee) > margin && others.iter().all(|o| signed_distance(&disk, o) > margin) {
            return Some(Pose2D::new(p.x, p.y, rng.random_range(-PI..PI)));
        }
    }
    None
}

/// Builds the world described by `spec`. Pure in `spec`.
pub fn make_scenario(spec: &ScenarioSpec) -> Result<WorldState> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let bounds = default_bounds();
    let obstacles = place_obstacles(spec, &mut rng)?;
    let pushee_pose = place_pushee(&bounds, &obstacles, &spec.pushee_shape, &mut rng)
        .ok_or_else(|| Error::InvalidScenario("no free pushee placement".into()))?;
    let mut bodies = vec![
        BodyState { pose: pushee_pose, shape: spec.pushee_shape.clone(), role: Role::Pushee },
        BodyState { pose: Pose2D::new(0.0, 0.0, 0.0), shape: ShapeSpec::disk(EE_RADIUS), role: Role::EndEffector },
    ];
    bodies.extend(obstacles);
    let mut world = WorldState { bodies, bounds, goal: pushee_pose, time_step_index: 0 };
    let ee = place_ee_on_ring(&world, &mut rng)
        .ok_or_else(|| Error::InvalidScenario("no free end-effector placement".into()))?;
    world.ee_mut().pose = ee;
    world.validate()?;
    Ok(world)
}

/// Samples a start and goal for the pushee with Euclidean distance in
/// `[d_min, d_max]`, both free on the inflated planning grid and connected by
/// a grid path.
pub fn sample_start_goal(world: &WorldState, d_min: f64, d_max: f64, rng_seed: u64) -> Result<(Pose2D, Pose2D)> {
    if !(d_min >= 0.0 && d_min <= d_max) {
        return Err(Error::InvalidConfig(format!("need 0 <= d_min <= d_max, got [{d_min}, {d_max}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let grid = perception::planning_grid(world);
    let r = world.pushee().shape.circumscribed_radius();
    let b = world.bounds;
    let admissible = |p: Vec2| b.inner_clearance(p) >= r && grid.is_free_at(p);
    let mut planner = planner::LazyThetaStar::default();
    for _ in 0..START_GOAL_ATTEMPTS {
        let start = Vec2::new(rng.random_range(b.min.x + r..=b.max.x - r), rng.random_range(b.min.y + r..=b.max.y - r));
        let d = if d_min == d_max { d_min } else { rng.random_range(d_min..=d_max) };
        let goal = start + Vec2::from_angle(rng.random_range(-PI..PI)) * d;
        if !admissible(start) || !admissible(goal) {
            continue;
        }
        if planner.plan(&grid, start, goal).is_ok() {
            let start_pose = Pose2D::new(start.x, start.y, rng.random_range(-PI..PI));
            let goal_pose = Pose2D::new(goal.x, goal.y, rng.random_range(-PI..PI));
            return Ok((start_pose, goal_pose));
        }
    }
    Err(Error::NoValidPlacement { attempts: START_GOAL_ATTEMPTS })
}

/// Number of scenario variants listed per suite.
pub const SUITE_VARIANTS: u64 = 10;

/// Scenario specs making up a suite, for the training pushee.
pub fn scenario_suite(suite_id: SuiteId) -> Result<Vec<ScenarioSpec>> {
    scenario_suite_for(suite_id, PusheeKind::SmallCube)
}

pub fn scenario_suite_for(suite_id: SuiteId, pushee: PusheeKind) -> Result<Vec<ScenarioSpec>> {
    if suite_id == SuiteId::Custom {
        return Err(Error::UnknownSuite("custom scenarios are file-defined".into()));
    }
    Ok((0..SUITE_VARIANTS).map(|i| ScenarioSpec::new(suite_id, pushee, i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn free_space_has_no_obstacles() {
        let w = make_scenario(&ScenarioSpec::new(SuiteId::FreeSpace, PusheeKind::SmallCube, 7)).unwrap();
        assert_eq!(w.obstacles().count(), 0);
    }

    #[test]
    fn env_c_gap_is_twenty_centimeters() {
        let w = make_scenario(&ScenarioSpec::new(SuiteId::EnvC, PusheeKind::SmallCube, 1)).unwrap();
        let obs: Vec<Placed> = w.obstacles().map(BodyState::placed).collect();
        assert_eq!(obs.len(), 2);
        let gap = signed_distance(&obs[0], &obs[1]);
        assert!((gap - 0.200).abs() <= 0.001, "gap {gap}");
    }

    #[test]
    fn scenario_is_deterministic() {
        for suite in [SuiteId::EnvA, SuiteId::Complex2] {
            let spec = ScenarioSpec::new(suite, PusheeKind::Fragment, 11);
            assert_eq!(make_scenario(&spec).unwrap(), make_scenario(&spec).unwrap());
        }
    }

    #[test]
    fn env_a_has_one_randomized_obstacle() {
        let suite = scenario_suite(SuiteId::EnvA).unwrap();
        let worlds: Vec<WorldState> = suite.iter().map(|s| make_scenario(s).unwrap()).collect();
        assert!(worlds.iter().all(|w| w.obstacles().count() == 1));
        let yaws: Vec<f64> = worlds.iter().map(|w| w.obstacles().next().unwrap().pose.theta).collect();
        assert!(yaws.windows(2).any(|p| p[0] != p[1]));
        for w in &worlds {
            let o = w.obstacles().next().unwrap();
            let ShapeSpec::Box { half_extents } = o.shape else { panic!() };
            let scale = half_extents[0] / 0.06;
            assert!((SCALE_RANGE.0..=SCALE_RANGE.1).contains(&scale));
        }
    }

    #[test]
    fn out_of_range_gap_rejected() {
        let mut spec = ScenarioSpec::new(SuiteId::EnvD, PusheeKind::SmallCube, 0);
        spec.obstacle_params.gap = Some(0.3);
        assert!(matches!(make_scenario(&spec), Err(Error::InvalidScenario(_))));
    }

    #[test]
    fn unknown_suite_name() {
        assert!(matches!("env_z".parse::<SuiteId>(), Err(Error::UnknownSuite(_))));
        assert_eq!("complex_1".parse::<SuiteId>().unwrap(), SuiteId::Complex1);
    }

    #[test]
    fn degenerate_distance_interval() {
        let w = make_scenario(&ScenarioSpec::new(SuiteId::FreeSpace, PusheeKind::SmallCube, 3)).unwrap();
        let (s, g) = sample_start_goal(&w, 0.3, 0.3, 5).unwrap();
        assert!((s.position().distance(g.position()) - 0.3).abs() <= 1e-9);
    }

    #[test]
    fn impossible_placement_errors() {
        let w = make_scenario(&ScenarioSpec::new(SuiteId::FreeSpace, PusheeKind::SmallCube, 3)).unwrap();
        assert!(matches!(sample_start_goal(&w, 5.0, 6.0, 1), Err(Error::NoValidPlacement { .. })));
    }

    #[test]
    fn scenario_json_roundtrip() {
        let mut spec = ScenarioSpec::new(SuiteId::EnvA, PusheeKind::Fragment, 9);
        spec.obstacle_params.yaw = Some(0.123456789012345);
        let back = ScenarioSpec::from_json(&spec.to_json().unwrap()).unwrap();
        assert_eq!(spec, back);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn start_goal_distance_within_bounds(seed in any::<u64>()) {
            let w = make_scenario(&ScenarioSpec::new(SuiteId::FreeSpace, PusheeKind::SmallCube, seed % 10)).unwrap();
            let (s, g) = sample_start_goal(&w, 0.2, 0.6, seed).unwrap();
            let d = s.position().distance(g.position());
            prop_assert!((0.2..=0.6).contains(&d));
        }

        #[test]
        fn generated_worlds_are_valid(seed in 0u64..200, suite in 0usize..8) {
            let spec = ScenarioSpec::new(SuiteId::ALL[suite], PusheeKind::SmallCube, seed);
            let w = make_scenario(&spec).unwrap();
            prop_assert!(w.validate().is_ok());
        }
    }
}
