#![allow(dead_code)]

use std::collections::BinaryHeap;

use pushbench::geometry::{Aabb, Pose2D, ShapeSpec, Vec2};
use pushbench::perception::OccupancyGrid;
use pushbench::planner::line_of_sight;
use pushbench::world::{BodyState, Role, WorldState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn body(role: Role, shape: ShapeSpec, pose: Pose2D) -> BodyState {
    BodyState { pose, shape, role }
}

pub fn world(pushee: BodyState, ee: Pose2D, obstacles: Vec<BodyState>) -> WorldState {
    let mut bodies = vec![pushee, body(Role::EndEffector, ShapeSpec::disk(0.01), ee)];
    bodies.extend(obstacles);
    WorldState {
        bodies,
        bounds: Aabb::new(Vec2::new(-0.5, -0.5), Vec2::new(0.5, 0.5)),
        goal: Pose2D::new(0.3, 0.0, 0.0),
        time_step_index: 0,
    }
}

pub fn random_grid(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> OccupancyGrid {
    let mut g = OccupancyGrid::new(w, h, 1.0, Vec2::ZERO);
    for iy in 0..h {
        for ix in 0..w {
            if rng.random::<f64>() < density {
                g.set(ix, iy, true);
            }
        }
    }
    g
}

pub fn random_free_cell(rng: &mut ChaCha8Rng, g: &OccupancyGrid) -> Vec2 {
    loop {
        let (ix, iy) = (rng.random_range(0..g.width), rng.random_range(0..g.height));
        if !g.occupied(ix, iy) {
            return g.cell_center(ix, iy);
        }
    }
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}

/// Shortest path over the visibility graph of all free cell centers plus the
/// two endpoints. Edges are found lazily: a pair is only checked for line of
/// sight when it could improve the target's label.
pub fn visibility_oracle(g: &OccupancyGrid, start: Vec2, goal: Vec2) -> Option<f64> {
    let mut nodes = vec![start, goal];
    for iy in 0..g.height {
        for ix in 0..g.width {
            if !g.occupied(ix, iy) {
                nodes.push(g.cell_center(ix, iy));
            }
        }
    }
    let n = nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[0] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Entry(goal.distance(start), 0));
    while let Some(Entry(_, u)) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if u == 1 {
            return Some(dist[1]);
        }
        for v in 0..n {
            if done[v] {
                continue;
            }
            let d = dist[u] + nodes[u].distance(nodes[v]);
            if d < dist[v] && line_of_sight(g, nodes[u], nodes[v]) {
                dist[v] = d;
                heap.push(Entry(d + nodes[v].distance(goal), v));
            }
        }
    }
    None
}

/// Marks every cell whose center lies within `radius` of an occupied cell
/// center, by checking all pairs on integer cell offsets.
pub fn brute_inflate(g: &OccupancyGrid, radius: f64) -> OccupancyGrid {
    let r = radius / g.resolution;
    let occ: Vec<(i64, i64)> = (0..g.height)
        .flat_map(|iy| (0..g.width).map(move |ix| (ix, iy)))
        .filter(|&(ix, iy)| g.occupied(ix, iy))
        .map(|(ix, iy)| (ix as i64, iy as i64))
        .collect();
    let mut out = g.clone();
    for iy in 0..g.height {
        for ix in 0..g.width {
            let hit = occ.iter().any(|&(ox, oy)| {
                let (dx, dy) = (ox - ix as i64, oy - iy as i64);
                ((dx * dx + dy * dy) as f64).sqrt() <= r
            });
            if hit {
                out.set(ix, iy, true);
            }
        }
    }
    out
}

/// Inward motion below this is rounding in the tangent/radial split (commands
/// are around 1e-2 m, so f64 resolution is about 2e-18 m).
pub const RADIAL_TOLERANCE: f64 = 1e-15;

/// Baseline controller that also checks the relocation rule on every step:
/// while ψ is at or above the threshold the command must not move toward the
/// pushee.
pub struct CheckedBaseline {
    ctl: Option<pushbench::baseline::BaselineController>,
    pub steps: usize,
    pub relocating_steps: usize,
    pub violations: usize,
}

impl CheckedBaseline {
    pub fn new() -> Self {
        CheckedBaseline { ctl: None, steps: 0, relocating_steps: 0, violations: 0 }
    }
}

impl pushbench::bench::Policy for CheckedBaseline {
    fn name(&self) -> &str {
        "baseline"
    }

    fn begin(&mut self, env: &pushbench::env::Env, _obs: &pushbench::env::Observation) -> pushbench::Result<()> {
        let w = env.world().unwrap();
        let params = pushbench::baseline::ControllerParams::for_shape(&w.pushee().shape);
        self.ctl = Some(pushbench::baseline::BaselineController::new(w, params, env.sim.caps)?);
        Ok(())
    }

    fn act(&mut self, env: &pushbench::env::Env, _obs: &pushbench::env::Observation) -> pushbench::Result<pushbench::sim::ActionDelta> {
        let w = env.world().unwrap();
        let ctl = self.ctl.as_mut().unwrap();
        let d = ctl.decide(w)?;
        self.steps += 1;
        if d.psi >= 0.6 {
            self.relocating_steps += 1;
            if d.radial_toward > RADIAL_TOLERANCE {
                self.violations += 1;
            }
        }
        Ok(d.action)
    }
}
