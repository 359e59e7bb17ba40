//! Any-angle global planning on occupancy grids with Lazy Theta*, and the
//! subgoal rule that turns a path into observation entries.
//!
//! Search nodes are cell centers, except that the start and goal cells use
//! the exact query points. A segment is traversable when none of the cells
//! it touches, corners included, is occupied or outside the grid.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose2D, Vec2};
use crate::perception::OccupancyGrid;

/// Fraction of the global path length at which the subgoal is taken.
pub const SUBGOAL_FRACTION: f64 = 0.20;
/// Default lag, in steps, of the second subgoal.
pub const DEFAULT_SUBGOAL_LAG: usize = 5;
/// How far (in cells) the start may be moved to reach a free cell.
pub const START_RELOCATION_CELLS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub waypoints: Vec<Vec2>,
    pub length: f64,
}

impl Path {
    pub fn new(waypoints: Vec<Vec2>) -> Self {
        let length = polyline_length(&waypoints);
        Path { waypoints, length }
    }
}

fn polyline_length(points: &[Vec2]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Sum of segment lengths; 0 for a single waypoint.
pub fn path_length(path: &Path) -> f64 {
    polyline_length(&path.waypoints)
}

/// Visits every cell touched by the segment `p0 → p1` (continuous cell
/// coordinates), passing the length of the segment inside the cell. Cells
/// that are only touched at a point or along an edge get length 0. Stops
/// early and returns false when `visit` returns false.
pub fn supercover(p0: Vec2, p1: Vec2, mut visit: impl FnMut(i64, i64, f64) -> bool) -> bool {
    let touch_point = |p: Vec2, visit: &mut dyn FnMut(i64, i64, f64) -> bool| -> bool {
        let xs = touching(p.x);
        let ys = touching(p.y);
        for x in xs.iter().flatten() {
            for y in ys.iter().flatten() {
                if !visit(*x, *y, 0.0) {
                    return false;
                }
            }
        }
        true
    };
    if !touch_point(p0, &mut visit) || !touch_point(p1, &mut visit) {
        return false;
    }
    let d = p1 - p0;
    let len = d.norm();
    if len == 0.0 {
        return true;
    }
    if !traverse(p0, p1, len, &mut visit) {
        return false;
    }
    // A segment lying exactly on a grid line also touches the row/column on
    // the other side.
    if d.y == 0.0 && p0.y.fract() == 0.0 {
        let off = Vec2::new(0.0, -0.5);
        if !traverse(p0 + off, p1 + off, len, &mut |x, y, _| visit(x, y, 0.0)) {
            return false;
        }
    }
    if d.x == 0.0 && p0.x.fract() == 0.0 {
        let off = Vec2::new(-0.5, 0.0);
        if !traverse(p0 + off, p1 + off, len, &mut |x, y, _| visit(x, y, 0.0)) {
            return false;
        }
    }
    true
}

fn touching(v: f64) -> [Option<i64>; 2] {
    let f = v.floor();
    [Some(f as i64), if v == f { Some(f as i64 - 1) } else { None }]
}

fn traverse(p0: Vec2, p1: Vec2, len: f64, visit: &mut dyn FnMut(i64, i64, f64) -> bool) -> bool {
    let d = p1 - p0;
    let mut ix = p0.x.floor() as i64;
    let mut iy = p0.y.floor() as i64;
    if p0.x == p0.x.floor() && d.x < 0.0 {
        ix -= 1;
    }
    if p0.y == p0.y.floor() && d.y < 0.0 {
        iy -= 1;
    }
    let axis = |p: f64, dv: f64, i: i64| -> (i64, f64, f64) {
        if dv > 0.0 {
            (1, ((i + 1) as f64 - p) / dv, 1.0 / dv)
        } else if dv < 0.0 {
            (-1, (i as f64 - p) / dv, -1.0 / dv)
        } else {
            (0, f64::INFINITY, f64::INFINITY)
        }
    };
    let (sx, mut tmx, tdx) = axis(p0.x, d.x, ix);
    let (sy, mut tmy, tdy) = axis(p0.y, d.y, iy);
    let mut t = 0.0;
    loop {
        let t_next = tmx.min(tmy).min(1.0);
        if !visit(ix, iy, (t_next - t) * len) {
            return false;
        }
        if t_next >= 1.0 {
            return true;
        }
        if (tmx - tmy).abs() <= 1e-12 {
            // Passing exactly through a grid vertex: blocked only when both
            // cells beside the diagonal are blocked.
            let side_a = visit(ix + sx, iy, 0.0);
            let side_b = visit(ix, iy + sy, 0.0);
            if !side_a && !side_b {
                return false;
            }
            ix += sx;
            iy += sy;
            tmx += tdx;
            tmy += tdy;
        } else if tmx < tmy {
            ix += sx;
            tmx += tdx;
        } else {
            iy += sy;
            tmy += tdy;
        }
        t = t_next;
    }
}

/// Whether the straight segment between two world points touches only free
/// in-grid cells.
pub fn line_of_sight(grid: &OccupancyGrid, a: Vec2, b: Vec2) -> bool {
    supercover(grid.to_grid(a), grid.to_grid(b), |x, y, _| !grid.occupied_i(x, y))
}

/// Per-cell traversal costs (≥ 1, `INFINITY` for lethal cells) used by the
/// cost-weighted planner.
#[derive(Debug, Clone, PartialEq)]
pub struct CostGrid {
    pub width: usize,
    pub height: usize,
    pub resolution: f64,
    pub origin: Vec2,
    pub costs: Vec<f64>,
}

impl CostGrid {
    pub fn cost_i(&self, ix: i64, iy: i64) -> f64 {
        if ix < 0 || iy < 0 || ix >= self.width as i64 || iy >= self.height as i64 {
            f64::INFINITY
        } else {
            self.costs[iy as usize * self.width + ix as usize]
        }
    }

    pub fn cost(&self, ix: usize, iy: usize) -> f64 {
        self.costs[iy * self.width + ix]
    }
}

/// What the search needs to know about a map.
trait SearchMap {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn blocked(&self, ix: i64, iy: i64) -> bool;
    /// Cost of a segment in cell units, `None` if it is not traversable.
    fn segment_cost(&self, a: Vec2, b: Vec2) -> Option<f64>;
    /// Whether costs are plain Euclidean lengths, which permits deferring the
    /// line-of-sight check.
    fn euclidean(&self) -> bool;
}

impl SearchMap for OccupancyGrid {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn blocked(&self, ix: i64, iy: i64) -> bool {
        self.occupied_i(ix, iy)
    }
    fn segment_cost(&self, a: Vec2, b: Vec2) -> Option<f64> {
        supercover(a, b, |x, y, _| !self.occupied_i(x, y)).then(|| a.distance(b))
    }
    fn euclidean(&self) -> bool {
        true
    }
}

impl SearchMap for CostGrid {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn blocked(&self, ix: i64, iy: i64) -> bool {
        !self.cost_i(ix, iy).is_finite()
    }
    fn segment_cost(&self, a: Vec2, b: Vec2) -> Option<f64> {
        let mut total = 0.0;
        supercover(a, b, |x, y, len| {
            let c = self.cost_i(x, y);
            if len > 0.0 {
                total += len * c;
            }
            c.is_finite()
        })
        .then_some(total)
    }
    fn euclidean(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    f: f64,
    g: f64,
    idx: usize,
}

impl PartialEq for Entry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Entry {
    // Reversed so the max-heap pops the lowest f, then lowest g, then the
    // lowest row-major index.
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f).then(o.g.total_cmp(&self.g)).then(o.idx.cmp(&self.idx))
    }
}

const NEIGHBORS: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Reusable search scratch space.
#[derive(Debug, Default, Clone)]
pub struct LazyThetaStar {
    g: Vec<f64>,
    parent: Vec<usize>,
    closed: Vec<bool>,
    heap: BinaryHeap<Entry>,
}

struct Query {
    start: Vec2,
    goal: Vec2,
    start_idx: usize,
    goal_idx: usize,
    width: usize,
}

impl Query {
    fn pos(&self, idx: usize) -> Vec2 {
        if idx == self.start_idx {
            self.start
        } else if idx == self.goal_idx {
            self.goal
        } else {
            Vec2::new((idx % self.width) as f64 + 0.5, (idx / self.width) as f64 + 0.5)
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    AnyAngle,
    EightConnected,
}

fn locate<M: SearchMap>(map: &M, p: Vec2) -> Option<usize> {
    let (x, y) = (p.x.floor(), p.y.floor());
    if x < 0.0 || y < 0.0 || x >= map.width() as f64 || y >= map.height() as f64 {
        return None;
    }
    let (x, y) = (x as i64, y as i64);
    (!map.blocked(x, y)).then(|| y as usize * map.width() + x as usize)
}

impl LazyThetaStar {
    /// Lazy Theta* between two world points on an occupancy grid.
    pub fn plan(&mut self, grid: &OccupancyGrid, start: Vec2, goal: Vec2) -> Result<Path> {
        let (s, g) = (grid.to_grid(start), grid.to_grid(goal));
        let nodes = refine(grid, self.search(grid, s, g, Mode::AnyAngle)?);
        Ok(Path::new(nodes.into_iter().map(|p| grid.to_world(p)).collect()))
    }

    /// Theta* on a cost grid: segment costs are cost-weighted lengths.
    /// The returned path length is still the Euclidean length.
    pub fn plan_weighted(&mut self, costs: &CostGrid, start: Vec2, goal: Vec2) -> Result<Path> {
        let to_grid = |p: Vec2| (p - costs.origin) * (1.0 / costs.resolution);
        let nodes = refine(costs, self.search(costs, to_grid(start), to_grid(goal), Mode::AnyAngle)?);
        Ok(Path::new(nodes.into_iter().map(|p| costs.origin + p * costs.resolution).collect()))
    }

    /// Plain 8-connected A* over the same nodes and edges.
    pub fn plan_eight_connected(&mut self, grid: &OccupancyGrid, start: Vec2, goal: Vec2) -> Result<Path> {
        let (s, g) = (grid.to_grid(start), grid.to_grid(goal));
        let nodes = self.search(grid, s, g, Mode::EightConnected)?;
        Ok(Path::new(nodes.into_iter().map(|p| grid.to_world(p)).collect()))
    }

    fn search<M: SearchMap>(&mut self, map: &M, start: Vec2, goal: Vec2, mode: Mode) -> Result<Vec<Vec2>> {
        let start_idx = locate(map, start).ok_or(Error::StartOccupied)?;
        let goal_idx = locate(map, goal).ok_or(Error::GoalOccupied)?;
        let w = map.width();
        let q = Query { start, goal, start_idx, goal_idx, width: w };
        if start_idx == goal_idx {
            return map.segment_cost(start, goal).map(|_| vec![start, goal]).ok_or(Error::NoPath);
        }
        let n = w * map.height();
        self.g.clear();
        self.g.resize(n, f64::INFINITY);
        self.parent.clear();
        self.parent.resize(n, usize::MAX);
        self.closed.clear();
        self.closed.resize(n, false);
        self.heap.clear();

        let h = |idx: usize| q.pos(idx).distance(goal);
        let lazy = map.euclidean();
        self.g[start_idx] = 0.0;
        self.parent[start_idx] = start_idx;
        self.heap.push(Entry { f: h(start_idx), g: 0.0, idx: start_idx });

        // Edges between 8-neighbors, checked against the map.
        let edge = |a: usize, b: usize| map.segment_cost(q.pos(a), q.pos(b));
        let neighbors = |idx: usize| {
            let (x, y) = ((idx % w) as i64, (idx / w) as i64);
            NEIGHBORS.iter().filter_map(move |(dx, dy)| {
                let (nx, ny) = (x + dx, y + dy);
                (!map.blocked(nx, ny)).then(|| ny as usize * w + nx as usize)
            })
        };

        while let Some(Entry { f, idx, .. }) = self.heap.pop() {
            if self.closed[idx] || f > self.g[idx] + h(idx) {
                continue;
            }
            if mode == Mode::AnyAngle && lazy {
                // Deferred line-of-sight check on the assumed parent.
                let p = self.parent[idx];
                if p != idx && map.segment_cost(q.pos(p), q.pos(idx)).is_none() {
                    // Repair from the closed neighbors, or from their
                    // parents when those are visible.
                    let mut best = (f64::INFINITY, usize::MAX);
                    let mut offer = |cand: f64, from: usize| {
                        if cand < best.0 || (cand == best.0 && from < best.1) {
                            best = (cand, from);
                        }
                    };
                    for nb in neighbors(idx) {
                        if !self.closed[nb] {
                            continue;
                        }
                        if let Some(c) = edge(nb, idx) {
                            offer(self.g[nb] + c, nb);
                        }
                        let pp = self.parent[nb];
                        if pp != nb && pp != p {
                            if let Some(c) = map.segment_cost(q.pos(pp), q.pos(idx)) {
                                offer(self.g[pp] + c, pp);
                            }
                        }
                    }
                    if best.1 == usize::MAX {
                        continue;
                    }
                    self.g[idx] = best.0;
                    self.parent[idx] = best.1;
                    // The verified cost may no longer be the cheapest open
                    // entry.
                    self.heap.push(Entry { f: best.0 + h(idx), g: best.0, idx });
                    continue;
                }
            }
            if idx == goal_idx {
                return Ok(self.reconstruct(&q));
            }
            self.closed[idx] = true;
            let gp = self.parent[idx];
            for nb in neighbors(idx) {
                if self.closed[nb] {
                    continue;
                }
                let Some(step) = edge(idx, nb) else { continue };
                let mut cand = (self.g[idx] + step, idx);
                if mode == Mode::AnyAngle && gp != idx {
                    let through_parent = if lazy {
                        Some(q.pos(gp).distance(q.pos(nb)))
                    } else {
                        map.segment_cost(q.pos(gp), q.pos(nb))
                    };
                    if let Some(c) = through_parent {
                        if self.g[gp] + c <= cand.0 + 1e-9 {
                            cand = (self.g[gp] + c, gp);
                        }
                    }
                }
                if cand.0 < self.g[nb] {
                    self.g[nb] = cand.0;
                    self.parent[nb] = cand.1;
                    self.heap.push(Entry { f: cand.0 + h(nb), g: cand.0, idx: nb });
                }
            }
        }
        Err(Error::NoPath)
    }

    fn reconstruct(&self, q: &Query) -> Vec<Vec2> {
        let mut out = vec![q.pos(q.goal_idx)];
        let mut cur = q.goal_idx;
        while self.parent[cur] != cur {
            cur = self.parent[cur];
            out.push(q.pos(cur));
        }
        out.reverse();
        out
    }
}

const REFINE_PASSES: usize = 64;

/// Local clean-up of a found path: interior waypoints move to an adjacent
/// cell center while that lowers the cost of their two segments, and
/// waypoints whose neighbors see each other are dropped.
fn refine<M: SearchMap>(map: &M, mut nodes: Vec<Vec2>) -> Vec<Vec2> {
    let cost = |a: Vec2, b: Vec2| map.segment_cost(a, b).unwrap_or(f64::INFINITY);
    for _ in 0..REFINE_PASSES {
        let mut changed = false;
        for i in 1..nodes.len().saturating_sub(1) {
            let (prev, next) = (nodes[i - 1], nodes[i + 1]);
            let mut best = (cost(prev, nodes[i]) + cost(nodes[i], next), nodes[i]);
            for (dx, dy) in NEIGHBORS {
                let cand = nodes[i] + Vec2::new(dx as f64, dy as f64);
                let c = cost(prev, cand) + cost(cand, next);
                if c < best.0 - 1e-12 {
                    best = (c, cand);
                }
            }
            if best.1 != nodes[i] {
                nodes[i] = best.1;
                changed = true;
            }
        }
        let mut i = 1;
        while i + 1 < nodes.len() {
            let direct = cost(nodes[i - 1], nodes[i + 1]);
            if direct.is_finite() && direct <= cost(nodes[i - 1], nodes[i]) + cost(nodes[i], nodes[i + 1]) + 1e-9 {
                nodes.remove(i);
                changed = true;
            } else {
                i += 1;
            }
        }
        if !changed {
            break;
        }
    }
    nodes
}

/// One-shot Lazy Theta* query.
pub fn plan_path(grid: &OccupancyGrid, start: Vec2, goal: Vec2) -> Result<Path> {
    LazyThetaStar::default().plan(grid, start, goal)
}

/// Nearest free cell center within `max_cells` of `p` (Euclidean in cells,
/// ties by row-major order).
pub fn nearest_free_cell(grid: &OccupancyGrid, p: Vec2, max_cells: usize) -> Option<Vec2> {
    let g = grid.to_grid(p);
    let (cx, cy) = (g.x.floor() as i64, g.y.floor() as i64);
    let r = max_cells as i64;
    let mut best: Option<(f64, i64, Vec2)> = None;
    for y in cy - r..=cy + r {
        for x in cx - r..=cx + r {
            let (dx, dy) = ((x - cx) as f64, (y - cy) as f64);
            let d2 = dx * dx + dy * dy;
            if d2 > (r * r) as f64 || grid.occupied_i(x, y) {
                continue;
            }
            let order = y * grid.width as i64 + x;
            if best.is_none_or(|(bd, bo, _)| d2 < bd || (d2 == bd && order < bo)) {
                best = Some((d2, order, grid.cell_center(x as usize, y as usize)));
            }
        }
    }
    best.map(|b| b.2)
}

impl LazyThetaStar {
    /// Plans from `start`, first moving it to the nearest free cell within
    /// [`START_RELOCATION_CELLS`] when its own cell is occupied. The returned
    /// path still begins at `start`.
    pub fn plan_relaxed(&mut self, grid: &OccupancyGrid, start: Vec2, goal: Vec2) -> Result<Path> {
        match self.plan(grid, start, goal) {
            Err(Error::StartOccupied) => {
                let free = nearest_free_cell(grid, start, START_RELOCATION_CELLS).ok_or(Error::NoPath)?;
                let mut path = self.plan(grid, free, goal)?;
                path.waypoints.insert(0, start);
                Ok(Path::new(path.waypoints))
            }
            other => other,
        }
    }
}

/// Point at arc length `fraction × length` along the path; the last waypoint
/// for a degenerate path.
pub fn point_at_fraction(path: &Path, fraction: f64) -> Result<Vec2> {
    let last = *path.waypoints.last().ok_or(Error::EmptyPath)?;
    let total = path_length(path);
    if total <= 0.0 {
        return Ok(last);
    }
    let mut remaining = fraction.clamp(0.0, 1.0) * total;
    for w in path.waypoints.windows(2) {
        let seg = w[0].distance(w[1]);
        if remaining <= seg && seg > 0.0 {
            return Ok(w[0] + (w[1] - w[0]) * (remaining / seg));
        }
        remaining -= seg;
    }
    Ok(last)
}

/// The two subgoals handed to the policy, in the pushee frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubgoalPair {
    pub sg_now: Vec2,
    pub sg_lagged: Vec2,
    pub lag: usize,
}

/// World-frame subgoals of previous steps, newest first.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgoalHistory {
    lag: usize,
    past: VecDeque<Vec2>,
}

impl SubgoalHistory {
    pub fn new(lag: usize) -> Self {
        SubgoalHistory { lag, past: VecDeque::with_capacity(lag + 1) }
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn len(&self) -> usize {
        self.past.len()
    }

    pub fn is_empty(&self) -> bool {
        self.past.is_empty()
    }
}

/// Computes the current subgoal from `path_now`, looks up the one from `lag`
/// steps back (or the oldest available), expresses both in the pushee frame
/// and records the current one in `history`.
pub fn sample_subgoals(path_now: &Path, history: &mut SubgoalHistory, pushee: &Pose2D) -> Result<SubgoalPair> {
    let now = point_at_fraction(path_now, SUBGOAL_FRACTION)?;
    let lag = history.lag;
    let lagged = if lag == 0 {
        now
    } else {
        history.past.get(lag - 1).or(history.past.back()).copied().unwrap_or(now)
    };
    history.past.push_front(now);
    history.past.truncate(lag.max(1));
    Ok(SubgoalPair {
        sg_now: pushee.inverse_transform_point(now),
        sg_lagged: pushee.inverse_transform_point(lagged),
        lag,
    })
}
