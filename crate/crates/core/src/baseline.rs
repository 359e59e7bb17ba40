//! Push/relocate baseline controller following a cost-weighted global path.
//!
//! The relocation activation ψ = (1 − cos α) / 2 measures how far the end
//! effector is from the spot behind the pushee. Below the threshold the
//! command blends a push toward the contact point with a tangential
//! relocation; at or above it the end effector only circles around, never
//! moving toward the pushee.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, ShapeSpec, Vec2};
use crate::perception::{self, OccupancyGrid};
use crate::planner::{self, CostGrid, LazyThetaStar, Path, START_RELOCATION_CELLS, SUBGOAL_FRACTION};
use crate::sim::{ActionCaps, ActionDelta};
use crate::world::{WorldState, EE_RADIUS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    pub psi_relocate_threshold: f64,
    pub relocate_radius: f64,
    pub approach_distance: f64,
    /// How far past the contact point the push target sits, so that the end
    /// effector keeps pressing once it touches.
    pub push_lead: f64,
    pub gain_push: f64,
    pub gain_relocate: f64,
    pub costmap_inflation: f64,
    pub costmap_falloff: f64,
    pub costmap_weight: f64,
}

impl ControllerParams {
    pub fn for_shape(shape: &ShapeSpec) -> Self {
        let r = shape.circumscribed_radius();
        ControllerParams {
            psi_relocate_threshold: 0.6,
            relocate_radius: r + 2.0 * EE_RADIUS + 0.01,
            approach_distance: r + EE_RADIUS,
            push_lead: 0.02,
            gain_push: 1.0,
            gain_relocate: 10.0,
            costmap_inflation: r,
            costmap_falloff: 0.05,
            costmap_weight: 4.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.psi_relocate_threshold)
            && self.gain_push > 0.0
            && self.gain_relocate > 0.0
            && self.relocate_radius > 0.0
            && self.approach_distance > 0.0
            && self.push_lead >= 0.0
            && self.costmap_inflation >= 0.0
            && self.costmap_falloff > 0.0
            && self.costmap_weight >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid controller params {self:?}")))
        }
    }
}

/// Lethal within `costmap_inflation` of an occupied cell, otherwise
/// `1 + w·exp(−d / falloff)` with `d` the distance to the nearest occupied
/// cell center.
pub fn build_costmap(grid: &OccupancyGrid, params: &ControllerParams) -> CostGrid {
    let dist = perception::distance_transform(grid);
    let r = params.costmap_inflation / grid.resolution;
    let costs = dist
        .iter()
        .map(|&d| {
            if (d * d).round() <= r * r + 1e-9 {
                f64::INFINITY
            } else {
                1.0 + params.costmap_weight * (-(d * grid.resolution) / params.costmap_falloff).exp()
            }
        })
        .collect();
    CostGrid { width: grid.width, height: grid.height, resolution: grid.resolution, origin: grid.origin, costs }
}

/// ψ = (1 − cos α) / 2, α the angle between `pushee − ee` and `push_dir`.
pub fn relocation_activation(ee: Vec2, pushee: Vec2, push_dir: Vec2) -> Result<f64> {
    let to_pushee = (pushee - ee).normalized().ok_or(Error::DegenerateGeometry("end effector at pushee center"))?;
    let dir = push_dir.normalized().ok_or(Error::DegenerateGeometry("zero push direction"))?;
    Ok(((1.0 - to_pushee.dot(dir)) / 2.0).clamp(0.0, 1.0))
}

/// One control decision with the quantities it was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub action: ActionDelta,
    pub psi: f64,
    pub push_dir: Vec2,
    /// Component of the commanded motion toward the pushee center.
    pub radial_toward: f64,
}

/// Scales a planar command to fit the caps while keeping its direction.
fn fit_caps(v: Vec2, dtheta: f64, caps: &ActionCaps) -> ActionDelta {
    let m = v.x.abs().max(v.y.abs());
    let s = if m > caps.dxy_max { caps.dxy_max / m } else { 1.0 };
    ActionDelta::new(v.x * s, v.y * s, dtheta.clamp(-caps.dtheta_max, caps.dtheta_max))
}

pub fn control_step(world: &WorldState, cost_path: &Path, params: &ControllerParams, caps: &ActionCaps) -> Result<Decision> {
    let p = world.pushee().pose.position();
    let e = world.ee().pose.position();
    let aim = planner::point_at_fraction(cost_path, SUBGOAL_FRACTION)?;
    let push_dir = match (aim - p).normalized().or_else(|| (world.goal.position() - p).normalized()) {
        Some(d) => d,
        None => return Ok(Decision { action: ActionDelta::ZERO, psi: 0.0, push_dir: Vec2::ZERO, radial_toward: 0.0 }),
    };
    let psi = relocation_activation(e, p, push_dir)?;
    let offset = e - p;
    let r = offset.norm();
    let u = offset * (1.0 / r);
    // Tangential direction that reaches the spot behind the pushee the short
    // way round.
    let behind = -push_dir;
    let side = if u.cross(behind) >= 0.0 { 1.0 } else { -1.0 };
    let tangent = u.perp() * side;
    let arc = params.relocate_radius * u.cross(behind).atan2(u.dot(behind)).abs();
    let radial_fix = params.relocate_radius - r;
    let v = if psi >= params.psi_relocate_threshold {
        (tangent * arc.max(EE_RADIUS) + u * radial_fix.max(0.0)) * params.gain_relocate
    } else {
        let contact = p - push_dir * (params.approach_distance - params.push_lead);
        let push = (contact - e) * params.gain_push;
        let relocate = (tangent * arc + u * radial_fix) * params.gain_relocate;
        push * (1.0 - psi) + relocate * psi
    };
    let dtheta = wrap_angle(push_dir.angle() - world.ee().pose.theta);
    let action = fit_caps(v, dtheta, caps);
    let radial_toward = -Vec2::new(action.dx, action.dy).dot(u);
    Ok(Decision { action, psi, push_dir, radial_toward })
}

/// Stateful wrapper that owns the cost map and replans every step.
#[derive(Debug, Clone)]
pub struct BaselineController {
    pub params: ControllerParams,
    pub caps: ActionCaps,
    costs: CostGrid,
    lethal: OccupancyGrid,
    planner: LazyThetaStar,
    last_path: Option<Path>,
}

impl BaselineController {
    pub fn new(world: &WorldState, params: ControllerParams, caps: ActionCaps) -> Result<Self> {
        params.validate()?;
        let depth = perception::render_depth(world);
        let obstacles = perception::occupancy_from_depth(&depth, world.pushee(), world.ee());
        let costs = build_costmap(&obstacles, &params);
        let mut lethal = OccupancyGrid::new(costs.width, costs.height, costs.resolution, costs.origin);
        for (c, v) in lethal.cells.iter_mut().zip(&costs.costs) {
            *c = !v.is_finite();
        }
        Ok(BaselineController { params, caps, costs, lethal, planner: LazyThetaStar::default(), last_path: None })
    }

    pub fn costs(&self) -> &CostGrid {
        &self.costs
    }

    pub fn last_path(&self) -> Option<&Path> {
        self.last_path.as_ref()
    }

    /// Cost-weighted path from the pushee to the goal, starting from the
    /// nearest non-lethal cell when the pushee sits in a lethal one.
    pub fn plan(&mut self, world: &WorldState) -> Result<Path> {
        let start = world.pushee().pose.position();
        let goal = world.goal.position();
        match self.planner.plan_weighted(&self.costs, start, goal) {
            Err(Error::StartOccupied) => {
                let free = planner::nearest_free_cell(&self.lethal, start, START_RELOCATION_CELLS).ok_or(Error::NoPath)?;
                let mut path = self.planner.plan_weighted(&self.costs, free, goal)?;
                path.waypoints.insert(0, start);
                Ok(Path::new(path.waypoints))
            }
            other => other,
        }
    }

    pub fn decide(&mut self, world: &WorldState) -> Result<Decision> {
        let path = self.plan(world)?;
        let d = control_step(world, &path, &self.params, &self.caps)?;
        self.last_path = Some(path);
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2D;
    use crate::world::{make_scenario, PusheeKind, ScenarioSpec, SuiteId};
    use approx::assert_abs_diff_eq;

    #[test]
    fn psi_cases() {
        let p = Vec2::ZERO;
        let dir = Vec2::new(1.0, 0.0);
        assert_abs_diff_eq!(relocation_activation(Vec2::new(-0.1, 0.0), p, dir).unwrap(), 0.0);
        assert_abs_diff_eq!(relocation_activation(Vec2::new(0.1, 0.0), p, dir).unwrap(), 1.0);
        assert_abs_diff_eq!(relocation_activation(Vec2::new(0.0, 0.1), p, dir).unwrap(), 0.5, epsilon = 1e-15);
        assert!(matches!(relocation_activation(p, p, dir), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn empty_costmap_is_flat() {
        let g = OccupancyGrid::new(16, 16, 0.01, Vec2::ZERO);
        let c = build_costmap(&g, &ControllerParams::for_shape(&PusheeKind::SmallCube.shape()));
        assert!(c.costs.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn costmap_matches_brute_force() {
        let mut g = OccupancyGrid::new(24, 20, 0.01, Vec2::ZERO);
        for (x, y) in [(3, 4), (15, 12), (16, 12), (20, 2)] {
            g.set(x, y, true);
        }
        let params = ControllerParams::for_shape(&PusheeKind::SmallCube.shape());
        let c = build_costmap(&g, &params);
        let occ: Vec<(usize, usize)> =
            (0..20).flat_map(|y| (0..24).map(move |x| (x, y))).filter(|&(x, y)| g.occupied(x, y)).collect();
        for y in 0..20 {
            for x in 0..24 {
                let d2 = occ
                    .iter()
                    .map(|&(ox, oy)| ((x as i64 - ox as i64).pow(2) + (y as i64 - oy as i64).pow(2)) as f64)
                    .fold(f64::INFINITY, f64::min);
                let r = params.costmap_inflation / 0.01;
                let expect = if d2 <= r * r + 1e-9 {
                    f64::INFINITY
                } else {
                    1.0 + params.costmap_weight * (-(d2.sqrt() * 0.01) / params.costmap_falloff).exp()
                };
                assert_eq!(c.cost(x, y), expect, "cell {x},{y}");
            }
        }
        // Monotone falloff.
        assert!(c.cost(15, 17) > c.cost(5, 17));
    }

    fn free_world(pushee: Vec2, ee: Vec2, goal: Vec2) -> WorldState {
        let mut w = make_scenario(&ScenarioSpec::new(SuiteId::FreeSpace, PusheeKind::SmallCube, 0)).unwrap();
        w.pushee_mut().pose = Pose2D::new(pushee.x, pushee.y, 0.0);
        w.ee_mut().pose = Pose2D::new(ee.x, ee.y, 0.0);
        w.goal = Pose2D::new(goal.x, goal.y, 0.0);
        w
    }

    #[test]
    fn pushes_from_behind() {
        let w = free_world(Vec2::ZERO, Vec2::new(-0.08, 0.0), Vec2::new(0.3, 0.0));
        let mut ctl = BaselineController::new(&w, ControllerParams::for_shape(&w.pushee().shape), ActionCaps::default()).unwrap();
        let d = ctl.decide(&w).unwrap();
        let params = &ctl.params;
        let contact = Vec2::new(-(params.approach_distance - params.push_lead), 0.0);
        let want = (contact - Vec2::new(-0.08, 0.0)).normalized().unwrap();
        let got = Vec2::new(d.action.dx, d.action.dy).normalized().unwrap();
        assert!(got.dot(want) > 0.99);
    }

    #[test]
    fn relocates_from_front() {
        let w = free_world(Vec2::ZERO, Vec2::new(0.08, 0.0), Vec2::new(0.3, 0.0));
        let mut ctl = BaselineController::new(&w, ControllerParams::for_shape(&w.pushee().shape), ActionCaps::default()).unwrap();
        let d = ctl.decide(&w).unwrap();
        assert_eq!(d.psi, 1.0);
        assert!(d.radial_toward <= 0.0);
        assert!(d.action.dy.abs() > 0.0);
    }
}
