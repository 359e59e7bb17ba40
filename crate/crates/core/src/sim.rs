//! Quasi-static planar pushing with a single point contact and an
//! ellipsoidal limit surface.
//!
//! The end effector is a position-controlled disk. Each step moves it by the
//! clamped action in sub-steps; whenever it penetrates the pushee, the pushee
//! receives the twist that the limit-surface model assigns to the contact and
//! the penetration is driven back to zero. Motion that would make the pushee
//! or the end effector penetrate an obstacle is cut short at the last
//! admissible fraction of the sub-step.
//!
//! For a contact at offset `r` from the pushee center and a contact force
//! `f`, the pushee twist is proportional to `(f_x, f_y, (r × f) / c²)`. The
//! force is the one inside the friction cone that makes the contact point
//! follow the pusher (sticking); when no such force exists the force sits on
//! the cone edge and only the normal component of the pusher motion is
//! transmitted (sliding).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_query, signed_distance, wrap_angle, Placed, Pose2D, Vec2};
use crate::world::{BodyState, WorldState, EE_RADIUS};

/// Separation at or below which two bodies count as touching.
pub const CONTACT_EPSILON: f64 = 1e-3;
/// Largest penetration left between any two bodies after a step.
pub const PENETRATION_TOLERANCE: f64 = 1e-4;

// Internal targets, kept well inside the public tolerance.
const ADMISSIBLE_PENETRATION: f64 = 2e-5;
const RESOLVE_TOLERANCE: f64 = 1e-8;
const RESOLVE_ITERATIONS: usize = 60;
const BISECTION_STEPS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionCaps {
    pub dxy_max: f64,
    pub dtheta_max: f64,
}

impl Default for ActionCaps {
    fn default() -> Self {
        ActionCaps { dxy_max: 0.01, dtheta_max: 5f64.to_radians() }
    }
}

/// End-effector increment for one step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ActionDelta {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

impl ActionDelta {
    pub const ZERO: ActionDelta = ActionDelta { dx: 0.0, dy: 0.0, dtheta: 0.0 };

    pub fn new(dx: f64, dy: f64, dtheta: f64) -> Self {
        ActionDelta { dx, dy, dtheta }
    }

    /// Per-component clamp to the caps. Non-finite components become zero.
    pub fn clamped(&self, caps: &ActionCaps) -> ActionDelta {
        let c = |v: f64, m: f64| if v.is_finite() { v.clamp(-m, m) } else { 0.0 };
        ActionDelta {
            dx: c(self.dx, caps.dxy_max),
            dy: c(self.dy, caps.dxy_max),
            dtheta: c(self.dtheta, caps.dtheta_max),
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.dx, self.dy, self.dtheta]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        ActionDelta::new(a[0], a[1], a[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitSurfaceParams {
    /// Ratio of maximum friction torque to maximum friction force.
    pub c: f64,
    pub ee_radius: f64,
    /// Pusher–pushee Coulomb friction coefficient.
    pub friction: f64,
    /// Largest end-effector translation per sub-step.
    pub max_substep: f64,
    pub caps: ActionCaps,
}

impl Default for LimitSurfaceParams {
    fn default() -> Self {
        LimitSurfaceParams {
            c: 0.05,
            ee_radius: EE_RADIUS,
            friction: 0.5,
            max_substep: 0.01 * EE_RADIUS,
            caps: ActionCaps::default(),
        }
    }
}

impl LimitSurfaceParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.c > 0.0
            && self.ee_radius > 0.0
            && self.friction >= 0.0
            && self.max_substep > 0.0
            && self.max_substep <= 0.5 * self.ee_radius
            && self.caps.dxy_max >= 0.0
            && self.caps.dtheta_max >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid limit-surface params {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub world: WorldState,
    pub ee_object_contact: bool,
    pub object_obstacle_collision: bool,
    pub ee_obstacle_collision: bool,
    pub out_of_bounds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contacts {
    pub ee_object: bool,
    pub object_obstacle: bool,
    pub ee_obstacle: bool,
    pub min_separation: f64,
}

/// Pushee pose increment produced by a pusher displacement at a single
/// contact. `contact_normal` points from the pusher into the pushee.
pub fn resolve_push_contact(
    pushee: &BodyState,
    contact_point: Vec2,
    contact_normal: Vec2,
    ee_displacement: Vec2,
    params: &LimitSurfaceParams,
) -> Result<Pose2D> {
    let n = contact_normal
        .normalized()
        .filter(|_| contact_normal.norm() > 1e-12)
        .ok_or(Error::DegenerateContact("zero-length contact normal"))?;
    let vn = ee_displacement.dot(n);
    if vn <= 0.0 {
        return Ok(Pose2D::default());
    }
    let c2 = params.c * params.c;
    let r = contact_point - pushee.pose.position();
    let rp = r.perp();
    let t = n.perp();
    // Contact-point velocity of the twist induced by force f is A f with
    // A = I + rp rpᵀ / c²; Sherman–Morrison gives A⁻¹.
    let apply = |f: Vec2| f + rp * (rp.dot(f) / c2);
    let v = ee_displacement;
    let stick = v - rp * (rp.dot(v) / (c2 + rp.norm_sq()));
    let (f_n, f_t) = (stick.dot(n), stick.dot(t));
    let force = if f_n > 0.0 && f_t.abs() <= params.friction * f_n {
        stick
    } else {
        let side = if f_t < 0.0 { -1.0 } else { 1.0 };
        let mut edge = n + t * (params.friction * side);
        let mut denom = apply(edge).dot(n);
        if denom <= 1e-12 {
            edge = n;
            denom = apply(n).dot(n);
        }
        edge * (vn / denom)
    };
    Ok(Pose2D { x: force.x, y: force.y, theta: rp.dot(force) / c2 })
}

fn penetrations(world: &WorldState) -> (f64, f64, f64) {
    let ee = world.ee().placed();
    let pushee = world.pushee().placed();
    let obstacles: Vec<Placed> = world.obstacles().map(BodyState::placed).collect();
    let ee_pushee = -signed_distance(&ee, &pushee);
    let pushee_obs = obstacles.iter().map(|o| -signed_distance(&pushee, o)).fold(f64::NEG_INFINITY, f64::max);
    let ee_obs = obstacles.iter().map(|o| -signed_distance(&ee, o)).fold(f64::NEG_INFINITY, f64::max);
    (ee_pushee, pushee_obs, ee_obs)
}

/// Largest pairwise penetration depth in the world (≤ 0 when nothing
/// overlaps, −∞ when there is nothing to compare).
pub fn max_penetration(world: &WorldState) -> f64 {
    let (a, b, c) = penetrations(world);
    let obstacles: Vec<Placed> = world.obstacles().map(BodyState::placed).collect();
    let mut d = a.max(b).max(c);
    for i in 0..obstacles.len() {
        for j in i + 1..obstacles.len() {
            d = d.max(-signed_distance(&obstacles[i], &obstacles[j]));
        }
    }
    d
}

/// Moves the end effector by `delta` and pushes the pushee out of it.
fn try_move(world: &WorldState, delta: Vec2, params: &LimitSurfaceParams) -> WorldState {
    let mut w = world.clone();
    {
        let ee = w.ee_mut();
        ee.pose.x += delta.x;
        ee.pose.y += delta.y;
    }
    let ee_center = w.ee().pose.position();
    let ee_radius = match w.ee().shape {
        crate::geometry::ShapeSpec::Disk { radius } => radius,
        _ => params.ee_radius,
    };
    for iter in 0..RESOLVE_ITERATIONS {
        let pushee = w.pushee().clone();
        let center = pushee.pose.position();
        let q = point_query(&pushee.placed(), ee_center, center);
        let depth = ee_radius - q.signed_distance;
        if depth <= RESOLVE_TOLERANCE {
            break;
        }
        let inward = -q.normal;
        let along = delta.dot(inward);
        let push = if iter == 0 && along > 1e-12 * delta.norm().max(1e-300) {
            delta * (depth / along)
        } else {
            inward * depth
        };
        let Ok(d) = resolve_push_contact(&pushee, q.closest, inward, push, params) else {
            break;
        };
        let p = &mut w.pushee_mut().pose;
        p.x += d.x;
        p.y += d.y;
        p.theta = wrap_angle(p.theta + d.theta);
    }
    w
}

fn admissible(candidate: &WorldState, before: (f64, f64, f64)) -> bool {
    let (a, b, c) = penetrations(candidate);
    a <= before.0.max(ADMISSIBLE_PENETRATION)
        && b <= before.1.max(ADMISSIBLE_PENETRATION)
        && c <= before.2.max(ADMISSIBLE_PENETRATION)
}

fn advance_substep(world: &WorldState, delta: Vec2, params: &LimitSurfaceParams) -> WorldState {
    let before = penetrations(world);
    let full = try_move(world, delta, params);
    if admissible(&full, before) {
        return full;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best = world.clone();
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let candidate = try_move(world, delta * mid, params);
        if admissible(&candidate, before) {
            lo = mid;
            best = candidate;
        } else {
            hi = mid;
        }
    }
    best
}

/// Advances the world by one end-effector increment.
pub fn step_ee(world: &WorldState, action: &ActionDelta, params: &LimitSurfaceParams) -> StepOutcome {
    let a = action.clamped(&params.caps);
    let disp = Vec2::new(a.dx, a.dy);
    let substeps = ((disp.norm() / params.max_substep).ceil() as usize).max(1);
    let k = 1.0 / substeps as f64;
    let mut w = world.clone();
    for _ in 0..substeps {
        if disp != Vec2::ZERO {
            w = advance_substep(&w, disp * k, params);
        }
        let ee = &mut w.ee_mut().pose;
        ee.theta = wrap_angle(ee.theta + a.dtheta * k);
    }
    w.time_step_index += 1;
    let contacts = detect_contacts(&w);
    let out_of_bounds = check_out_of_bounds(&w);
    StepOutcome {
        world: w,
        ee_object_contact: contacts.ee_object,
        object_obstacle_collision: contacts.object_obstacle,
        ee_obstacle_collision: contacts.ee_obstacle,
        out_of_bounds,
    }
}

pub fn detect_contacts(world: &WorldState) -> Contacts {
    let ee = world.ee().placed();
    let pushee = world.pushee().placed();
    let obstacles: Vec<Placed> = world.obstacles().map(BodyState::placed).collect();
    let ee_obj = signed_distance(&ee, &pushee);
    let obj_obs = obstacles.iter().map(|o| signed_distance(&pushee, o)).fold(f64::INFINITY, f64::min);
    let ee_obs = obstacles.iter().map(|o| signed_distance(&ee, o)).fold(f64::INFINITY, f64::min);
    Contacts {
        ee_object: ee_obj <= CONTACT_EPSILON,
        object_obstacle: obj_obs <= CONTACT_EPSILON,
        ee_obstacle: ee_obs <= CONTACT_EPSILON,
        min_separation: ee_obj.min(obj_obs).min(ee_obs),
    }
}

/// True iff the pushee center lies strictly outside the (closed) workspace.
pub fn check_out_of_bounds(world: &WorldState) -> bool {
    !world.bounds.contains(world.pushee().pose.position())
}
