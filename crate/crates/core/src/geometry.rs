//! Planar vectors, poses, convex shapes and the distance queries the
//! simulator and rasterizer are built on.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A 2D vector / point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Vec2::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(Vec2::new(self.x / n, self.y / n))
        } else {
            None
        }
    }

    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let two_pi = 2.0 * PI;
    let mut t = theta.rem_euclid(two_pi);
    if t > PI {
        t -= two_pi;
    }
    t
}

/// Planar pose: position in meters, heading in radians normalized to (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose2D { x, y, theta: wrap_angle(theta) }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Maps a body-frame point into the world frame.
    pub fn transform_point(&self, p: Vec2) -> Vec2 {
        p.rotate(self.theta) + self.position()
    }

    /// Maps a world-frame point into this pose's frame.
    pub fn inverse_transform_point(&self, p: Vec2) -> Vec2 {
        (p - self.position()).rotate(-self.theta)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Aabb { min, max }
    }

    /// Closed containment: points on the edge count as inside.
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Vec2 {
        (self.min + self.max) * 0.5
    }

    /// Distance from `p` to the nearest edge, positive inside.
    pub fn inner_clearance(&self, p: Vec2) -> f64 {
        (p.x - self.min.x)
            .min(self.max.x - p.x)
            .min(p.y - self.min.y)
            .min(self.max.y - p.y)
    }
}

/// Body footprint in its own frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeSpec {
    Disk { radius: f64 },
    Box { half_extents: [f64; 2] },
    ConvexPolygon { vertices: Vec<Vec2> },
}

impl ShapeSpec {
    pub fn disk(radius: f64) -> Self {
        ShapeSpec::Disk { radius }
    }

    /// Box from full side lengths.
    pub fn rect(width: f64, height: f64) -> Self {
        ShapeSpec::Box { half_extents: [width / 2.0, height / 2.0] }
    }

    /// Checks the shape invariants: positive dimensions, and for polygons at
    /// least three vertices in strictly convex counter-clockwise order.
    pub fn validate(&self) -> Result<(), String> {
        match self {
            ShapeSpec::Disk { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(format!("disk radius must be > 0, got {radius}"));
                }
            }
            ShapeSpec::Box { half_extents } => {
                if !half_extents.iter().all(|h| *h > 0.0 && h.is_finite()) {
                    return Err(format!("box half extents must be > 0, got {half_extents:?}"));
                }
            }
            ShapeSpec::ConvexPolygon { vertices } => {
                if vertices.len() < 3 {
                    return Err("polygon needs at least 3 vertices".into());
                }
                let n = vertices.len();
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let c = vertices[(i + 2) % n];
                    if !a.is_finite() {
                        return Err("polygon vertex is not finite".into());
                    }
                    if (b - a).cross(c - b) <= 0.0 {
                        return Err("polygon must be strictly convex and counter-clockwise".into());
                    }
                }
                // A star-shaped CCW turn sequence could still wind twice.
                let total: f64 = (0..n)
                    .map(|i| {
                        let e0 = vertices[(i + 1) % n] - vertices[i];
                        let e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
                        e0.cross(e1).atan2(e0.dot(e1))
                    })
                    .sum();
                if (total - 2.0 * PI).abs() > 1e-6 {
                    return Err("polygon winds more than once".into());
                }
            }
        }
        Ok(())
    }

    /// Radius of the smallest origin-centered circle containing the shape.
    pub fn circumscribed_radius(&self) -> f64 {
        match self {
            ShapeSpec::Disk { radius } => *radius,
            ShapeSpec::Box { half_extents } => half_extents[0].hypot(half_extents[1]),
            ShapeSpec::ConvexPolygon { vertices } => {
                vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
            }
        }
    }

    pub fn circumscribed_diameter(&self) -> f64 {
        2.0 * self.circumscribed_radius()
    }

    /// Body-frame vertices in CCW order; `None` for disks.
    pub fn local_vertices(&self) -> Option<Vec<Vec2>> {
        match self {
            ShapeSpec::Disk { .. } => None,
            ShapeSpec::Box { half_extents: [hx, hy] } => Some(vec![
                Vec2::new(-hx, -hy),
                Vec2::new(*hx, -hy),
                Vec2::new(*hx, *hy),
                Vec2::new(-hx, *hy),
            ]),
            ShapeSpec::ConvexPolygon { vertices } => Some(vertices.clone()),
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            ShapeSpec::Disk { radius } => PI * radius * radius,
            ShapeSpec::Box { half_extents } => 4.0 * half_extents[0] * half_extents[1],
            ShapeSpec::ConvexPolygon { vertices } => {
                let n = vertices.len();
                0.5 * (0..n).map(|i| vertices[i].cross(vertices[(i + 1) % n])).sum::<f64>()
            }
        }
    }

    /// Support distance: max over the shape of `p · dir` for a unit `dir` in
    /// the body frame.
    pub fn support(&self, dir: Vec2) -> f64 {
        match self {
            ShapeSpec::Disk { radius } => *radius,
            _ => self
                .local_vertices()
                .unwrap_or_default()
                .iter()
                .map(|v| v.dot(dir))
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Mirror image about the body x-axis (keeps polygons CCW).
    pub fn mirrored_y(&self) -> ShapeSpec {
        match self {
            ShapeSpec::ConvexPolygon { vertices } => {
                let mut v: Vec<Vec2> = vertices.iter().map(|p| Vec2::new(p.x, -p.y)).collect();
                v.reverse();
                ShapeSpec::ConvexPolygon { vertices: v }
            }
            other => other.clone(),
        }
    }
}

/// A shape placed in the world.
#[derive(Debug, Clone)]
pub enum Placed {
    Disk { center: Vec2, radius: f64 },
    Polygon { vertices: Vec<Vec2> },
}

impl Placed {
    pub fn new(shape: &ShapeSpec, pose: &Pose2D) -> Self {
        match shape {
            ShapeSpec::Disk { radius } => Placed::Disk { center: pose.position(), radius: *radius },
            _ => Placed::Polygon {
                vertices: shape
                    .local_vertices()
                    .unwrap_or_default()
                    .into_iter()
                    .map(|v| pose.transform_point(v))
                    .collect(),
            },
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            Placed::Disk { center, radius } => (p - *center).norm_sq() <= radius * radius,
            Placed::Polygon { vertices } => {
                let n = vertices.len();
                (0..n).all(|i| (vertices[(i + 1) % n] - vertices[i]).cross(p - vertices[i]) >= 0.0)
            }
        }
    }

    pub fn bounding_box(&self) -> Aabb {
        match self {
            Placed::Disk { center, radius } => Aabb::new(
                Vec2::new(center.x - radius, center.y - radius),
                Vec2::new(center.x + radius, center.y + radius),
            ),
            Placed::Polygon { vertices } => {
                let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
                let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
                for v in vertices {
                    min = Vec2::new(min.x.min(v.x), min.y.min(v.y));
                    max = Vec2::new(max.x.max(v.x), max.y.max(v.y));
                }
                Aabb::new(min, max)
            }
        }
    }
}

/// Result of querying a point against a placed shape.
#[derive(Debug, Clone, Copy)]
pub struct PointQuery {
    /// Closest point on the shape boundary.
    pub closest: Vec2,
    /// Outward unit normal of the boundary at `closest`.
    pub normal: Vec2,
    /// Signed distance, negative inside.
    pub signed_distance: f64,
}

fn closest_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return a;
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    a + ab * t
}

/// Closest boundary point, outward normal and signed distance from `p` to
/// the shape. Ties between equally close boundary features resolve to the
/// one with the smallest polar angle around `center`.
pub fn point_query(shape: &Placed, p: Vec2, center: Vec2) -> PointQuery {
    match shape {
        Placed::Disk { center: c, radius } => {
            let d = p - *c;
            let dist = d.norm();
            let normal = d.normalized().unwrap_or(Vec2::new(1.0, 0.0));
            PointQuery {
                closest: *c + normal * *radius,
                normal,
                signed_distance: dist - radius,
            }
        }
        Placed::Polygon { vertices } => {
            let n = vertices.len();
            let inside = shape.contains(p);
            let polar = |q: Vec2| (q - center).angle().rem_euclid(2.0 * PI);
            let mut best: Option<(f64, f64, Vec2, Vec2)> = None;
            for i in 0..n {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                let q = closest_on_segment(p, a, b);
                let dist = (p - q).norm();
                let edge_normal = (b - a).perp().normalized().map(|v| -v).unwrap_or(Vec2::new(1.0, 0.0));
                let normal = if inside {
                    edge_normal
                } else {
                    (p - q).normalized().unwrap_or(edge_normal)
                };
                let angle = polar(q);
                let better = match best {
                    None => true,
                    Some((bd, ba, _, _)) => {
                        dist < bd - 1e-12 || ((dist - bd).abs() <= 1e-12 && angle < ba)
                    }
                };
                if better {
                    best = Some((dist, angle, q, normal));
                }
            }
            let (dist, _, closest, normal) = best.expect("polygon has vertices");
            PointQuery {
                closest,
                normal,
                signed_distance: if inside { -dist } else { dist },
            }
        }
    }
}

fn project(vertices: &[Vec2], axis: Vec2) -> (f64, f64) {
    vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        let d = v.dot(axis);
        (lo.min(d), hi.max(d))
    })
}

fn polygon_polygon_distance(a: &[Vec2], b: &[Vec2]) -> f64 {
    let mut min_overlap = f64::INFINITY;
    let mut separated = false;
    for poly in [a, b] {
        let n = poly.len();
        for i in 0..n {
            let Some(axis) = (poly[(i + 1) % n] - poly[i]).perp().normalized() else {
                continue;
            };
            let (alo, ahi) = project(a, axis);
            let (blo, bhi) = project(b, axis);
            let overlap = ahi.min(bhi) - alo.max(blo);
            if overlap < 0.0 {
                separated = true;
            }
            min_overlap = min_overlap.min(overlap);
        }
    }
    if !separated {
        return -min_overlap;
    }
    let mut best = f64::INFINITY;
    for (p, q) in [(a, b), (b, a)] {
        let m = q.len();
        for v in p {
            for j in 0..m {
                let c = closest_on_segment(*v, q[j], q[(j + 1) % m]);
                best = best.min((*v - c).norm());
            }
        }
    }
    best
}

/// Signed separation between two placed convex shapes; negative values are
/// penetration depths.
pub fn signed_distance(a: &Placed, b: &Placed) -> f64 {
    match (a, b) {
        (Placed::Disk { center: ca, radius: ra }, Placed::Disk { center: cb, radius: rb }) => {
            (*ca - *cb).norm() - ra - rb
        }
        (Placed::Disk { center, radius }, poly @ Placed::Polygon { .. })
        | (poly @ Placed::Polygon { .. }, Placed::Disk { center, radius }) => {
            point_query(poly, *center, *center).signed_distance - radius
        }
        (Placed::Polygon { vertices: va }, Placed::Polygon { vertices: vb }) => {
            polygon_polygon_distance(va, vb)
        }
    }
}
