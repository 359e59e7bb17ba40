mod common;

use common::{body, world};
use pushbench::geometry::{wrap_angle, Pose2D, ShapeSpec};
use pushbench::sim::{max_penetration, step_ee, ActionDelta, LimitSurfaceParams, PENETRATION_TOLERANCE};
use pushbench::world::{Role, WorldState};

fn run(mut w: WorldState, action: ActionDelta, steps: usize, params: &LimitSurfaceParams) -> Vec<WorldState> {
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        w = step_ee(&w, &action, params).world;
        out.push(w.clone());
    }
    out
}

fn fine(params: &LimitSurfaceParams) -> LimitSurfaceParams {
    LimitSurfaceParams { max_substep: params.max_substep / 100.0, ..*params }
}

#[test]
fn center_line_disk_push_has_zero_rotation() {
    let p = LimitSurfaceParams::default();
    let w = world(
        body(Role::Pushee, ShapeSpec::disk(0.025), Pose2D::new(0.0, 0.0, 0.3)),
        Pose2D::new(-0.036, 0.0, 0.0),
        vec![],
    );
    for s in run(w, ActionDelta::new(0.005, 0.0, 0.0), 100, &p) {
        assert_eq!(s.pushee().pose.theta, 0.3);
        assert_eq!(s.pushee().pose.y, 0.0);
    }
}

#[test]
fn off_center_push_converges_under_finer_substeps() {
    let p = LimitSurfaceParams::default();
    let cases = [
        (ShapeSpec::rect(0.05, 0.05), Pose2D::new(-0.036, 0.012, 0.0), ActionDelta::new(0.004, 0.0, 0.0)),
        (ShapeSpec::rect(0.08, 0.08), Pose2D::new(-0.051, -0.02, 0.0), ActionDelta::new(0.005, 0.001, 0.0)),
        (ShapeSpec::disk(0.025), Pose2D::new(-0.03, 0.02, 0.0), ActionDelta::new(0.003, -0.001, 0.0)),
        (ShapeSpec::rect(0.05, 0.05), Pose2D::new(0.0, -0.036, 0.0), ActionDelta::new(0.001, 0.004, 0.0)),
    ];
    for (shape, ee, action) in cases {
        let w = world(body(Role::Pushee, shape.clone(), Pose2D::new(-0.2, 0.0, 0.0)), Pose2D::new(ee.x - 0.2, ee.y, 0.0), vec![]);
        let coarse = run(w.clone(), action, 100, &p);
        let reference = run(w, action, 100, &fine(&p));
        for (a, b) in coarse.iter().zip(&reference) {
            let (pa, pb) = (a.pushee().pose, b.pushee().pose);
            let dp = pa.position().distance(pb.position());
            let dt = wrap_angle(pa.theta - pb.theta).abs();
            assert!(dp <= 1e-3 && dt <= 1e-2, "{shape:?}: {dp} m, {dt} rad");
        }
    }
}

#[test]
fn penetration_bounded_and_obstacles_static() {
    let p = LimitSurfaceParams::default();
    let wall = body(Role::Obstacle, ShapeSpec::rect(0.06, 0.35), Pose2D::new(0.1, 0.0, 0.0));
    let w = world(
        body(Role::Pushee, ShapeSpec::rect(0.05, 0.05), Pose2D::new(0.0, 0.01, 0.2)),
        Pose2D::new(-0.036, 0.0, 0.0),
        vec![wall.clone()],
    );
    for s in run(w, ActionDelta::new(0.01, 0.0, 0.0), 100, &p) {
        assert!(max_penetration(&s) <= PENETRATION_TOLERANCE);
        assert_eq!(s.obstacles().next().unwrap(), &wall);
    }
}
