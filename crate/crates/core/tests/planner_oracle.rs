mod common;

use common::{random_free_cell, random_grid, seeded, visibility_oracle};
use pushbench::planner::{line_of_sight, point_at_fraction, LazyThetaStar, Path};
use pushbench::geometry::Vec2;

fn polyline_free(g: &pushbench::perception::OccupancyGrid, p: &Path) -> bool {
    p.waypoints.windows(2).all(|w| line_of_sight(g, w[0], w[1]))
}

#[test]
fn lazy_theta_star_against_visibility_oracle() {
    let mut rng = seeded(7);
    let mut planner = LazyThetaStar::default();
    let mut solved = 0;
    let mut worst: f64 = 1.0;
    while solved < 200 {
        let density = 0.10 + 0.20 * (solved as f64 / 199.0);
        let g = random_grid(&mut rng, 64, 64, density);
        let (s, t) = (random_free_cell(&mut rng, &g), random_free_cell(&mut rng, &g));
        let Some(oracle) = visibility_oracle(&g, s, t) else {
            assert!(planner.plan(&g, s, t).is_err());
            continue;
        };
        let lts = planner.plan(&g, s, t).expect("oracle found a path");
        let astar = planner.plan_eight_connected(&g, s, t).expect("oracle found a path");
        assert!(polyline_free(&g, &lts));
        assert!(lts.length >= s.distance(t) - 1e-9);
        assert!(lts.length >= oracle - 1e-9);
        assert!(lts.length <= 1.02 * oracle, "{} vs {}", lts.length, oracle);
        assert!(lts.length <= astar.length + 1e-9, "{} vs {}", lts.length, astar.length);
        worst = worst.max(lts.length / oracle);
        solved += 1;
    }
    eprintln!("worst ratio {worst}");
}

#[test]
fn subgoal_on_analytic_polylines() {
    let cases: [(&[(f64, f64)], (f64, f64)); 3] = [
        (&[(0.0, 0.0), (10.0, 0.0)], (2.0, 0.0)),
        (&[(0.0, 0.0), (1.0, 0.0), (1.0, 4.0)], (1.0, 0.0)),
        (&[(0.0, 0.0), (0.3, 0.4), (3.3, 4.4)], (0.66, 0.88)),
    ];
    for (pts, want) in cases {
        let p = Path::new(pts.iter().map(|&(x, y)| Vec2::new(x, y)).collect());
        let q = point_at_fraction(&p, 0.2).unwrap();
        assert!((q.x - want.0).abs() <= 1e-9 && (q.y - want.1).abs() <= 1e-9, "{q:?}");
    }
}
