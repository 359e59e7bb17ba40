mod common;

use common::{brute_inflate, random_grid, seeded};
use pushbench::perception::inflate;
use rand::Rng;

#[test]
fn inflate_matches_brute_force() {
    let mut rng = seeded(21);
    for i in 0..50 {
        let density = rng.random_range(0.02..0.3);
        let g = random_grid(&mut rng, 32, 32, density);
        // Integer radii hit exact squared distances; the rest are arbitrary.
        let r = if i % 3 == 0 { (i % 5) as f64 } else { rng.random_range(0.0..6.0) };
        assert_eq!(inflate(&g, r).cells, brute_inflate(&g, r).cells, "grid {i}, radius {r}");
    }
}
