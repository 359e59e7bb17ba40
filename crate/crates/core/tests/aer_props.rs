mod common;

use common::seeded;
use pushbench::aer::{AerConfig, ReplayBuffer, Transition};
use pushbench::bench::paired_t_test;
use rand::Rng;

const DIM: usize = 8;

fn mixed_buffer(n: usize, seed: u64) -> ReplayBuffer {
    let mut rng = seeded(seed);
    let mut buf = ReplayBuffer::with_dims(n, DIM, 3);
    for i in 0..n {
        // Two clusters along different axes plus noise.
        let axis = if i % 2 == 0 { 0 } else { 4 };
        let obs: Vec<f64> = (0..DIM).map(|d| if d == axis { 1.0 } else { 0.0 } + rng.random_range(-0.3..0.3)).collect();
        buf.push(&Transition::from_f64(&obs, &[0.0; 3], 0.0, &obs, false)).unwrap();
    }
    buf
}

#[test]
fn k_one_returns_the_presample() {
    let buf = mixed_buffer(2000, 1);
    let state = [1.0, 0.2, 0.0, 0.0, 0.1, 0.0, 0.0, 0.0];
    for seed in 0..20 {
        let b = buf.sample_aer(&state, 128, 1, seed).unwrap();
        let mut got = b.indices.clone();
        let mut want = b.presample.clone();
        got.sort_unstable();
        want.sort_unstable();
        assert_eq!(got, want);
    }
}

#[test]
fn attentive_batches_are_more_similar_than_uniform() {
    let buf = mixed_buffer(5000, 2);
    let state = [1.0, 0.1, -0.1, 0.0, 0.0, 0.2, 0.0, 0.0];
    let mut rng = seeded(3);
    let (mut aer, mut uni) = (Vec::new(), Vec::new());
    for draw in 0..1000u64 {
        let b = buf.sample_aer(&state, 64, 4, draw).unwrap();
        aer.push(b.similarities.iter().sum::<f64>() / 64.0);
        let u = buf.sample_uniform(64, &mut rng).unwrap();
        uni.push(u.iter().map(|&s| buf.similarity(s, &state, None)).sum::<f64>() / 64.0);
    }
    let t = paired_t_test(&aer, &uni, 0.01).unwrap();
    let one_sided = if t.t > 0.0 { t.p_value / 2.0 } else { 1.0 - t.p_value / 2.0 };
    assert!(one_sided < 0.01, "t = {}, p = {}", t.t, one_sided);
}

#[test]
fn defaults() {
    let c = AerConfig::default();
    assert_eq!((c.capacity, c.batch_size, c.k), (1_000_000, 512, 4));
}
