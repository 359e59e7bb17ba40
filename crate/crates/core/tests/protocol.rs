mod common;

use std::thread;

use common::seeded;
use pushbench::env::{Env, EpisodeConfig};
use pushbench::server::{Client, Request, Server, ServerConfig, StepResponse};
use pushbench::sim::ActionDelta;
use rand::Rng;
use serde_json::{json, Value};

fn serve() -> std::net::SocketAddr {
    let server = Server::bind("127.0.0.1:0", ServerConfig::default()).unwrap();
    let addr = server.local_addr().unwrap();
    thread::spawn(move || server.run());
    addr
}

fn actions(n: usize) -> Vec<[f64; 3]> {
    let mut rng = seeded(5);
    (0..n).map(|_| [rng.random_range(-0.01..0.01), rng.random_range(-0.01..0.01), rng.random_range(-0.05..0.05)]).collect()
}

fn session(addr: std::net::SocketAddr, acts: &[[f64; 3]]) -> Vec<Value> {
    let mut c = Client::connect(addr).unwrap();
    let mut out = vec![c.request(&Request::Reset { config: Some(json!({"seed": 9, "max_steps": 400})) }).unwrap()];
    for a in acts {
        let r = c.request(&Request::Step { action: *a }).unwrap();
        let done = r["done"].as_bool().unwrap();
        out.push(r);
        if done {
            break;
        }
    }
    c.request(&Request::Close).ok();
    out
}

#[test]
fn sequential_clients_see_identical_episodes() {
    let addr = serve();
    let acts = actions(150);
    let first = session(addr, &acts);
    let second = session(addr, &acts);
    assert_eq!(first, second);

    // The wire values equal the in-process ones bit for bit.
    let mut env = Env::default();
    let cfg = EpisodeConfig { seed: 9, max_steps: 400, ..Default::default() };
    let obs = env.reset(&cfg).unwrap();
    assert_eq!(serde_json::from_value::<Vec<f64>>(first[0]["obs"].clone()).unwrap(), obs.values());
    for (a, wire) in acts.iter().zip(&first[1..]) {
        let local = env.step(&ActionDelta::from_array(*a)).unwrap();
        let remote: StepResponse = serde_json::from_value(wire.clone()).unwrap();
        assert_eq!(remote.obs.values(), local.observation.values());
        assert_eq!(remote.reward, local.reward);
        assert_eq!(remote.done, local.done);
    }
}

#[test]
fn raw_lines_and_errors() {
    let mut c = Client::connect(serve()).unwrap();
    let spec = c.request_raw(r#"{"cmd":"spec"}"#).unwrap();
    assert_eq!(spec["obs_dim"], 49);
    assert_eq!(c.request_raw(r#"{"cmd":"reset","config":{"d_max":0.1}}"#).unwrap()["error"], "invalid_config");
    assert!(c.request_raw(r#"{"cmd":"reset"}"#).unwrap()["obs"].is_array());
    assert_eq!(c.request_raw(r#"{"cmd":"step","action":[0,0,0]}"#).unwrap()["info"]["step"], 1);
}
