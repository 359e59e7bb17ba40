use std::fs;
use std::path::Path;
use std::process::Command;

fn pushbench(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_pushbench")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.json");
    let actions = dir.path().join("actions.json");
    pushbench(&["scenario", "gen", "--suite", "env_b", "--seed", "3", "--out", p(&scenario)]);
    let acts: Vec<[f64; 3]> = (0..80).map(|i| [0.004 * ((i % 7) as f64 - 3.0), 0.003, 0.01]).collect();
    fs::write(&actions, serde_json::to_string(&acts).unwrap()).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        pushbench(&["replay", "--scenario", p(&scenario), "--actions", p(&actions), "--seed", "17", "--out", p(out)]);
    }
    for f in ["episodes.csv", "trace.json"] {
        let (x, y) = (fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn bench_trace_replays_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = pushbench(&["bench", "run", "--suite", "free_space", "--episodes", "2", "--seed", "4", "--out", p(&run)]);
    let table: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(table["n_episodes"], 2);
    let trace = run.join("traces").join("episode_0000.json");
    let again = dir.path().join("again");
    pushbench(&["replay", "--trace", p(&trace), "--out", p(&again)]);
    assert_eq!(fs::read(&trace).unwrap(), fs::read(again.join("trace.json")).unwrap());
    let csv = fs::read_to_string(run.join("episodes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn plan_prints_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.pgm");
    let mut pgm = String::from("P2\n8 8\n1\n");
    for y in 0..8 {
        let row: Vec<&str> = (0..8).map(|x| if x == 4 && y >= 2 { "0" } else { "1" }).collect();
        pgm.push_str(&row.join(" "));
        pgm.push('\n');
    }
    fs::write(&grid, pgm).unwrap();
    let out = pushbench(&["plan", "--grid", p(&grid), "--start", "0.5,0.5", "--goal", "7.5,0.5"]);
    let path: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(path["waypoints"].as_array().unwrap().len() >= 3);
}
