use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn walkerlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walkerlab")).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("walkerlab-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn verify_exit_codes() {
    assert_eq!(walkerlab(&["verify", "no-such-suite"]).status.code(), Some(2));
    let ok = walkerlab(&["verify", "structure-sizes"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let json = walkerlab(&["verify", "structure-sizes", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert!(v.to_string().contains("structure-sizes"));
    assert_eq!(walkerlab(&["simulate", "--n", "not-a-number"]).status.code(), Some(2));
}

#[test]
fn simulate_reproduces_from_manifest() {
    let dir = scratch("sim");
    let (first, second) = (dir.join("first"), dir.join("second"));
    let out = walkerlab(&[
        "simulate", "--n", "60", "--block-divisor", "9", "--runs", "2", "--seed", "3", "--out",
        first.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = first.join("manifest.json");
    let out = walkerlab(&["simulate", "--manifest", manifest.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let names = files_under(&first);
    assert_eq!(names, files_under(&second));
    for f in ["manifest.json", "runs.csv", "aggregate.csv", "runs/run_0.json", "runs/run_1.json"] {
        assert!(names.contains(&PathBuf::from(f)), "missing {f}");
    }
    for f in &names {
        assert_eq!(fs::read(first.join(f)).unwrap(), fs::read(second.join(f)).unwrap(), "{f:?} differs");
    }
    let csv = fs::read_to_string(first.join("runs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn solve_reads_graph_and_descriptor() {
    let dir = scratch("solve");
    let graph = dir.join("c4.txt");
    fs::write(&graph, "4 5\n0 1\n1 2\n2 3\n3 0\n0 2\n").unwrap();
    let out = walkerlab(&[
        "solve", "--graph", graph.to_str().unwrap(), "--game", r#"{"variant":"ConnectorBreaker","win":"Connectivity"}"#,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["winner"], "Maker");

    let game = dir.join("game.json");
    fs::write(&game, r#"{"variant":"MakerBreaker","breaker_bias":3,"win":"Connectivity"}"#).unwrap();
    let out = walkerlab(&["solve", "--graph", graph.to_str().unwrap(), "--game", game.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["winner"], "Breaker");

    let bad = walkerlab(&["solve", "--graph", graph.to_str().unwrap(), "--game", r#"{"variant":"Chess"}"#]);
    assert_eq!(bad.status.code(), Some(2));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn boxgame_prints_csv_trace() {
    let out = walkerlab(&["boxgame", "--n", "3", "--size", "20", "--rounds", "3", "--seed", "9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("round,box,w_M,w_B,dang,active,free,destroyed"));
    assert_eq!(lines.count(), 9);
    let again = walkerlab(&["boxgame", "--n", "3", "--size", "20", "--rounds", "3", "--seed", "9"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
    let cbox = walkerlab(&["boxgame", "--kind", "cbox", "--n", "3", "--size", "40", "--b", "2", "--breaker", "greedy"]);
    assert!(cbox.status.success(), "{}", String::from_utf8_lossy(&cbox.stderr));
}
