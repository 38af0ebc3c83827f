// Copyright 2026 The neo-lite Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

/// Small enough to bootstrap and train in a second or two.
const SMALL: &str = r#"
[workload]
queries = 10
min_joins = 1
max_joins = 3
min_predicates = 1
max_predicates = 2
templates = 4

[driver]
train_steps = 20
batch = 4

[driver.search]
cutoff = { expansions = 16 }

[sgns]
epochs = 1
"#;

fn neo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neo"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn neo")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = neo(dir, args);
    assert!(
        out.status.success(),
        "neo {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn setup() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("neo.toml"), SMALL).unwrap();
    ok(dir.path(), &["--config", "neo.toml", "gen-catalog", "--seed", "3"]);
    ok(dir.path(), &["--config", "neo.toml", "gen-workload", "--seed", "3"]);
    dir
}

#[test]
fn gen_catalog_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-catalog", "--seed", "7", "--catalog", "a.json"]);
    ok(dir.path(), &["gen-catalog", "--seed", "7", "--catalog", "b.json"]);
    let a = fs::read(dir.path().join("a.json")).unwrap();
    let b = fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bootstrap_then_zero_episodes_then_evaluate() {
    let dir = setup();
    let p = dir.path();
    ok(p, &["--config", "neo.toml", "bootstrap", "--seed", "3"]);
    ok(p, &["--config", "neo.toml", "train", "--episodes", "0"]);
    let out = ok(p, &["--config", "neo.toml", "evaluate", "--json"]);
    let m: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(m["train_mean_ratio"].as_f64().unwrap(), 1.0);
    assert_eq!(m["test_mean_ratio"].as_f64().unwrap(), 1.0);
}

#[test]
fn train_appends_metrics_and_optimize_prints_a_plan() {
    let dir = setup();
    let p = dir.path();
    ok(p, &["--config", "neo.toml", "bootstrap", "--seed", "3"]);
    ok(p, &["--config", "neo.toml", "train", "--episodes", "2"]);
    let csv = fs::read_to_string(p.join("metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("episode,split,query_id,neo_latency,expert_latency,ratio"));
    assert_eq!(lines.count(), 20);

    let out = ok(p, &["--config", "neo.toml", "optimize", "--query", "q0001"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["query_id"], "q0001");
    assert!(v["simulated_latency"].as_f64().unwrap() > 0.0);
    assert!(v["predicted_cost"].as_f64().unwrap() > 0.0);
    assert!(v["plan"].is_object());

    // the same query from a file, outside the workload's id space
    let workload: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(p.join("workload.json")).unwrap()).unwrap();
    let mut q = workload[1].clone();
    q["id"] = "adhoc".into();
    fs::write(p.join("adhoc.json"), q.to_string()).unwrap();
    let out = ok(p, &["--config", "neo.toml", "optimize", "--query", "adhoc.json"]);
    let w: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(w["simulated_latency"], v["simulated_latency"]);
}

#[test]
fn r_vector_runs_need_embeddings() {
    let dir = setup();
    let p = dir.path();
    let out = neo(p, &["--config", "neo.toml", "bootstrap", "--variant", "r-vector"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("embed-train"));
    ok(p, &["--config", "neo.toml", "embed-train"]);
    ok(p, &["--config", "neo.toml", "bootstrap", "--variant", "r-vector"]);
    ok(p, &["--config", "neo.toml", "train", "--episodes", "1"]);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(neo(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(neo(dir.path(), &["gen-catalog", "--bogus"]).status.code(), Some(2));
    assert_eq!(neo(dir.path(), &[]).status.code(), Some(2));
}

#[test]
fn catalog_mismatch_exits_3() {
    let dir = setup();
    let p = dir.path();
    ok(p, &["--config", "neo.toml", "bootstrap"]);
    ok(p, &["gen-catalog", "--seed", "4", "--catalog", "other.json"]);
    let out = neo(p, &["--config", "neo.toml", "evaluate", "--catalog", "other.json"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn show_config_prints_parseable_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["--show-config", "--variant", "one-hot", "--expansions", "9"]);
    let v: toml::Value = toml::from_str(&out).unwrap();
    assert_eq!(v["driver"]["variant"].as_str(), Some("one-hot"));
    assert_eq!(v["driver"]["search"]["cutoff"]["expansions"].as_integer(), Some(9));
    assert_eq!(v["driver"]["latency"]["c_io"].as_float(), Some(50.0));
}
