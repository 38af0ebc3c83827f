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

use super::*;
use crate::search::Cutoff;
use crate::simdb::{generate_catalog, generate_workload, simulate_latency, CatalogConfig, WorkloadConfig};

fn small_config() -> DriverConfig {
    DriverConfig {
        net: NetConfig::compact(),
        search: SearchConfig {
            cutoff: Cutoff::Expansions(12),
            ..SearchConfig::default()
        },
        train_steps: 20,
        batch: 8,
        seed: 3,
        ..DriverConfig::default()
    }
}

fn state() -> RunState {
    let cat = Arc::new(generate_catalog(&CatalogConfig::correlated_snowflake(), 1).unwrap());
    let wl = WorkloadConfig {
        queries: 10,
        max_joins: 4,
        ..WorkloadConfig::default()
    };
    let qs = generate_workload(&cat, &wl, 2).unwrap();
    RunState::new(cat, qs, small_config(), None).unwrap()
}

#[test]
fn bootstrap_records_expert_plans() {
    let mut s = state();
    assert_eq!((s.train.len(), s.test.len()), (8, 2));
    s.bootstrap().unwrap();
    assert_eq!(s.experience.len(), s.train.len());
    for e in &s.experience {
        let q = s.train.iter().find(|q| q.id == e.query_id).unwrap();
        assert_eq!(e.latency, simulate_latency(&s.catalog, &e.plan, q, &s.config.latency).unwrap());
        assert_eq!(e.latency, e.baseline);
    }
    let m = s.evaluate_all().unwrap();
    assert!(m.queries.iter().all(|q| q.ratio == 1.0));
    assert_eq!(m.train_mean_ratio, Some(1.0));
    assert!(s.bootstrap().is_err());
}

#[test]
fn episodes_grow_experience_and_isolate_test_queries() {
    let mut s = state();
    assert!(s.run_episode().is_err());
    s.bootstrap().unwrap();
    let m = s.run_episode().unwrap();
    assert_eq!(s.experience.len(), 2 * s.train.len());
    assert!(s.experience.iter().all(|e| !s.is_test_query(&e.query_id)));
    assert_eq!(m.split(Split::Train).count(), s.train.len());
    assert_eq!(m.split(Split::Test).count(), s.test.len());
    assert!(m.queries.iter().all(|q| q.ratio > 0.0 && q.predicted.is_some()));
    let before = s.experience.len();
    let a = s.evaluate_all().unwrap();
    let b = s.evaluate_all().unwrap();
    assert_eq!(a, b);
    assert_eq!(s.experience.len(), before);
}

#[test]
fn runs_are_deterministic() {
    let run = || {
        let mut s = state();
        s.bootstrap().unwrap();
        let mut csv = String::new();
        for _ in 0..2 {
            csv.push_str(&s.run_episode().unwrap().csv_rows());
        }
        csv
    };
    assert_eq!(run(), run());
}

#[test]
fn save_and_load_continue_identically() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = state();
    s.bootstrap().unwrap();
    s.run_episode().unwrap();
    s.save(dir.path()).unwrap();
    let mut loaded = RunState::load(dir.path(), Arc::clone(&s.catalog), None).unwrap();
    assert_eq!(loaded.experience, s.experience);
    assert_eq!(loaded.net, s.net);
    let a = s.run_episode().unwrap();
    let b = loaded.run_episode().unwrap();
    assert_eq!(a, b);

    let other = Arc::new(generate_catalog(&CatalogConfig::correlated_snowflake(), 2).unwrap());
    assert!(matches!(RunState::load(dir.path(), other, None), Err(NeoError::Integrity(_))));
    let model = dir.path().join("model.json");
    let text = fs::read_to_string(&model).unwrap();
    fs::write(&model, text.replace("\"cost_mode\":\"absolute\"", "\"cost_mode\":\"relative\"")).unwrap();
    assert!(matches!(
        RunState::load(dir.path(), Arc::clone(&s.catalog), None),
        Err(NeoError::Integrity(_))
    ));
}
