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


use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use neo_bench::Fixture;
use neo_core::expert;
use neo_core::featurize::encode_plan;
use neo_core::nn::{TreeConv, TreeLinks};
use neo_core::rvec::{build_sentences, train_embeddings, SgnsParams};
use neo_core::search::{best_first_search, SearchConfig};
use neo_core::simdb::{simulate_latency, LatencyModel};
use neo_core::valuemodel::PlanScorer;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tree_conv(c: &mut Criterion) {
    let f = Fixture::new();
    let q = f.largest();
    let plan = expert::optimize(q, &f.catalog, &LatencyModel::default()).unwrap();
    let tree = encode_plan(&plan, &f.catalog);
    let conv = TreeConv::new(tree.width, 64, true, &mut ChaCha8Rng::seed_from_u64(0));
    let links = TreeLinks {
        left: &tree.left,
        right: &tree.right,
    };
    c.bench_function("tree_conv/expert_plan_64ch", |b| {
        b.iter(|| conv.forward(black_box(&tree.features), links).unwrap())
    });
}

fn value_net(c: &mut Criterion) {
    let f = Fixture::new();
    let q = f.largest();
    let qv = f.query_vec(q);
    let plan = expert::optimize(q, &f.catalog, &LatencyModel::default()).unwrap();
    let tree = encode_plan(&plan, &f.catalog);
    c.bench_function("value_net/predict", |b| b.iter(|| f.net.predict(black_box(&qv), &tree).unwrap()));
    c.bench_function("value_net/cached_score", |b| {
        b.iter_batched(
            || PlanScorer::new(&f.net, &qv, f.catalog.relation_count()).unwrap(),
            |mut s| s.score(black_box(&plan)).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn search(c: &mut Criterion) {
    let f = Fixture::new();
    let q = f.largest();
    let qv = f.query_vec(q);
    let cfg = SearchConfig::expansions(64);
    c.bench_function("search/64_expansions", |b| {
        b.iter(|| {
            let mut scorer = PlanScorer::new(&f.net, &qv, f.catalog.relation_count()).unwrap();
            best_first_search(&mut scorer, q, &f.catalog, &cfg).unwrap()
        })
    });
}

fn expert_and_simulator(c: &mut Criterion) {
    let f = Fixture::new();
    let q = f.largest();
    let model = LatencyModel::default();
    c.bench_function("expert/optimize_largest", |b| {
        b.iter(|| expert::optimize(black_box(q), &f.catalog, &model).unwrap())
    });
    let plan = expert::optimize(q, &f.catalog, &model).unwrap();
    c.bench_function("simdb/simulate_latency", |b| {
        b.iter(|| simulate_latency(&f.catalog, black_box(&plan), q, &model).unwrap())
    });
}

fn embeddings(c: &mut Criterion) {
    let f = Fixture::new();
    let sentences: Vec<Vec<String>> = build_sentences(&f.catalog, false).into_iter().take(2000).collect();
    let params = SgnsParams {
        epochs: 1,
        ..SgnsParams::default()
    };
    let mut g = c.benchmark_group("rvec");
    g.sample_size(10);
    g.bench_function("sgns_epoch_2000_rows", |b| b.iter(|| train_embeddings(black_box(&sentences), &params).unwrap()));
    g.finish();
}

criterion_group!(benches, tree_conv, value_net, search, expert_and_simulator, embeddings);
criterion_main!(benches);
