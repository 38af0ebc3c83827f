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

//! The learning loop: bootstrap from the expert, then alternate retraining
//! the value network on experience with value-guided search over the
//! training queries, recording every executed plan.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NeoError, Result};
use crate::expert;
use crate::featurize::{embedding_ranges, encode_plan, encode_query, node_width, query_vec_len, Variant, JOIN_WIDTH};
use crate::plan::{PlanForest, Query, QueryId};
use crate::rvec::EmbeddingModel;
use crate::search::{best_first_search, Cutoff, SearchConfig};
use crate::simdb::{simulate_latency_cached, Catalog, LatencyModel, TrueCardinalities};
use crate::valuemodel::{
    build_training_set, train, CostMode, ExperienceEntry, NetCheckpoint, NetConfig, PlanScorer, Transform, ValueNet,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriverConfig {
    pub variant: Variant,
    pub cost_mode: CostMode,
    pub transform: Transform,
    pub net: NetConfig,
    pub search: SearchConfig,
    pub latency: LatencyModel,
    /// Adam steps per episode.
    pub train_steps: usize,
    pub batch: usize,
    /// Reinitialize the net before every retraining instead of warm starting.
    pub cold_start: bool,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            variant: Variant::Histogram,
            cost_mode: CostMode::Absolute,
            transform: Transform::Log1p,
            net: NetConfig::compact(),
            search: SearchConfig {
                cutoff: Cutoff::Expansions(64),
                ..SearchConfig::default()
            },
            latency: LatencyModel::default(),
            train_steps: 300,
            batch: 16,
            cold_start: false,
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

impl DriverConfig {
    pub fn validate(&self) -> Result<()> {
        self.net.validate()?;
        self.search.validate()?;
        self.latency.validate()?;
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(NeoError::config("train fraction must lie in (0, 1]"));
        }
        if self.batch == 0 {
            return Err(NeoError::config("batch size must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetric {
    pub query_id: QueryId,
    pub split: Split,
    /// Net output for the chosen plan; absent while the expert is the policy.
    pub predicted: Option<f64>,
    pub neo_latency: f64,
    pub expert_latency: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub queries: Vec<QueryMetric>,
    pub train_mean_ratio: Option<f64>,
    pub test_mean_ratio: Option<f64>,
    pub loss_first: Option<f64>,
    pub loss_last: Option<f64>,
}

impl EpisodeMetrics {
    fn new(episode: usize, queries: Vec<QueryMetric>, loss: &[f64]) -> Self {
        let mean = |split| {
            let rs: Vec<f64> = queries.iter().filter(|m| m.split == split).map(|m| m.ratio).collect();
            (!rs.is_empty()).then(|| rs.iter().sum::<f64>() / rs.len() as f64)
        };
        EpisodeMetrics {
            episode,
            train_mean_ratio: mean(Split::Train),
            test_mean_ratio: mean(Split::Test),
            loss_first: loss.first().copied(),
            loss_last: loss.last().copied(),
            queries,
        }
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &QueryMetric> {
        self.queries.iter().filter(move |m| m.split == split)
    }

    /// Test queries whose plan is slower than the expert's.
    pub fn regressions(&self, split: Split) -> usize {
        self.split(split).filter(|m| m.ratio > 1.0).count()
    }

    /// CSV rows without header.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for m in &self.queries {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.episode,
                m.split.name(),
                m.query_id,
                m.neo_latency,
                m.expert_latency,
                m.ratio
            ));
        }
        out
    }
}

pub const METRICS_HEADER: &str = "episode,split,query_id,neo_latency,expert_latency,ratio\n";

/// Everything needed to continue a run.
pub struct RunState {
    pub catalog: Arc<Catalog>,
    pub config: DriverConfig,
    pub train: Vec<Query>,
    pub test: Vec<Query>,
    pub experience: Vec<ExperienceEntry>,
    /// Expert plan and its latency per query, frozen at bootstrap.
    pub expert: BTreeMap<QueryId, (PlanForest, f64)>,
    pub net: ValueNet,
    pub embeddings: Option<Arc<EmbeddingModel>>,
    pub episode: usize,
    query_vecs: HashMap<QueryId, Arc<Vec<f64>>>,
    cards: HashMap<QueryId, Mutex<TrueCardinalities>>,
}

fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RunState {
    /// Splits the workload (seeded shuffle, then `train_fraction` to train)
    /// and builds a fresh network.
    pub fn new(
        catalog: Arc<Catalog>,
        workload: Vec<Query>,
        config: DriverConfig,
        embeddings: Option<Arc<EmbeddingModel>>,
    ) -> Result<Self> {
        config.validate()?;
        if workload.is_empty() {
            return Err(NeoError::config("empty workload"));
        }
        let mut queries = workload;
        queries.shuffle(&mut ChaCha8Rng::seed_from_u64(mix(config.seed, 1)));
        let n_train = ((queries.len() as f64 * config.train_fraction).round() as usize).clamp(1, queries.len());
        let test = queries.split_off(n_train);
        RunState::with_split(catalog, queries, test, config, embeddings)
    }

    pub fn with_split(
        catalog: Arc<Catalog>,
        train: Vec<Query>,
        test: Vec<Query>,
        config: DriverConfig,
        embeddings: Option<Arc<EmbeddingModel>>,
    ) -> Result<Self> {
        config.validate()?;
        let emb = embeddings.as_deref();
        let qw = query_vec_len(&catalog, config.variant, emb)?;
        let nw = node_width(catalog.relation_count(), JOIN_WIDTH);
        let mut net_config = config.net.clone();
        net_config.init_seed = mix(config.seed, 2);
        let mut net = ValueNet::new(net_config, qw, nw)?;
        net.shared_scale = embedding_ranges(&catalog, config.variant, emb)?;
        let mut query_vecs = HashMap::new();
        let mut cards = HashMap::new();
        for q in train.iter().chain(&test) {
            q.validate()?;
            let v = encode_query(q, &catalog, config.variant, emb)?.to_vec();
            if query_vecs.insert(q.id.clone(), Arc::new(v)).is_some() {
                return Err(NeoError::config(format!("duplicate query id {}", q.id)));
            }
            cards.insert(q.id.clone(), Mutex::new(TrueCardinalities::new(&catalog, q)?));
        }
        Ok(RunState {
            catalog,
            config,
            train,
            test,
            experience: Vec::new(),
            expert: BTreeMap::new(),
            net,
            embeddings,
            episode: 0,
            query_vecs,
            cards,
        })
    }

    fn latency(&self, q: &Query, plan: &PlanForest) -> Result<f64> {
        let mut cards = self.cards[&q.id].lock().expect("cardinality cache lock");
        simulate_latency_cached(&self.catalog, plan, &mut cards, &self.config.latency)
    }

    /// Records expert plans and latencies for every query; experience gets
    /// the training queries only.
    pub fn bootstrap(&mut self) -> Result<()> {
        if !self.experience.is_empty() || !self.expert.is_empty() {
            return Err(NeoError::contract("bootstrap on a state that already has experience"));
        }
        let all: Vec<&Query> = self.train.iter().chain(&self.test).collect();
        let results: Vec<Result<(PlanForest, f64)>> = all
            .par_iter()
            .map(|q| {
                let plan = expert::optimize(q, &self.catalog, &self.config.latency)?;
                let l = self.latency(q, &plan)?;
                Ok((plan, l))
            })
            .collect();
        for (q, r) in all.iter().zip(results) {
            let (plan, l) = r?;
            self.expert.insert(q.id.clone(), (plan, l));
        }
        for q in &self.train {
            let (plan, l) = self.expert[&q.id].clone();
            self.experience.push(ExperienceEntry {
                query_id: q.id.clone(),
                plan,
                latency: l,
                baseline: l,
            });
        }
        Ok(())
    }

    fn baseline(&self, q: &Query) -> Result<f64> {
        self.expert
            .get(&q.id)
            .map(|(_, l)| *l)
            .ok_or_else(|| NeoError::contract(format!("query {} has no baseline; bootstrap first", q.id)))
    }

    /// The current policy: the expert until the net has been trained, then
    /// value-guided search.
    pub fn query_vec(&self, id: &QueryId) -> Option<&[f64]> {
        self.query_vecs.get(id).map(|v| v.as_slice())
    }

    /// Plan chosen by the current policy. Queries outside the workload are
    /// encoded on the fly.
    pub fn plan_for(&self, q: &Query) -> Result<(PlanForest, Option<f64>)> {
        if !self.net.calibrated {
            return match self.expert.get(&q.id) {
                Some((plan, _)) => Ok((plan.clone(), None)),
                None => Ok((expert::optimize(q, &self.catalog, &self.config.latency)?, None)),
            };
        }
        let encoded;
        let qv = match self.query_vecs.get(&q.id) {
            Some(v) => v.as_slice(),
            None => {
                q.validate()?;
                encoded = encode_query(q, &self.catalog, self.config.variant, self.embeddings.as_deref())?.to_vec();
                &encoded
            }
        };
        let mut scorer = PlanScorer::new(&self.net, qv, self.catalog.relation_count())?;
        let out = best_first_search(&mut scorer, q, &self.catalog, &self.config.search)?;
        Ok((out.plan, Some(out.score)))
    }

    fn run_queries(&self, queries: &[Query], split: Split) -> Result<Vec<(QueryMetric, PlanForest)>> {
        queries
            .par_iter()
            .map(|q| {
                let (plan, predicted) = self.plan_for(q)?;
                let neo = self.latency(q, &plan)?;
                let expert = self.baseline(q)?;
                Ok((
                    QueryMetric {
                        query_id: q.id.clone(),
                        split,
                        predicted,
                        neo_latency: neo,
                        expert_latency: expert,
                        ratio: neo / expert,
                    },
                    plan,
                ))
            })
            .collect()
    }

    /// Plans and simulates the given queries without touching experience.
    pub fn evaluate(&self, train: &[Query], test: &[Query]) -> Result<EpisodeMetrics> {
        let mut metrics: Vec<QueryMetric> = self.run_queries(train, Split::Train)?.into_iter().map(|(m, _)| m).collect();
        metrics.extend(self.run_queries(test, Split::Test)?.into_iter().map(|(m, _)| m));
        Ok(EpisodeMetrics::new(self.episode, metrics, &[]))
    }

    /// Current-policy metrics over both splits.
    pub fn evaluate_all(&self) -> Result<EpisodeMetrics> {
        self.evaluate(&self.train, &self.test)
    }

    /// Retrain, search every training query, execute and record, then
    /// evaluate the test queries.
    pub fn run_episode(&mut self) -> Result<EpisodeMetrics> {
        if self.expert.is_empty() {
            return Err(NeoError::contract("run_episode before bootstrap"));
        }
        let samples = build_training_set(
            &self.experience,
            self.config.cost_mode,
            self.config.transform,
            &self.query_vecs,
            |p| encode_plan(p, &self.catalog),
        )?;
        if self.config.cold_start {
            let fresh = ValueNet::new(self.net.config.clone(), self.net.query_width, self.net.node_width)?;
            self.net = fresh;
        }
        let loss = train(
            &mut self.net,
            &samples,
            self.config.train_steps,
            self.config.batch,
            mix(self.config.seed, 1000 + self.episode as u64),
        )?;
        self.episode += 1;

        let executed = self.run_queries(&self.train, Split::Train)?;
        for (q, (m, plan)) in self.train.iter().zip(&executed) {
            self.experience.push(ExperienceEntry {
                query_id: q.id.clone(),
                plan: plan.clone(),
                latency: m.neo_latency,
                baseline: m.expert_latency,
            });
        }
        let mut metrics: Vec<QueryMetric> = executed.into_iter().map(|(m, _)| m).collect();
        metrics.extend(self.run_queries(&self.test, Split::Test)?.into_iter().map(|(m, _)| m));
        Ok(EpisodeMetrics::new(self.episode, metrics, &loss))
    }

    pub fn is_test_query(&self, id: &QueryId) -> bool {
        self.test.iter().any(|q| &q.id == id)
    }

    /// Writes `state.json`, `experience.jsonl` and `model.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let hash = self.catalog.content_hash();
        let state = StateFile {
            format: STATE_FORMAT.into(),
            catalog_hash: hash.clone(),
            config: self.config.clone(),
            episode: self.episode,
            train: self.train.clone(),
            test: self.test.clone(),
            expert: self
                .expert
                .iter()
                .map(|(id, (plan, l))| ExpertRecord {
                    query_id: id.clone(),
                    plan: plan.clone(),
                    latency: *l,
                })
                .collect(),
            embeddings_hash: self.embeddings.as_ref().map(|m| crate::simdb::hex_digest(m.to_json().as_bytes())),
        };
        fs::write(dir.join("state.json"), serde_json::to_string_pretty(&state)?)?;
        write_experience(&dir.join("experience.jsonl"), &self.experience)?;
        let model = ModelFile {
            manifest: Manifest {
                catalog_hash: hash,
                variant: self.config.variant,
                cost_mode: self.config.cost_mode,
                transform: self.config.transform,
            },
            checkpoint: self.net.to_checkpoint(),
        };
        fs::write(dir.join("model.json"), serde_json::to_string(&model)?)?;
        Ok(())
    }

    /// Restores a saved state; the catalog (and embeddings, for r-vector
    /// runs) must hash to the recorded values.
    pub fn load(dir: &Path, catalog: Arc<Catalog>, embeddings: Option<Arc<EmbeddingModel>>) -> Result<Self> {
        let state: StateFile = serde_json::from_str(&fs::read_to_string(dir.join("state.json"))?)
            .map_err(|e| NeoError::Integrity(format!("state.json: {e}")))?;
        if state.format != STATE_FORMAT {
            return Err(NeoError::Integrity(format!("unknown state format {:?}", state.format)));
        }
        let hash = catalog.content_hash();
        if state.catalog_hash != hash {
            return Err(NeoError::Integrity("catalog does not match the saved state".into()));
        }
        let emb_hash = embeddings.as_ref().map(|m| crate::simdb::hex_digest(m.to_json().as_bytes()));
        if state.embeddings_hash.is_some() && state.embeddings_hash != emb_hash {
            return Err(NeoError::Integrity("embedding model does not match the saved state".into()));
        }
        let model: ModelFile = serde_json::from_str(&fs::read_to_string(dir.join("model.json"))?)
            .map_err(|e| NeoError::Integrity(format!("model.json: {e}")))?;
        let m = &model.manifest;
        if m.catalog_hash != hash
            || m.variant != state.config.variant
            || m.cost_mode != state.config.cost_mode
            || m.transform != state.config.transform
        {
            return Err(NeoError::Integrity("model manifest does not match the state".into()));
        }
        let mut rs = RunState::with_split(catalog, state.train, state.test, state.config, embeddings)?;
        let mut net = ValueNet::from_checkpoint(&model.checkpoint)?;
        if net.query_width != rs.net.query_width || net.node_width != rs.net.node_width {
            return Err(NeoError::Integrity("checkpoint input widths do not match the catalog".into()));
        }
        net.shared_scale = std::mem::take(&mut rs.net.shared_scale);
        rs.net = net;
        rs.episode = state.episode;
        for r in state.expert {
            rs.expert.insert(r.query_id, (r.plan, r.latency));
        }
        rs.experience = read_experience(&dir.join("experience.jsonl"))?;
        for e in &rs.experience {
            if rs.is_test_query(&e.query_id) || !rs.query_vecs.contains_key(&e.query_id) {
                return Err(NeoError::Integrity(format!("experience entry for unexpected query {}", e.query_id)));
            }
        }
        Ok(rs)
    }
}

const STATE_FORMAT: &str = "neo-lite/run-state/v1";

#[derive(Serialize, Deserialize)]
struct ExpertRecord {
    query_id: QueryId,
    plan: PlanForest,
    latency: f64,
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    format: String,
    catalog_hash: String,
    config: DriverConfig,
    episode: usize,
    train: Vec<Query>,
    test: Vec<Query>,
    expert: Vec<ExpertRecord>,
    embeddings_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub catalog_hash: String,
    pub variant: Variant,
    pub cost_mode: CostMode,
    pub transform: Transform,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    manifest: Manifest,
    checkpoint: NetCheckpoint,
}

pub fn write_experience(path: &Path, entries: &[ExperienceEntry]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for e in entries {
        serde_json::to_writer(&mut f, e)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_experience(path: &Path) -> Result<Vec<ExperienceEntry>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let e: ExperienceEntry = serde_json::from_str(l)
                .map_err(|err| NeoError::Integrity(format!("experience line {}: {err}", i + 1)))?;
            e.validate()?;
            Ok(e)
        })
        .collect()
}

#[cfg(test)]
mod tests;
