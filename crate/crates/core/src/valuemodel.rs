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

//! The value network: query dense stack, spatial replication of its output
//! onto every plan node, stacked tree convolutions, dynamic pooling and a
//! final dense stack; plus training targets and the training loop.

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NeoError, Result};
use crate::featurize::{node_bits, PlanVecTree, JOIN_WIDTH};
use crate::nn::{
    adam_step, dynamic_pool, dynamic_pool_backward, leaky, AdamConfig, AdamState, Dense, DenseCache, Param,
    TensorRecord, TreeConv, TreeConvCache, TreeLinks, LEFT, PARENT, RIGHT,
};
use crate::plan::{construction_states, is_subplan_unchecked, NodeKind, PlanForest, PlanNode, QueryId};

/// Layer widths and optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    pub query_layers: Vec<usize>,
    pub conv_channels: Vec<usize>,
    /// Hidden widths after pooling; a final linear layer maps to one output.
    pub post_layers: Vec<usize>,
    pub conv_bias: bool,
    pub layer_norm: bool,
    pub adam: AdamConfig,
    pub init_seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            query_layers: vec![128, 64, 32],
            conv_channels: vec![256, 128, 64],
            post_layers: vec![32, 16],
            conv_bias: true,
            layer_norm: true,
            adam: AdamConfig::default(),
            init_seed: 0,
        }
    }
}

impl NetConfig {
    /// Narrower layers for single-core runs.
    pub fn compact() -> Self {
        NetConfig {
            query_layers: vec![64, 32, 16],
            conv_channels: vec![64, 32, 16],
            post_layers: vec![16, 8],
            ..NetConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.query_layers.is_empty() || self.conv_channels.is_empty() {
            return Err(NeoError::config("value net needs at least one query layer and one tree conv layer"));
        }
        if self.query_layers.iter().chain(&self.conv_channels).chain(&self.post_layers).any(|&w| w == 0) {
            return Err(NeoError::config("layer widths must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostMode {
    Absolute,
    Relative,
}

impl std::str::FromStr for CostMode {
    type Err = NeoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" => Ok(CostMode::Absolute),
            "relative" => Ok(CostMode::Relative),
            _ => Err(NeoError::config(format!("unknown cost mode {s:?}"))),
        }
    }
}

/// Monotone map applied to costs before regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    Log1p,
    Identity,
}

impl Transform {
    pub fn apply(self, c: f64) -> f64 {
        match self {
            Transform::Log1p => c.ln_1p(),
            Transform::Identity => c,
        }
    }

    pub fn invert(self, y: f64) -> f64 {
        match self {
            Transform::Log1p => y.exp_m1(),
            Transform::Identity => y,
        }
    }
}

/// One executed complete plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceEntry {
    pub query_id: QueryId,
    pub plan: PlanForest,
    pub latency: f64,
    pub baseline: f64,
}

impl ExperienceEntry {
    pub fn cost(&self, mode: CostMode) -> f64 {
        match mode {
            CostMode::Absolute => self.latency,
            CostMode::Relative => self.latency / self.baseline,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.latency > 0.0 && self.baseline > 0.0) {
            return Err(NeoError::contract("experience latency and baseline must be positive"));
        }
        if self.plan.query_id() != &self.query_id || !self.plan.is_finished() {
            return Err(NeoError::contract("experience plan must be a complete plan of its query"));
        }
        Ok(())
    }
}

/// A partial plan with its regression target.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingState {
    pub query_id: QueryId,
    pub plan: PlanForest,
    pub target: f64,
}

/// Construction states of every experienced plan, each labelled with the
/// transformed minimum cost over all experienced completions of the same
/// query that contain it. Duplicates are merged by canonical key; output is
/// sorted by (query, key).
pub fn training_targets(experience: &[ExperienceEntry], mode: CostMode, transform: Transform) -> Result<Vec<TrainingState>> {
    if experience.is_empty() {
        return Err(NeoError::contract("training set from empty experience"));
    }
    // best cost per distinct complete plan, grouped by query
    let mut per_query: BTreeMap<&QueryId, BTreeMap<String, (&PlanForest, f64)>> = BTreeMap::new();
    for e in experience {
        e.validate()?;
        let c = e.cost(mode);
        let slot = per_query.entry(&e.query_id).or_default();
        slot.entry(e.plan.canonical_key())
            .and_modify(|(_, best)| *best = best.min(c))
            .or_insert((&e.plan, c));
    }
    let mut out = Vec::new();
    for (qid, completions) in per_query {
        let mut states: BTreeMap<String, PlanForest> = BTreeMap::new();
        for (plan, _) in completions.values() {
            for s in construction_states(plan)? {
                states.entry(s.canonical_key()).or_insert(s);
            }
        }
        for (_, state) in states {
            let best = completions
                .values()
                .filter(|(f, _)| is_subplan_unchecked(&state, f))
                .map(|&(_, c)| c)
                .fold(f64::INFINITY, f64::min);
            debug_assert!(best.is_finite());
            out.push(TrainingState {
                query_id: qid.clone(),
                plan: state,
                target: transform.apply(best),
            });
        }
    }
    Ok(out)
}

/// An encoded training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub query: Arc<Vec<f64>>,
    pub tree: PlanVecTree,
    pub target: f64,
}

/// Encodes training states with precomputed query vectors and a plan encoder.
pub fn build_training_set(
    experience: &[ExperienceEntry],
    mode: CostMode,
    transform: Transform,
    query_vecs: &HashMap<QueryId, Arc<Vec<f64>>>,
    encode: impl Fn(&PlanForest) -> PlanVecTree,
) -> Result<Vec<Sample>> {
    training_targets(experience, mode, transform)?
        .into_iter()
        .map(|s| {
            let query = query_vecs
                .get(&s.query_id)
                .cloned()
                .ok_or_else(|| NeoError::contract(format!("no query vector for {}", s.query_id)))?;
            Ok(Sample {
                query,
                tree: encode(&s.plan),
                target: s.target,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueNet {
    pub config: NetConfig,
    pub query_width: usize,
    pub node_width: usize,
    pub query_stack: Vec<Dense>,
    pub convs: Vec<TreeConv>,
    pub post: Vec<Dense>,
    pub head: Dense,
    /// Query vectors enter as `(q - in_shift) · in_scale`, per feature.
    pub in_shift: Vec<f64>,
    pub in_scale: Vec<f64>,
    /// Raw output `y` maps to `out_shift + out_scale · y`.
    pub out_shift: f64,
    pub out_scale: f64,
    pub calibrated: bool,
    pub adam: AdamState,
    /// Query-feature ranges standardized with one pooled scale, such as the
    /// coordinates of an embedding. Used only by `calibrate`.
    pub shared_scale: Vec<Range<usize>>,
}

struct Trace {
    nodes: usize,
    query: Vec<DenseCache>,
    convs: Vec<TreeConvCache>,
    pool_arg: Vec<usize>,
    post: Vec<DenseCache>,
    head: DenseCache,
}

const CHECKPOINT_FORMAT: &str = "neo-lite/value-net/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetCheckpoint {
    pub format: String,
    pub config: NetConfig,
    pub query_width: usize,
    pub node_width: usize,
    pub in_shift: Vec<f64>,
    pub in_scale: Vec<f64>,
    pub out_shift: f64,
    pub out_scale: f64,
    pub calibrated: bool,
    pub adam_step: u64,
    pub tensors: Vec<TensorRecord>,
}

impl ValueNet {
    pub fn new(config: NetConfig, query_width: usize, node_width: usize) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let ln = config.layer_norm;
        let mut query_stack = Vec::new();
        let mut prev = query_width;
        for &w in &config.query_layers {
            query_stack.push(Dense::new(prev, w, ln, true, &mut rng));
            prev = w;
        }
        let g = prev;
        let mut convs = Vec::new();
        let mut prev = node_width + g;
        for &c in &config.conv_channels {
            convs.push(TreeConv::new(prev, c, config.conv_bias, &mut rng));
            prev = c;
        }
        let mut post = Vec::new();
        for &w in &config.post_layers {
            post.push(Dense::new(prev, w, ln, true, &mut rng));
            prev = w;
        }
        let head = Dense::new(prev, 1, false, false, &mut rng);
        let adam = AdamState::new(config.adam.clone());
        Ok(ValueNet {
            config,
            query_width,
            node_width,
            query_stack,
            convs,
            post,
            head,
            in_shift: vec![0.0; query_width],
            in_scale: vec![1.0; query_width],
            out_shift: 0.0,
            out_scale: 1.0,
            calibrated: false,
            adam,
            shared_scale: Vec::new(),
        })
    }

    pub fn g_width(&self) -> usize {
        *self.config.query_layers.last().unwrap()
    }

    fn check_inputs(&self, q: &[f64], tree: &PlanVecTree) -> Result<()> {
        if q.len() != self.query_width {
            return Err(NeoError::shape(format!(
                "query vector has {} entries, net expects {}",
                q.len(),
                self.query_width
            )));
        }
        if tree.width != self.node_width {
            return Err(NeoError::shape(format!(
                "plan vectors have width {}, net expects {}",
                tree.width, self.node_width
            )));
        }
        if tree.is_empty() {
            return Err(NeoError::contract("prediction for an empty plan"));
        }
        Ok(())
    }

    fn forward(&self, q: &[f64], tree: &PlanVecTree) -> Result<(f64, Trace)> {
        self.check_inputs(q, tree)?;
        let mut g = self.standardize(q);
        let mut query = Vec::new();
        for layer in &self.query_stack {
            let (y, c) = layer.forward(&g, 1)?;
            query.push(c);
            g = y;
        }
        let n = tree.len();
        let aug = self.node_width + g.len();
        let mut x = Vec::with_capacity(n * aug);
        for i in 0..n {
            x.extend_from_slice(tree.node(i));
            x.extend_from_slice(&g);
        }
        let links = TreeLinks {
            left: &tree.left,
            right: &tree.right,
        };
        let mut convs = Vec::new();
        for conv in &self.convs {
            let (y, c) = conv.forward(&x, links)?;
            convs.push(c);
            x = y;
        }
        let channels = self.convs.last().unwrap().c_out;
        let (mut h, pool_arg) = dynamic_pool(&x, n, channels)?;
        let mut post = Vec::new();
        for layer in &self.post {
            let (y, c) = layer.forward(&h, 1)?;
            post.push(c);
            h = y;
        }
        let (y, head) = self.head.forward(&h, 1)?;
        let pred = self.out_shift + self.out_scale * y[0];
        Ok((
            pred,
            Trace {
                nodes: n,
                query,
                convs,
                pool_arg,
                post,
                head,
            },
        ))
    }

    fn backward(&mut self, trace: &Trace, tree: &PlanVecTree, dpred: f64) {
        let mut d = self.head.backward(&trace.head, &[dpred * self.out_scale]);
        for (layer, cache) in self.post.iter_mut().zip(&trace.post).rev() {
            d = layer.backward(cache, &d);
        }
        let mut dx = dynamic_pool_backward(&trace.pool_arg, trace.nodes, &d);
        let links = TreeLinks {
            left: &tree.left,
            right: &tree.right,
        };
        for (conv, cache) in self.convs.iter_mut().zip(&trace.convs).rev() {
            dx = conv.backward(cache, links, &dx);
        }
        let gw = self.g_width();
        let aug = self.node_width + gw;
        let mut dg = vec![0.0; gw];
        for i in 0..trace.nodes {
            for (j, dgj) in dg.iter_mut().enumerate() {
                *dgj += dx[i * aug + self.node_width + j];
            }
        }
        let mut d = dg;
        for (layer, cache) in self.query_stack.iter_mut().zip(&trace.query).rev() {
            d = layer.backward(cache, &d);
        }
    }

    /// Predicted transformed cost of the best completion of a plan.
    pub fn predict(&self, q: &[f64], tree: &PlanVecTree) -> Result<f64> {
        Ok(self.forward(q, tree)?.0)
    }

    /// Squared-error loss of one sample; accumulates gradients scaled by `weight`.
    pub fn accumulate_gradient(&mut self, sample: &Sample, weight: f64) -> Result<f64> {
        let (pred, trace) = self.forward(&sample.query, &sample.tree)?;
        let err = pred - sample.target;
        self.backward(&trace, &sample.tree, 2.0 * err * weight);
        Ok(err * err)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = Vec::new();
        for l in &mut self.query_stack {
            v.extend(l.params_mut());
        }
        for c in &mut self.convs {
            v.extend(c.params_mut());
        }
        for l in &mut self.post {
            v.extend(l.params_mut());
        }
        v.extend(self.head.params_mut());
        v
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut v = Vec::new();
        for l in &self.query_stack {
            v.extend(l.params());
        }
        for c in &self.convs {
            v.extend(c.params());
        }
        for l in &self.post {
            v.extend(l.params());
        }
        v.extend(self.head.params());
        v
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Param::zero_grad);
    }

    pub fn step(&mut self) -> Result<()> {
        let mut adam = std::mem::replace(&mut self.adam, AdamState::new(AdamConfig::default()));
        let r = adam_step(&mut self.params_mut(), &mut adam);
        self.adam = adam;
        r
    }

    pub fn standardize(&self, q: &[f64]) -> Vec<f64> {
        q.iter()
            .zip(&self.in_shift)
            .zip(&self.in_scale)
            .map(|((x, m), s)| (x - m) * s)
            .collect()
    }

    /// Fixes the input and output affine maps from the sample statistics:
    /// each query feature is standardized (features constant over the
    /// samples are left alone) and the output is centered on the targets.
    /// Features in a `shared_scale` range keep their own mean but divide by
    /// the range's pooled standard deviation.
    pub fn calibrate(&mut self, samples: &[Sample]) {
        let n = samples.len().max(1) as f64;
        let mut mean = vec![0.0; self.query_width];
        let mut var = vec![0.0; self.query_width];
        for j in 0..self.query_width {
            mean[j] = samples.iter().map(|s| s.query[j]).sum::<f64>() / n;
            var[j] = samples.iter().map(|s| (s.query[j] - mean[j]).powi(2)).sum::<f64>() / n;
        }
        for r in &self.shared_scale {
            let pooled = var[r.clone()].iter().sum::<f64>() / r.len().max(1) as f64;
            var[r.clone()].iter_mut().for_each(|v| *v = pooled);
        }
        for j in 0..self.query_width {
            let sd = var[j].sqrt();
            (self.in_shift[j], self.in_scale[j]) = if sd > 1e-9 { (mean[j], 1.0 / sd) } else { (0.0, 1.0) };
        }
        let mean = samples.iter().map(|s| s.target).sum::<f64>() / n;
        let var = samples.iter().map(|s| (s.target - mean).powi(2)).sum::<f64>() / n;
        self.out_shift = mean;
        self.out_scale = var.sqrt().max(0.1);
        self.calibrated = true;
    }

    pub fn to_checkpoint(&self) -> NetCheckpoint {
        let mut tensors = Vec::new();
        for (i, p) in self.params().into_iter().enumerate() {
            tensors.push(TensorRecord::new(format!("param.{i}"), &p.shape, &p.value));
        }
        for (i, (m, v)) in self.adam.m.iter().zip(&self.adam.v).enumerate() {
            tensors.push(TensorRecord::new(format!("adam.m.{i}"), &[m.len()], m));
            tensors.push(TensorRecord::new(format!("adam.v.{i}"), &[v.len()], v));
        }
        NetCheckpoint {
            format: CHECKPOINT_FORMAT.into(),
            config: self.config.clone(),
            query_width: self.query_width,
            node_width: self.node_width,
            in_shift: self.in_shift.clone(),
            in_scale: self.in_scale.clone(),
            out_shift: self.out_shift,
            out_scale: self.out_scale,
            calibrated: self.calibrated,
            adam_step: self.adam.step,
            tensors,
        }
    }

    pub fn from_checkpoint(ck: &NetCheckpoint) -> Result<Self> {
        if ck.format != CHECKPOINT_FORMAT {
            return Err(NeoError::Integrity(format!("unknown checkpoint format {:?}", ck.format)));
        }
        let mut net = ValueNet::new(ck.config.clone(), ck.query_width, ck.node_width)?;
        let by_name: HashMap<&str, &TensorRecord> = ck.tensors.iter().map(|t| (t.name.as_str(), t)).collect();
        let get = |name: &str| {
            by_name
                .get(name)
                .copied()
                .ok_or_else(|| NeoError::Integrity(format!("checkpoint lacks tensor {name}")))
        };
        let mut params = net.params_mut();
        let count = params.len();
        let mut m = Vec::new();
        let mut v = Vec::new();
        for (i, p) in params.iter_mut().enumerate() {
            p.value = get(&format!("param.{i}"))?.decode(&p.shape)?;
            if ck.adam_step > 0 {
                m.push(get(&format!("adam.m.{i}"))?.decode(&[p.len()])?);
                v.push(get(&format!("adam.v.{i}"))?.decode(&[p.len()])?);
            }
        }
        let expected = count * if ck.adam_step > 0 { 3 } else { 1 };
        if ck.tensors.len() != expected {
            return Err(NeoError::Integrity(format!(
                "checkpoint has {} tensors, expected {expected}",
                ck.tensors.len()
            )));
        }
        net.adam.step = ck.adam_step;
        net.adam.m = m;
        net.adam.v = v;
        if ck.in_shift.len() != ck.query_width || ck.in_scale.len() != ck.query_width {
            return Err(NeoError::Integrity("checkpoint input normalization has the wrong width".into()));
        }
        net.in_shift = ck.in_shift.clone();
        net.in_scale = ck.in_scale.clone();
        net.out_shift = ck.out_shift;
        net.out_scale = ck.out_scale;
        net.calibrated = ck.calibrated;
        Ok(net)
    }
}

/// Minibatch Adam on mean squared error; batches are drawn from seeded
/// shuffles of the sample list. Returns the loss of every step.
pub fn train(net: &mut ValueNet, samples: &[Sample], steps: usize, batch: usize, seed: u64) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(NeoError::contract("training on an empty sample set"));
    }
    if steps == 0 {
        return Ok(Vec::new());
    }
    if !net.calibrated {
        net.calibrate(samples);
    }
    let batch = batch.clamp(1, samples.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut cursor = order.len();
    let mut history = Vec::with_capacity(steps);
    for _ in 0..steps {
        net.zero_grad();
        let mut loss = 0.0;
        for _ in 0..batch {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            let s = &samples[order[cursor]];
            cursor += 1;
            loss += net.accumulate_gradient(s, 1.0 / batch as f64)?;
        }
        net.step()?;
        history.push(loss / batch as f64);
    }
    net.zero_grad();
    Ok(history)
}

struct NodeAct {
    _keep: Arc<PlanNode>,
    bits: Vec<usize>,
    layers: Vec<Vec<f64>>,
    subtree_max: Vec<f64>,
}

/// Incremental scorer for the plans of one query. Activations depend only
/// on a node's subtree, so they are cached per shared subtree and each new
/// child plan costs one or a few node evaluations.
pub struct PlanScorer<'a> {
    net: &'a ValueNet,
    relation_count: usize,
    /// Contribution of the replicated query vector to the first layer, per slice.
    g_terms: [Vec<f64>; 3],
    index: HashMap<*const PlanNode, usize>,
    nodes: Vec<NodeAct>,
}

impl<'a> PlanScorer<'a> {
    pub fn new(net: &'a ValueNet, query_vec: &[f64], relation_count: usize) -> Result<Self> {
        if query_vec.len() != net.query_width {
            return Err(NeoError::shape("query vector width does not match the net"));
        }
        if crate::featurize::node_width(relation_count, JOIN_WIDTH) != net.node_width {
            return Err(NeoError::shape("relation count does not match the net's node width"));
        }
        let mut g = net.standardize(query_vec);
        for layer in &net.query_stack {
            g = layer.apply(&g)?;
        }
        let conv = &net.convs[0];
        let g_terms = [PARENT, LEFT, RIGHT].map(|s| {
            let mut z = vec![0.0; conv.c_out];
            for (j, &gj) in g.iter().enumerate() {
                if gj != 0.0 {
                    for (zo, w) in z.iter_mut().zip(conv.row(s, net.node_width + j)) {
                        *zo += gj * w;
                    }
                }
            }
            z
        });
        Ok(PlanScorer {
            net,
            relation_count,
            g_terms,
            index: HashMap::new(),
            nodes: Vec::new(),
        })
    }

    fn node(&mut self, node: &Arc<PlanNode>) -> Result<usize> {
        let key = Arc::as_ptr(node);
        if let Some(&i) = self.index.get(&key) {
            return Ok(i);
        }
        let kids = match node.kind() {
            NodeKind::Join { left, right, .. } => Some((self.node(left)?, self.node(right)?)),
            NodeKind::Scan { .. } => None,
        };
        let bits = node_bits(node, self.relation_count, JOIN_WIDTH)?;
        let net = self.net;
        let mut layers: Vec<Vec<f64>> = Vec::with_capacity(net.convs.len());
        for (k, conv) in net.convs.iter().enumerate() {
            let mut z = conv.bias_or_zero();
            if k == 0 {
                // first-layer input is (0/1 node bits) ‖ g
                let mut add = |s: usize, bits: &[usize]| {
                    for &b in bits {
                        z.iter_mut().zip(conv.row(s, b)).for_each(|(a, w)| *a += w);
                    }
                    z.iter_mut().zip(&self.g_terms[s]).for_each(|(a, b)| *a += b);
                };
                add(PARENT, &bits);
                if let Some((l, r)) = kids {
                    add(LEFT, &self.nodes[l].bits);
                    add(RIGHT, &self.nodes[r].bits);
                }
            } else {
                conv.accumulate(PARENT, &layers[k - 1], &mut z);
                if let Some((l, r)) = kids {
                    conv.accumulate(LEFT, &self.nodes[l].layers[k - 1], &mut z);
                    conv.accumulate(RIGHT, &self.nodes[r].layers[k - 1], &mut z);
                }
            }
            z.iter_mut().for_each(|v| *v = leaky(*v));
            layers.push(z);
        }
        let mut subtree_max = layers.last().unwrap().clone();
        if let Some((l, r)) = kids {
            for c in [l, r] {
                for (m, v) in subtree_max.iter_mut().zip(&self.nodes[c].subtree_max) {
                    *m = m.max(*v);
                }
            }
        }
        self.nodes.push(NodeAct {
            _keep: Arc::clone(node),
            bits,
            layers,
            subtree_max,
        });
        let i = self.nodes.len() - 1;
        self.index.insert(key, i);
        Ok(i)
    }

    pub fn score(&mut self, plan: &PlanForest) -> Result<f64> {
        let mut pooled: Option<Vec<f64>> = None;
        for root in plan.roots() {
            let i = self.node(root)?;
            let m = &self.nodes[i].subtree_max;
            match &mut pooled {
                None => pooled = Some(m.clone()),
                Some(p) => p.iter_mut().zip(m).for_each(|(a, b)| *a = a.max(*b)),
            }
        }
        let mut h = pooled.ok_or_else(|| NeoError::contract("scoring an empty plan"))?;
        for layer in &self.net.post {
            h = layer.apply(&h)?;
        }
        let y = self.net.head.apply(&h)?[0];
        Ok(self.net.out_shift + self.net.out_scale * y)
    }

    pub fn cached_nodes(&self) -> usize {
        self.nodes.len()
    }
}
