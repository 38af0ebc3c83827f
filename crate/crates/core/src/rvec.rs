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

//! Row vectors: skip-gram embeddings trained on database rows treated as
//! sentences, and the per-predicate feature vectors built from them.

use std::collections::HashMap;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NeoError, Result};
use crate::plan::{ColumnPredicate, ColumnRef, CompareOp, RelId};
use crate::simdb::Catalog;

/// Skip-gram with negative sampling hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgnsParams {
    pub dim: usize,
    /// Context radius; rows are short, so the default covers a whole row.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SgnsParams {
    fn default() -> Self {
        SgnsParams {
            dim: 16,
            window: 32,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 0,
        }
    }
}

impl SgnsParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.window == 0 || self.negatives == 0 || self.epochs == 0 {
            return Err(NeoError::config("sgns dim, window, negatives and epochs must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NeoError::config("sgns learning rate must be positive"));
        }
        Ok(())
    }
}

/// Trained value embeddings. Tokens have the form `table.column=value`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub dim: usize,
    pub tokens: Vec<String>,
    pub counts: Vec<u64>,
    /// Row-major `tokens.len() × dim`.
    pub vectors: Vec<f64>,
    /// Mean negative log-likelihood per training pair, one entry per epoch.
    pub loss_history: Vec<f64>,
    lookup: HashMap<String, usize>,
    /// `table.column` → `(value, token)` sorted by value.
    by_column: HashMap<String, Vec<(i64, usize)>>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    dim: usize,
    tokens: Vec<String>,
    counts: Vec<u64>,
    vectors: String,
    loss_history: Vec<f64>,
}

const MODEL_FORMAT: &str = "neo-lite/embeddings/v1";

pub fn token(table: &str, column: &str, value: i64) -> String {
    format!("{table}.{column}={value}")
}

fn split_token(tok: &str) -> Option<(&str, i64)> {
    let (col, val) = tok.rsplit_once('=')?;
    Some((col, val.parse().ok()?))
}

impl EmbeddingModel {
    fn new(dim: usize, tokens: Vec<String>, counts: Vec<u64>, vectors: Vec<f64>, loss_history: Vec<f64>) -> Result<Self> {
        if vectors.len() != tokens.len() * dim || counts.len() != tokens.len() {
            return Err(NeoError::shape("embedding arrays disagree with vocabulary size"));
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(NeoError::contract("embedding token with zero count"));
        }
        let lookup: HashMap<String, usize> = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let mut by_column: HashMap<String, Vec<(i64, usize)>> = HashMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if let Some((col, v)) = split_token(t) {
                by_column.entry(col.to_string()).or_default().push((v, i));
            }
        }
        for vals in by_column.values_mut() {
            vals.sort_unstable();
        }
        Ok(EmbeddingModel {
            dim,
            tokens,
            counts,
            vectors,
            loss_history,
            lookup,
            by_column,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.lookup.get(token).copied()
    }

    pub fn vector(&self, idx: usize) -> &[f64] {
        &self.vectors[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn vector_of(&self, token: &str) -> Option<&[f64]> {
        self.index_of(token).map(|i| self.vector(i))
    }

    /// Width of [`embed_predicate`] output.
    pub fn predicate_width(&self) -> usize {
        predicate_width(self.dim)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            dim: self.dim,
            tokens: self.tokens.clone(),
            counts: self.counts.clone(),
            vectors: encode_f64s(&self.vectors),
            loss_history: self.loss_history.clone(),
        };
        serde_json::to_string(&file).expect("embedding model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return Err(NeoError::Integrity(format!("unknown embedding format {:?}", file.format)));
        }
        let vectors = decode_f64s(&file.vectors)?;
        EmbeddingModel::new(file.dim, file.tokens, file.counts, vectors, file.loss_history)
    }
}

pub(crate) fn decode_f64s(text: &str) -> Result<Vec<f64>> {
    let bytes = B64
        .decode(text)
        .map_err(|e| NeoError::Integrity(format!("bad base64 payload: {e}")))?;
    if bytes.len() % 8 != 0 {
        return Err(NeoError::Integrity("float payload length is not a multiple of 8".into()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub(crate) fn encode_f64s(values: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    B64.encode(bytes)
}

pub fn predicate_width(dim: usize) -> usize {
    CompareOp::ALL.len() + 2 + dim + 1
}

fn row_tokens(catalog: &Catalog, rel: RelId, row: usize, out: &mut Vec<String>) {
    let table = catalog.table(rel);
    for (c, def) in table.columns.iter().enumerate() {
        let v = catalog.columns[rel.index()][c][row];
        out.push(token(&table.name, &def.name, v as i64));
    }
}

/// One sentence per base-table row; with `denormalize`, additionally one per
/// row of every table holding foreign keys, extended with the tokens of each
/// referenced row. The primary-key token stays in every sentence: it is the
/// shared context that makes co-occurring values end up with similar input
/// vectors.
pub fn build_sentences(catalog: &Catalog, denormalize: bool) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for (t, table) in catalog.tables.iter().enumerate() {
        let rel = RelId(t as u16);
        for row in 0..table.row_count {
            let mut s = Vec::new();
            row_tokens(catalog, rel, row, &mut s);
            out.push(s);
        }
    }
    if denormalize {
        for (t, table) in catalog.tables.iter().enumerate() {
            if table.fk_edges.is_empty() {
                continue;
            }
            let rel = RelId(t as u16);
            for row in 0..table.row_count {
                let mut s = Vec::new();
                row_tokens(catalog, rel, row, &mut s);
                for &(col, target) in &table.fk_edges {
                    let target_row = catalog.columns[t][col as usize][row] as usize;
                    row_tokens(catalog, target, target_row, &mut s);
                }
                out.push(s);
            }
        }
    }
    out
}

const NEGATIVE_TABLE_SIZE: usize = 1 << 20;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Token ids laid out so that a uniform draw from the table follows the
/// unigram distribution raised to 0.75.
fn negative_table(counts: &[u64]) -> Vec<u32> {
    let size = NEGATIVE_TABLE_SIZE.max(counts.len());
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
    let total: f64 = weights.iter().sum();
    let mut table = Vec::with_capacity(size);
    let mut acc = 0.0;
    for (id, w) in weights.iter().enumerate() {
        acc += w;
        let end = ((acc / total) * size as f64).round() as usize;
        // every token keeps at least one slot
        let end = end.max(table.len() + 1).min(size);
        table.resize(end, id as u32);
    }
    table
}

/// Skip-gram with negative sampling. Negatives are drawn from the unigram
/// distribution raised to 0.75, via a lookup table; the learning rate decays
/// linearly to `1e-4 × learning_rate`. Single-threaded and deterministic for a seed.
pub fn train_embeddings(sentences: &[Vec<String>], params: &SgnsParams) -> Result<EmbeddingModel> {
    params.validate()?;
    let mut lookup: HashMap<&str, u32> = HashMap::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut corpus: Vec<Vec<u32>> = Vec::with_capacity(sentences.len());
    for s in sentences {
        let mut ids = Vec::with_capacity(s.len());
        for tok in s {
            let id = *lookup.entry(tok.as_str()).or_insert_with(|| {
                tokens.push(tok.clone());
                counts.push(0);
                (tokens.len() - 1) as u32
            });
            counts[id as usize] += 1;
            ids.push(id);
        }
        if ids.len() > 1 {
            corpus.push(ids);
        }
    }
    if tokens.is_empty() {
        return Err(NeoError::config("cannot train embeddings on an empty corpus"));
    }

    let dim = params.dim;
    let v = tokens.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut w_in: Vec<f64> = (0..v * dim).map(|_| (rng.random::<f64>() - 0.5) / dim as f64).collect();
    let mut w_out = vec![0.0; v * dim];

    let table = negative_table(&counts);

    let total_tokens: usize = corpus.iter().map(|s| s.len()).sum::<usize>() * params.epochs;
    let mut seen = 0usize;
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut loss_history = Vec::with_capacity(params.epochs);
    let mut grad = vec![0.0; dim];
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        let (mut loss, mut pairs) = (0.0, 0usize);
        for &si in &order {
            let s = &corpus[si];
            for (i, &center) in s.iter().enumerate() {
                let lr = params.learning_rate * (1.0 - seen as f64 / total_tokens as f64).max(1e-4);
                seen += 1;
                let lo = i.saturating_sub(params.window);
                let hi = (i + params.window + 1).min(s.len());
                let cin = center as usize * dim;
                for (j, &ctx) in s.iter().enumerate().take(hi).skip(lo) {
                    if j == i {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for k in 0..=params.negatives {
                        let (target, label) = if k == 0 {
                            (ctx as usize, 1.0)
                        } else {
                            let t = table[rng.random_range(0..table.len())] as usize;
                            if t == ctx as usize {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let cout = target * dim;
                        let f: f64 = (0..dim).map(|d| w_in[cin + d] * w_out[cout + d]).sum();
                        let p = sigmoid(f);
                        loss -= if label > 0.0 { p.max(1e-300).ln() } else { (1.0 - p).max(1e-300).ln() };
                        let g = (label - p) * lr;
                        for d in 0..dim {
                            grad[d] += g * w_out[cout + d];
                            w_out[cout + d] += g * w_in[cin + d];
                        }
                    }
                    for d in 0..dim {
                        w_in[cin + d] += grad[d];
                    }
                    pairs += 1;
                }
            }
        }
        loss_history.push(if pairs > 0 { loss / pairs as f64 } else { 0.0 });
    }
    EmbeddingModel::new(dim, tokens, counts, w_in, loss_history)
}

/// Feature vector for one predicate: operator one-hot, matched-token count,
/// fraction of the column's vocabulary the predicate selects, mean embedding
/// of the matched tokens and their summed corpus count.
///
/// Range predicates match the in-vocabulary value closest to the literal.
pub fn embed_predicate(model: &EmbeddingModel, catalog: &Catalog, predicate: &ColumnPredicate) -> Result<Vec<f64>> {
    let col: ColumnRef = predicate.column_ref();
    let def = catalog.column_def(col)?;
    let key = format!("{}.{}", catalog.table(col.rel).name, def.name);
    let empty = Vec::new();
    let vocab = model.by_column.get(&key).unwrap_or(&empty);
    let find = |v: i64| vocab.binary_search_by_key(&v, |&(x, _)| x).ok().map(|i| vocab[i].1);

    let mut matched: Vec<usize> = match predicate.op {
        CompareOp::Eq | CompareOp::Neq => find(predicate.values[0]).into_iter().collect(),
        CompareOp::Lt | CompareOp::Gt => {
            let lit = predicate.values[0];
            vocab
                .iter()
                .min_by_key(|&&(x, _)| ((x - lit).abs(), x))
                .map(|&(_, i)| i)
                .into_iter()
                .collect()
        }
        CompareOp::InList => predicate.values.iter().filter_map(|&v| find(v)).collect(),
        CompareOp::LikePrefix => vocab
            .iter()
            .filter(|&&(x, _)| predicate.matches(x))
            .map(|&(_, i)| i)
            .collect(),
    };
    matched.sort_unstable();
    matched.dedup();

    let dim = model.dim;
    let mut out = vec![0.0; predicate_width(dim)];
    out[predicate.op.index()] = 1.0;
    let base = CompareOp::ALL.len();
    out[base] = matched.len() as f64;
    if !vocab.is_empty() {
        let selected = vocab.iter().filter(|&&(x, _)| predicate.matches(x)).count();
        out[base + 1] = selected as f64 / vocab.len() as f64;
    }
    if !matched.is_empty() {
        let emb = &mut out[base + 2..base + 2 + dim];
        for &i in &matched {
            for (e, x) in emb.iter_mut().zip(model.vector(i)) {
                *e += x;
            }
        }
        let n = matched.len() as f64;
        emb.iter_mut().for_each(|e| *e /= n);
        out[base + 2 + dim] = matched.iter().map(|&i| model.counts[i] as f64).sum();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simdb::{generate_catalog, AttributeSpec, CatalogConfig, ForeignKeySpec, TableSpec};

    #[test]
    fn negative_table_follows_smoothed_unigram() {
        let counts = [1u64, 16, 81, 1];
        let table = negative_table(&counts);
        assert_eq!(table.len(), NEGATIVE_TABLE_SIZE);
        let total: f64 = counts.iter().map(|&c| (c as f64).powf(0.75)).sum();
        for (id, &c) in counts.iter().enumerate() {
            let share = table.iter().filter(|&&t| t == id as u32).count() as f64 / table.len() as f64;
            let want = (c as f64).powf(0.75) / total;
            assert!((share - want).abs() < 1e-5, "token {id}: {share} vs {want}");
        }
    }

    fn catalog() -> Catalog {
        let t = |name: &str, rows, fks: &[&str]| TableSpec {
            name: name.into(),
            rows,
            foreign_keys: fks
                .iter()
                .map(|r| ForeignKeySpec {
                    references: (*r).into(),
                    skew: 0.0,
                })
                .collect(),
            attributes: vec![AttributeSpec {
                name: "a".into(),
                domain: 20,
                skew: 0.0,
            }],
            index: None,
        };
        let config = CatalogConfig {
            tables: vec![t("d1", 100, &[]), t("d2", 100, &[]), t("f", 1000, &["d1", "d2"])],
            correlations: vec![],
            histogram_buckets: 32,
        };
        generate_catalog(&config, 3).unwrap()
    }

    #[test]
    fn sentence_counts() {
        let cat = catalog();
        let plain = build_sentences(&cat, false);
        assert_eq!(plain.len(), 1200);
        let denorm = build_sentences(&cat, true);
        assert_eq!(denorm.len(), 2200);
        // fact id, d1_id, d2_id, a plus id and attribute of each dimension row
        assert!(denorm[1200..].iter().all(|s| s.len() == 8));
        assert!(denorm[1200].iter().any(|t| t.starts_with("d1.a=")));
        assert!(denorm[1200].iter().any(|t| t.starts_with("d2.a=")));
    }

    #[test]
    fn training_is_deterministic_and_loss_decreases() {
        let cat = catalog();
        let s = build_sentences(&cat, true);
        let p = SgnsParams {
            epochs: 3,
            ..SgnsParams::default()
        };
        let a = train_embeddings(&s, &p).unwrap();
        let b = train_embeddings(&s, &p).unwrap();
        assert_eq!(a, b);
        assert!(a.loss_history.last().unwrap() < a.loss_history.first().unwrap());
        assert!(train_embeddings(&[], &p).is_err());
    }

    #[test]
    fn predicate_vectors() {
        let cat = catalog();
        let m = train_embeddings(&build_sentences(&cat, false), &SgnsParams::default()).unwrap();
        let w = m.predicate_width();
        assert_eq!(w, 6 + 2 + 16 + 1);
        let f = RelId(2);
        let a = cat.table(f).column_index("a").unwrap();

        let oov = embed_predicate(&m, &cat, &ColumnPredicate::new(f, a, CompareOp::Eq, vec![999]).unwrap()).unwrap();
        let mut want = vec![0.0; w];
        want[0] = 1.0;
        assert_eq!(oov, want);

        let one = embed_predicate(&m, &cat, &ColumnPredicate::new(f, a, CompareOp::Eq, vec![3]).unwrap()).unwrap();
        let tok = token("f", "a", 3);
        assert_eq!(one[6], 1.0);
        assert_eq!(one[7], 1.0 / 20.0);
        assert_eq!(&one[8..24], m.vector_of(&tok).unwrap());
        assert_eq!(one[24], m.counts[m.index_of(&tok).unwrap()] as f64);

        let two = embed_predicate(&m, &cat, &ColumnPredicate::new(f, a, CompareOp::InList, vec![3, 5]).unwrap()).unwrap();
        let other = embed_predicate(&m, &cat, &ColumnPredicate::new(f, a, CompareOp::Eq, vec![5]).unwrap()).unwrap();
        assert_eq!(two[6], 2.0);
        for d in 8..24 {
            assert_eq!(two[d], (one[d] + other[d]) / 2.0);
        }

        let like = embed_predicate(&m, &cat, &ColumnPredicate::new(f, a, CompareOp::LikePrefix, vec![1]).unwrap()).unwrap();
        // 1 and 10..=19
        assert_eq!(like[6], 11.0);
    }

    #[test]
    fn json_round_trip() {
        let cat = catalog();
        let m = train_embeddings(&build_sentences(&cat, false), &SgnsParams::default()).unwrap();
        let back = EmbeddingModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }
}
