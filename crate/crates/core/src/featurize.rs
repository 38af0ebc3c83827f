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

//! Value-network inputs: the query-level vector (join graph plus predicate
//! block) and one vector per plan node (join one-hot plus scan bits).

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{NeoError, Result};
use crate::plan::{ColumnRef, JoinOp, NodeKind, PlanForest, PlanNode, Query, ScanKind};
use crate::rvec::{embed_predicate, EmbeddingModel};
use crate::simdb::{histogram_selectivity, Catalog};

/// Join operators encoded per node.
pub const JOIN_WIDTH: usize = 3;

/// How predicates are encoded in the query vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    OneHot,
    Histogram,
    RVector,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::OneHot => "one-hot",
            Variant::Histogram => "histogram",
            Variant::RVector => "r-vector",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = NeoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one-hot" => Ok(Variant::OneHot),
            "histogram" => Ok(Variant::Histogram),
            "r-vector" => Ok(Variant::RVector),
            _ => Err(NeoError::config(format!("unknown featurization variant {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryVec {
    pub join_graph_bits: Vec<f64>,
    pub predicate_block: Vec<f64>,
}

impl QueryVec {
    pub fn len(&self) -> usize {
        self.join_graph_bits.len() + self.predicate_block.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `join_graph_bits ‖ predicate_block`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.join_graph_bits.clone();
        v.extend_from_slice(&self.predicate_block);
        v
    }
}

/// Index of the pair `(i, j)`, `i < j`, in the row-major upper triangle.
fn pair_slot(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Predicate slot width per column for a variant.
pub fn slot_width(variant: Variant, embeddings: Option<&EmbeddingModel>) -> Result<usize> {
    match variant {
        Variant::OneHot | Variant::Histogram => Ok(1),
        Variant::RVector => embeddings
            .map(|m| m.predicate_width())
            .ok_or_else(|| NeoError::config("r-vector featurization needs an embedding model")),
    }
}

/// Length of every query vector for this catalog and variant.
pub fn query_vec_len(catalog: &Catalog, variant: Variant, embeddings: Option<&EmbeddingModel>) -> Result<usize> {
    let n = catalog.relation_count();
    Ok(n * (n - 1) / 2 + catalog.all_columns().len() * slot_width(variant, embeddings)?)
}

/// Query-vector ranges holding one embedding each: the mean value vector
/// inside every column's r-vector slot. Empty for the other variants.
pub fn embedding_ranges(
    catalog: &Catalog,
    variant: Variant,
    embeddings: Option<&EmbeddingModel>,
) -> Result<Vec<Range<usize>>> {
    let Some(model) = embeddings.filter(|_| variant == Variant::RVector) else {
        return Ok(Vec::new());
    };
    let n = catalog.relation_count();
    let width = model.predicate_width();
    // operator one-hot, then the match count and match fraction
    let offset = crate::plan::CompareOp::ALL.len() + 2;
    Ok((0..catalog.all_columns().len())
        .map(|c| {
            let start = n * (n - 1) / 2 + c * width + offset;
            start..start + model.dim
        })
        .collect())
}

pub fn encode_query(
    query: &Query,
    catalog: &Catalog,
    variant: Variant,
    embeddings: Option<&EmbeddingModel>,
) -> Result<QueryVec> {
    let width = slot_width(variant, embeddings)?;
    let n = catalog.relation_count();
    let mut join_graph_bits = vec![0.0; n * (n - 1) / 2];
    for e in &query.join_edges {
        let (a, b) = (e.left.rel.index(), e.right.rel.index());
        if a.max(b) >= n {
            return Err(NeoError::Catalog(format!("edge outside catalog in query {}", query.id)));
        }
        if a != b {
            join_graph_bits[pair_slot(a.min(b), a.max(b), n)] = 1.0;
        }
    }

    let columns = catalog.all_columns();
    let slots: HashMap<ColumnRef, usize> = columns.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut predicate_block = vec![0.0; columns.len() * width];
    let mut grouped: Vec<(usize, Vec<&crate::plan::ColumnPredicate>)> = Vec::new();
    for p in &query.predicates {
        let slot = *slots
            .get(&p.column_ref())
            .ok_or_else(|| NeoError::Catalog(format!("predicate column outside catalog in {}", query.id)))?;
        match grouped.iter_mut().find(|(s, _)| *s == slot) {
            Some((_, ps)) => ps.push(p),
            None => grouped.push((slot, vec![p])),
        }
    }
    for (slot, preds) in grouped {
        let out = &mut predicate_block[slot * width..(slot + 1) * width];
        match variant {
            Variant::OneHot => out[0] = 1.0,
            Variant::Histogram => {
                let mut sel = 1.0;
                for p in preds {
                    sel *= histogram_selectivity(catalog, p)?;
                }
                out[0] = sel;
            }
            Variant::RVector => {
                let model = embeddings.expect("checked by slot_width");
                let count_slots = [crate::plan::CompareOp::ALL.len(), width - 1];
                for p in &preds {
                    let mut v = embed_predicate(model, catalog, p)?;
                    for &i in &count_slots {
                        v[i] = v[i].ln_1p();
                    }
                    for (o, x) in out.iter_mut().zip(&v) {
                        *o += x;
                    }
                }
                let k = preds.len() as f64;
                out.iter_mut().for_each(|o| *o /= k);
            }
        }
    }
    Ok(QueryVec {
        join_graph_bits,
        predicate_block,
    })
}

/// Per-node vectors of a plan forest, flattened in pre-order per root.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanVecTree {
    pub width: usize,
    /// Row-major `nodes × width`.
    pub features: Vec<f64>,
    pub left: Vec<Option<usize>>,
    pub right: Vec<Option<usize>>,
    pub roots: Vec<usize>,
}

impl PlanVecTree {
    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.features[i * self.width..(i + 1) * self.width]
    }
}

/// Node vector width: join one-hot plus (table, index) bits per relation.
pub fn node_width(relation_count: usize, join_width: usize) -> usize {
    join_width + 2 * relation_count
}

/// Indices of the set entries of a node's vector. Every entry is 0 or 1.
pub fn node_bits(node: &PlanNode, relation_count: usize, join_width: usize) -> Result<Vec<usize>> {
    let mut bits = Vec::new();
    if let Some(op) = node.join_op() {
        let slot = op as usize;
        if slot >= join_width {
            return Err(NeoError::shape(format!("{op:?} does not fit a join block of width {join_width}")));
        }
        bits.push(slot);
    }
    for n in node.preorder() {
        if let NodeKind::Scan { kind, rel } = n.kind() {
            if rel.index() >= relation_count {
                return Err(NeoError::shape(format!("relation {rel} outside the encoded catalog")));
            }
            let base = join_width + 2 * rel.index();
            match kind {
                ScanKind::Table => bits.push(base),
                ScanKind::Index => bits.push(base + 1),
                ScanKind::Unspecified => bits.extend([base, base + 1]),
            }
        }
    }
    bits.sort_unstable();
    Ok(bits)
}

pub fn encode_plan(plan: &PlanForest, catalog: &Catalog) -> PlanVecTree {
    encode_plan_with(plan, catalog.relation_count(), JOIN_WIDTH).expect("plan relations come from the catalog")
}

/// Encoding with an explicit relation count and join block width.
pub fn encode_plan_with(plan: &PlanForest, relation_count: usize, join_width: usize) -> Result<PlanVecTree> {
    let width = node_width(relation_count, join_width);
    let mut tree = PlanVecTree {
        width,
        features: Vec::new(),
        left: Vec::new(),
        right: Vec::new(),
        roots: Vec::new(),
    };
    fn visit(node: &PlanNode, tree: &mut PlanVecTree, rc: usize, jw: usize) -> Result<usize> {
        let idx = tree.left.len();
        let mut v = vec![0.0; tree.width];
        for b in node_bits(node, rc, jw)? {
            v[b] = 1.0;
        }
        tree.features.extend(v);
        tree.left.push(None);
        tree.right.push(None);
        if let Some((l, r)) = node.children() {
            let li = visit(l, tree, rc, jw)?;
            let ri = visit(r, tree, rc, jw)?;
            tree.left[idx] = Some(li);
            tree.right[idx] = Some(ri);
        }
        Ok(idx)
    }
    for root in plan.roots() {
        let idx = visit(root, &mut tree, relation_count, join_width)?;
        tree.roots.push(idx);
    }
    Ok(tree)
}

/// Scan kind encoded for a relation, read back from a node vector.
pub fn decode_scan_bits(vector: &[f64], join_width: usize, rel: usize) -> Option<ScanKind> {
    let base = join_width + 2 * rel;
    match (vector[base] == 1.0, vector[base + 1] == 1.0) {
        (true, true) => Some(ScanKind::Unspecified),
        (true, false) => Some(ScanKind::Table),
        (false, true) => Some(ScanKind::Index),
        (false, false) => None,
    }
}

const _: () = assert!(JoinOp::Merge as usize == 0 && JoinOp::Hash as usize == 1 && JoinOp::Loop as usize == 2);
