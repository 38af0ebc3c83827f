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

//! The plan grammar: one-step refinements of a partial plan, the subplan
//! relation, and the canonical bottom-up construction of a complete plan.

use std::sync::Arc;

use super::node::{JoinOp, NodeKind, PlanForest, PlanNode, ScanKind};
use super::query::Query;
use super::relset::RelSet;
use crate::error::{NeoError, Result};

/// How the grammar may refine a partial plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanSpace {
    /// Relations that may be read through an index scan.
    pub indexable: RelSet,
    /// Allow merging roots that share no join edge.
    pub allow_cross_products: bool,
}

impl PlanSpace {
    pub fn new(indexable: RelSet) -> Self {
        PlanSpace {
            indexable,
            allow_cross_products: false,
        }
    }

    pub fn with_cross_products(mut self, allow: bool) -> Self {
        self.allow_cross_products = allow;
        self
    }

    /// Scan kinds a relation can be specialized to.
    pub fn scan_choices(&self, rel: super::relset::RelId) -> &'static [ScanKind] {
        if self.indexable.contains(rel) {
            &[ScanKind::Table, ScanKind::Index]
        } else {
            &[ScanKind::Table]
        }
    }

    /// Every plan reachable from `plan` by one action: specializing one
    /// unspecified scan, or merging two roots under a join operator (both
    /// orientations). Empty iff the plan is complete.
    pub fn children(&self, plan: &PlanForest, query: &Query) -> Vec<PlanForest> {
        let mut out = Vec::new();
        let roots = plan.roots();

        for (i, root) in roots.iter().enumerate() {
            if root.unspecified_scans() == 0 {
                continue;
            }
            for leaf in root.preorder() {
                let Some((ScanKind::Unspecified, rel)) = leaf.scan_kind() else {
                    continue;
                };
                for &kind in self.scan_choices(rel) {
                    let new_root = replace_leaf(root, rel, kind);
                    let mut new_roots = roots.to_vec();
                    new_roots[i] = new_root;
                    out.push(PlanForest::new(plan.query_id().clone(), new_roots));
                }
            }
        }

        for i in 0..roots.len() {
            for j in (i + 1)..roots.len() {
                let (a, b) = (&roots[i], &roots[j]);
                if !self.allow_cross_products && !query.connected(a.rels(), b.rels()) {
                    continue;
                }
                let rest: Vec<Arc<PlanNode>> = roots
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != i && k != j)
                    .map(|(_, r)| Arc::clone(r))
                    .collect();
                for op in JoinOp::ALL {
                    for (l, r) in [(a, b), (b, a)] {
                        let mut new_roots = rest.clone();
                        new_roots.push(PlanNode::join(op, Arc::clone(l), Arc::clone(r)));
                        out.push(PlanForest::new(plan.query_id().clone(), new_roots));
                    }
                }
            }
        }
        out
    }
}

/// Rebuilds `node` with the unspecified leaf for `rel` replaced by `kind`.
fn replace_leaf(node: &Arc<PlanNode>, rel: super::relset::RelId, kind: ScanKind) -> Arc<PlanNode> {
    match node.kind() {
        NodeKind::Scan { rel: r, .. } if *r == rel => PlanNode::scan(kind, rel),
        NodeKind::Scan { .. } => Arc::clone(node),
        NodeKind::Join { op, left, right } => {
            if left.rels().contains(rel) {
                PlanNode::join(*op, replace_leaf(left, rel, kind), Arc::clone(right))
            } else if right.rels().contains(rel) {
                PlanNode::join(*op, Arc::clone(left), replace_leaf(right, rel, kind))
            } else {
                Arc::clone(node)
            }
        }
    }
}

/// `small` is refined by `large`: unspecified scans may become table or index
/// scans; everything else must match exactly.
fn tree_matches(small: &PlanNode, large: &PlanNode) -> bool {
    match (small.kind(), large.kind()) {
        (
            NodeKind::Scan { kind: ks, rel: rs },
            NodeKind::Scan { kind: kl, rel: rl },
        ) => rs == rl && (ks == kl || *ks == ScanKind::Unspecified),
        (
            NodeKind::Join {
                op: os,
                left: ls,
                right: rs,
            },
            NodeKind::Join {
                op: ol,
                left: ll,
                right: rl,
            },
        ) => os == ol && tree_matches(ls, ll) && tree_matches(rs, rl),
        _ => false,
    }
}

/// True iff `large` can be built from `small` by specializing unspecified
/// scans and joining roots: every root of `small` must appear as a
/// (scan-compatible) subtree of some root of `large`.
pub fn is_subplan(small: &PlanForest, large: &PlanForest) -> Result<bool> {
    if small.query_id() != large.query_id() {
        return Err(NeoError::contract(format!(
            "subplan check across queries {} and {}",
            small.query_id(),
            large.query_id()
        )));
    }
    Ok(is_subplan_unchecked(small, large))
}

pub(crate) fn is_subplan_unchecked(small: &PlanForest, large: &PlanForest) -> bool {
    small.roots().iter().all(|s| {
        large
            .roots()
            .iter()
            .find(|l| s.rels().is_subset_of(l.rels()))
            .and_then(|l| l.find_subtree(s.rels()))
            .is_some_and(|sub| tree_matches(s, sub))
    })
}

/// The canonical bottom-up construction of a complete plan: the all-unspecified
/// forest, then one scan specialization per relation in catalog order, then
/// one join per internal node in post-order (left to right). Returns `2n` states.
pub fn construction_states(plan: &PlanForest) -> Result<Vec<PlanForest>> {
    let root = match plan.root() {
        Some(r) if plan.is_finished() => Arc::clone(r),
        _ => {
            return Err(NeoError::contract(
                "construction states require a complete plan",
            ))
        }
    };
    let qid = plan.query_id().clone();
    let mut leaves: Vec<&PlanNode> = root.preorder().into_iter().filter(|n| n.is_leaf()).collect();
    leaves.sort_by_key(|n| n.scan_kind().map(|(_, r)| r));

    let mut roots: Vec<Arc<PlanNode>> = leaves
        .iter()
        .map(|n| PlanNode::scan(ScanKind::Unspecified, n.scan_kind().unwrap().1))
        .collect();
    let mut states = vec![PlanForest::new(qid.clone(), roots.clone())];

    for (slot, leaf) in leaves.iter().enumerate() {
        let (kind, rel) = leaf.scan_kind().unwrap();
        roots[slot] = PlanNode::scan(kind, rel);
        states.push(PlanForest::new(qid.clone(), roots.clone()));
    }

    let mut joins = Vec::new();
    postorder_joins(&root, &mut joins);
    let mut current: Vec<Arc<PlanNode>> = roots;
    for join in joins {
        let (l, r) = join.children().unwrap();
        current.retain(|n| n.rels() != l.rels() && n.rels() != r.rels());
        current.push(Arc::clone(join));
        states.push(PlanForest::new(qid.clone(), current.clone()));
    }
    Ok(states)
}

fn postorder_joins<'a>(node: &'a Arc<PlanNode>, out: &mut Vec<&'a Arc<PlanNode>>) {
    if let Some((l, r)) = node.children() {
        postorder_joins(l, out);
        postorder_joins(r, out);
        out.push(node);
    }
}
