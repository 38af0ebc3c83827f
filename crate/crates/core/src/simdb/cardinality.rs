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

//! Exact result sizes over the generated rows.

use std::collections::HashMap;

use super::catalog::Catalog;
use crate::error::{NeoError, Result};
use crate::plan::{JoinEdge, PlanNode, Query, RelId, RelSet};

/// Memoized true cardinalities of relation subsets for one query.
///
/// A node's cardinality depends only on the relations below it (join
/// operator and scan kind do not change the result), so subsets are the cache key.
#[derive(Debug, Clone)]
pub struct TrueCardinalities {
    query: Query,
    /// Row ids passing the query's predicates, per query relation.
    selected: HashMap<RelId, Vec<u32>>,
    cache: HashMap<RelSet, f64>,
}

impl TrueCardinalities {
    pub fn new(catalog: &Catalog, query: &Query) -> Result<Self> {
        let mut selected = HashMap::new();
        for &rel in &query.relations {
            if rel.index() >= catalog.relation_count() {
                return Err(NeoError::Catalog(format!("unknown relation {rel}")));
            }
            let preds: Vec<_> = query.predicates_on(rel).collect();
            for p in &preds {
                catalog.column_def(p.column_ref())?;
            }
            let rows = catalog.table(rel).row_count;
            let ids: Vec<u32> = (0..rows as u32)
                .filter(|&r| {
                    preds.iter().all(|p| {
                        let v = catalog.values(p.column_ref())[r as usize];
                        p.matches(v as i64)
                    })
                })
                .collect();
            selected.insert(rel, ids);
        }
        for e in &query.join_edges {
            catalog.column_def(e.left)?;
            catalog.column_def(e.right)?;
        }
        Ok(TrueCardinalities {
            query: query.clone(),
            selected,
            cache: HashMap::new(),
        })
    }

    pub fn query(&self) -> &Query {
        &self.query
    }

    /// Rows of `rel` surviving its predicates.
    pub fn selected_rows(&self, rel: RelId) -> usize {
        self.selected.get(&rel).map_or(0, Vec::len)
    }

    /// Exact size of the join (or cross product, across components) of `set`.
    pub fn of_set(&mut self, catalog: &Catalog, set: RelSet) -> f64 {
        if let Some(&c) = self.cache.get(&set) {
            return c;
        }
        let mut total = 1.0;
        for component in self.components(set) {
            total *= self.component_count(catalog, component);
        }
        self.cache.insert(set, total);
        total
    }

    fn edges_within(&self, set: RelSet) -> Vec<JoinEdge> {
        self.query
            .join_edges
            .iter()
            .filter(|e| e.rels().is_subset_of(set))
            .copied()
            .collect()
    }

    fn components(&self, set: RelSet) -> Vec<RelSet> {
        let edges = self.edges_within(set);
        let mut left = set;
        let mut out = Vec::new();
        while let Some(start) = left.min() {
            let mut comp = RelSet::single(start);
            loop {
                let grown = edges
                    .iter()
                    .filter(|e| e.rels().intersects(comp))
                    .fold(comp, |acc, e| acc.union(e.rels()));
                if grown == comp {
                    break;
                }
                comp = grown;
            }
            out.push(comp);
            left = RelSet(left.0 & !comp.0);
        }
        out
    }

    fn component_count(&self, catalog: &Catalog, comp: RelSet) -> f64 {
        let edges = self.edges_within(comp);
        if comp.len() == 1 {
            return self.selected_rows(comp.min().unwrap()) as f64;
        }
        if edges.len() == comp.len() - 1 {
            let root = comp.min().unwrap();
            let weights = self.tree_weights(catalog, root, None, &edges);
            weights.iter().sum()
        } else {
            self.materialized_count(catalog, comp, &edges)
        }
    }

    /// Per selected row of `rel`: number of join results of the subtree hanging
    /// below it (acyclic join graphs only).
    fn tree_weights(&self, catalog: &Catalog, rel: RelId, parent: Option<RelId>, edges: &[JoinEdge]) -> Vec<f64> {
        let rows = &self.selected[&rel];
        let mut weights = vec![1.0; rows.len()];
        for e in edges {
            let (mine, theirs) = if e.left.rel == rel {
                (e.left, e.right)
            } else if e.right.rel == rel {
                (e.right, e.left)
            } else {
                continue;
            };
            if Some(theirs.rel) == parent {
                continue;
            }
            let child_weights = self.tree_weights(catalog, theirs.rel, Some(rel), edges);
            let child_vals = catalog.values(theirs);
            let mut by_value: HashMap<u32, f64> = HashMap::new();
            for (&row, w) in self.selected[&theirs.rel].iter().zip(child_weights) {
                *by_value.entry(child_vals[row as usize]).or_default() += w;
            }
            let my_vals = catalog.values(mine);
            for (w, &row) in weights.iter_mut().zip(rows) {
                *w *= by_value.get(&my_vals[row as usize]).copied().unwrap_or(0.0);
            }
        }
        weights
    }

    /// Fallback for cyclic join graphs: materialize row-id tuples.
    fn materialized_count(&self, catalog: &Catalog, comp: RelSet, edges: &[JoinEdge]) -> f64 {
        let start = comp.min().unwrap();
        let mut order = vec![start];
        let mut tuples: Vec<Vec<u32>> = self.selected[&start].iter().map(|&r| vec![r]).collect();
        let mut joined = RelSet::single(start);
        while joined != comp {
            let next = edges
                .iter()
                .find_map(|e| {
                    if joined.contains(e.left.rel) && !joined.contains(e.right.rel) {
                        Some(e.right.rel)
                    } else if joined.contains(e.right.rel) && !joined.contains(e.left.rel) {
                        Some(e.left.rel)
                    } else {
                        None
                    }
                })
                .expect("component is connected");
            let conds: Vec<(usize, u16, u16)> = edges
                .iter()
                .filter_map(|e| {
                    if e.left.rel == next && joined.contains(e.right.rel) {
                        Some((order.iter().position(|&r| r == e.right.rel).unwrap(), e.right.column, e.left.column))
                    } else if e.right.rel == next && joined.contains(e.left.rel) {
                        Some((order.iter().position(|&r| r == e.left.rel).unwrap(), e.left.column, e.right.column))
                    } else {
                        None
                    }
                })
                .collect();
            let (slot0, col0, ncol0) = conds[0];
            let mut index: HashMap<u32, Vec<u32>> = HashMap::new();
            let next_key = catalog.values(crate::plan::ColumnRef::new(next, ncol0));
            for &r in &self.selected[&next] {
                index.entry(next_key[r as usize]).or_default().push(r);
            }
            let mut out = Vec::new();
            for t in &tuples {
                let key = catalog.values(crate::plan::ColumnRef::new(order[slot0], col0))[t[slot0] as usize];
                let Some(matches) = index.get(&key) else { continue };
                for &m in matches {
                    let ok = conds[1..].iter().all(|&(slot, col, ncol)| {
                        catalog.values(crate::plan::ColumnRef::new(order[slot], col))[t[slot] as usize]
                            == catalog.values(crate::plan::ColumnRef::new(next, ncol))[m as usize]
                    });
                    if ok {
                        let mut nt = t.clone();
                        nt.push(m);
                        out.push(nt);
                    }
                }
            }
            tuples = out;
            order.push(next);
            joined = joined.union(RelSet::single(next));
        }
        tuples.len() as f64
    }
}

/// Exact cardinality of a fully specified subtree.
pub fn true_cardinality(catalog: &Catalog, node: &PlanNode, query: &Query) -> Result<f64> {
    if node.unspecified_scans() > 0 {
        return Err(NeoError::contract("cardinality of a subtree with unspecified scans"));
    }
    if !node.rels().is_subset_of(query.rel_set()) {
        return Err(NeoError::contract("subtree scans relations outside the query"));
    }
    let mut cards = TrueCardinalities::new(catalog, query)?;
    Ok(cards.of_set(catalog, node.rels()))
}
