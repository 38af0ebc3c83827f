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

//! Bootstrap expert: a Selinger-style dynamic program over relation subsets,
//! costed with histogram estimates under independence and inclusion.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::error::{NeoError, Result};
use crate::plan::{JoinOp, PlanForest, PlanNode, PlanSpace, Query, RelId, RelSet};
use crate::simdb::{
    histogram_selectivity, join_key, join_ordering, scan_ordering, tree_cost, Catalog, Input, LatencyModel,
    Ordering,
};

/// Estimated cost of a complete plan with the per-node cardinality estimates
/// (pre-order) that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedCost {
    pub value: f64,
    pub est_cardinalities: Vec<f64>,
}

/// Histogram-based cardinality estimates for one query.
#[derive(Debug, Clone)]
pub struct CardinalityEstimator {
    base: HashMap<RelId, f64>,
    /// `(edge relations, 1 / max distinct)` per join edge.
    edge_factors: Vec<(RelSet, f64)>,
}

impl CardinalityEstimator {
    pub fn new(catalog: &Catalog, query: &Query) -> Result<Self> {
        let mut base = HashMap::new();
        for &rel in &query.relations {
            if rel.index() >= catalog.relation_count() {
                return Err(NeoError::Catalog(format!("unknown relation {rel}")));
            }
            let rows = catalog.table(rel).row_count as f64;
            let mut sel = 1.0;
            for p in query.predicates_on(rel) {
                sel *= histogram_selectivity(catalog, p)?;
            }
            base.insert(rel, rows * sel);
        }
        let mut edge_factors = Vec::new();
        for e in &query.join_edges {
            let dl = catalog.histogram(e.left)?.distinct_values().max(1);
            let dr = catalog.histogram(e.right)?.distinct_values().max(1);
            edge_factors.push((e.rels(), 1.0 / dl.max(dr) as f64));
        }
        Ok(CardinalityEstimator { base, edge_factors })
    }

    /// Product of base estimates and the selectivity of every join edge
    /// inside `set`, floored at one row.
    pub fn of_set(&self, set: RelSet) -> f64 {
        let mut est: f64 = set.iter().map(|r| self.base.get(&r).copied().unwrap_or(0.0)).product();
        for (rels, f) in &self.edge_factors {
            if rels.is_subset_of(set) {
                est *= f;
            }
        }
        est.max(1.0)
    }
}

/// Estimated output rows of a fully specified subtree.
pub fn estimated_cardinality(catalog: &Catalog, node: &PlanNode, query: &Query) -> Result<f64> {
    if node.unspecified_scans() > 0 {
        return Err(NeoError::contract("estimate of a subtree with unspecified scans"));
    }
    if !node.rels().is_subset_of(query.rel_set()) {
        return Err(NeoError::contract("subtree scans relations outside the query"));
    }
    Ok(CardinalityEstimator::new(catalog, query)?.of_set(node.rels()))
}

/// The simulator's cost formulas fed with estimated instead of true cardinalities.
pub fn estimate_cost(catalog: &Catalog, plan: &PlanForest, query: &Query, model: &LatencyModel) -> Result<EstimatedCost> {
    if !plan.is_complete(query)? {
        return Err(NeoError::contract("estimated cost of an incomplete plan"));
    }
    let est = CardinalityEstimator::new(catalog, query)?;
    let root = plan.root().unwrap();
    let value = tree_cost(model, catalog, query, root, &mut |s| est.of_set(s))?;
    let est_cardinalities = root.preorder().iter().map(|n| est.of_set(n.rels())).collect();
    Ok(EstimatedCost {
        value,
        est_cardinalities,
    })
}

#[derive(Clone)]
struct Entry {
    cost: f64,
    plan: Arc<PlanNode>,
    key: String,
}

impl Entry {
    fn better_than(&self, other: &Entry) -> bool {
        self.cost < other.cost || (self.cost == other.cost && self.key < other.key)
    }
}

/// Minimum estimated-cost complete plan (connected subsets only).
pub fn optimize(query: &Query, catalog: &Catalog, model: &LatencyModel) -> Result<PlanForest> {
    optimize_in(query, catalog, model, &PlanSpace::new(catalog.indexable()))
}

/// Dynamic programming over relation subsets, keeping the cheapest plan per
/// output ordering so merge-join sort savings are costed exactly. Bushy
/// splits, both orientations, all join operators and scan kinds are considered.
pub fn optimize_in(query: &Query, catalog: &Catalog, model: &LatencyModel, space: &PlanSpace) -> Result<PlanForest> {
    let est = CardinalityEstimator::new(catalog, query)?;
    optimize_with(query, catalog, model, space, &mut |s| est.of_set(s))
}

/// The same dynamic program over an arbitrary subset-cardinality function.
/// With true cardinalities it yields the minimum simulated latency.
pub fn optimize_with(
    query: &Query,
    catalog: &Catalog,
    model: &LatencyModel,
    space: &PlanSpace,
    cardinality: &mut dyn FnMut(RelSet) -> f64,
) -> Result<PlanForest> {
    query.validate()?;
    let rels: Vec<RelId> = query.relations.clone();
    let n = rels.len();
    let to_set = |mask: u32| -> RelSet {
        (0..n).filter(|i| mask & (1 << i) != 0).map(|i| rels[i]).collect()
    };

    let mut dp: Vec<BTreeMap<Ordering, Entry>> = vec![BTreeMap::new(); 1 << n];
    for (i, &rel) in rels.iter().enumerate() {
        let rows = catalog.table(rel).row_count as f64;
        let selected = cardinality(RelSet::single(rel));
        for &kind in space.scan_choices(rel) {
            let plan = PlanNode::scan(kind, rel);
            let entry = Entry {
                cost: model.scan_cost(kind, rows, selected),
                key: plan.key(),
                plan,
            };
            insert(&mut dp[1 << i], scan_ordering(catalog, kind, rel), entry);
        }
    }

    let full: u32 = (1u32 << n) - 1;
    let mut masks: Vec<u32> = (1..=full).filter(|m| m.count_ones() >= 2).collect();
    masks.sort_by_key(|m| m.count_ones());
    for mask in masks {
        let set = to_set(mask);
        if !space.allow_cross_products && !query.is_connected_set(set) {
            continue;
        }
        let out_rows = cardinality(set);
        let mut best: BTreeMap<Ordering, Entry> = BTreeMap::new();
        let mut sub = (mask - 1) & mask;
        while sub > 0 {
            let other = mask & !sub;
            let (ls, rs) = (to_set(sub), to_set(other));
            if !dp[sub as usize].is_empty()
                && !dp[other as usize].is_empty()
                && (space.allow_cross_products || query.connected(ls, rs))
            {
                let key = join_key(query, ls, rs);
                let (lrows, rrows) = (cardinality(ls), cardinality(rs));
                for (lord, l) in &dp[sub as usize] {
                    for (rord, r) in &dp[other as usize] {
                        let li = Input {
                            rows: lrows,
                            sorted: key.is_some_and(|(k, _)| lord.covers(k)),
                        };
                        let ri = Input {
                            rows: rrows,
                            sorted: key.is_some_and(|(_, k)| rord.covers(k)),
                        };
                        for op in JoinOp::ALL {
                            let cost = l.cost + r.cost + model.join_cost(op, li, ri, out_rows);
                            let plan = PlanNode::join(op, Arc::clone(&l.plan), Arc::clone(&r.plan));
                            let entry = Entry {
                                cost,
                                key: plan.key(),
                                plan,
                            };
                            insert(&mut best, join_ordering(op, key), entry);
                        }
                    }
                }
            }
            sub = (sub - 1) & mask;
        }
        dp[mask as usize] = best;
    }

    let winner = dp[full as usize]
        .values()
        .fold(None::<&Entry>, |acc, e| match acc {
            Some(b) if !e.better_than(b) => Some(b),
            _ => Some(e),
        })
        .ok_or_else(|| NeoError::contract(format!("no plan found for query {}", query.id)))?;
    Ok(PlanForest::from_root(query.id.clone(), Arc::clone(&winner.plan)))
}

fn insert(slot: &mut BTreeMap<Ordering, Entry>, ordering: Ordering, entry: Entry) {
    match slot.get(&ordering) {
        Some(existing) if !entry.better_than(existing) => {}
        _ => {
            slot.insert(ordering, entry);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{ColumnPredicate, ScanKind};
    use crate::plan::CompareOp;
    use crate::simdb::{
        generate_catalog, generate_workload, simulate_latency, true_cardinality, AttributeSpec, CatalogConfig, TableSpec,
        WorkloadConfig,
    };
    use rand::SeedableRng;

    fn uniform_catalog() -> Catalog {
        let t = |name: &str, rows| TableSpec {
            name: name.into(),
            rows,
            foreign_keys: vec![],
            attributes: vec![
                AttributeSpec {
                    name: "p".into(),
                    domain: 10,
                    skew: 0.0,
                },
                AttributeSpec {
                    name: "q".into(),
                    domain: 10,
                    skew: 0.0,
                },
            ],
            index: Some("id".into()),
        };
        let config = CatalogConfig {
            tables: vec![t("a", 1000)],
            correlations: vec![],
            histogram_buckets: 32,
        };
        generate_catalog(&config, 1).unwrap()
    }

    #[test]
    fn scan_estimates_follow_the_product_rule() {
        let cat = uniform_catalog();
        let scan = PlanNode::scan(ScanKind::Table, RelId(0));
        let bare = Query::new("a", vec![RelId(0)], vec![], vec![]).unwrap();
        assert_eq!(estimated_cardinality(&cat, &scan, &bare).unwrap(), 1000.0);
        let preds = vec![
            ColumnPredicate::new(RelId(0), 1, CompareOp::Eq, vec![3]).unwrap(),
            ColumnPredicate::new(RelId(0), 2, CompareOp::Eq, vec![4]).unwrap(),
        ];
        let q = Query::new("a", vec![RelId(0)], vec![], preds).unwrap();
        assert!((estimated_cardinality(&cat, &scan, &q).unwrap() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn single_scan_estimate_equals_simulation_without_predicates() {
        let cat = uniform_catalog();
        let q = Query::new("a", vec![RelId(0)], vec![], vec![]).unwrap();
        let model = LatencyModel::default();
        for kind in [ScanKind::Table, ScanKind::Index] {
            let p = PlanForest::from_root(q.id.clone(), PlanNode::scan(kind, RelId(0)));
            assert_eq!(
                estimate_cost(&cat, &p, &q, &model).unwrap().value,
                simulate_latency(&cat, &p, &q, &model).unwrap()
            );
        }
        assert!(estimate_cost(&cat, &PlanForest::initial(&q), &q, &model).is_err());
    }

    #[test]
    fn single_relation_without_index_is_a_table_scan() {
        let mut cat = uniform_catalog();
        cat.tables[0].index_column = None;
        let q = Query::new("a", vec![RelId(0)], vec![], vec![]).unwrap();
        let plan = optimize(&q, &cat, &LatencyModel::default()).unwrap();
        assert_eq!(plan.canonical_key(), "T0");
    }

    fn rollout(space: &PlanSpace, query: &Query, rng: &mut impl rand::Rng) -> PlanForest {
        let mut plan = PlanForest::initial(query);
        while !plan.is_finished() {
            let mut kids = space.children(&plan, query);
            plan = kids.swap_remove(rng.random_range(0..kids.len()));
        }
        plan
    }

    fn all_complete_plans(space: &PlanSpace, query: &Query) -> Vec<PlanForest> {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![PlanForest::initial(query)];
        let mut out = Vec::new();
        while let Some(p) = stack.pop() {
            if !seen.insert(p.canonical_key()) {
                continue;
            }
            if p.is_finished() {
                out.push(p);
            } else {
                stack.extend(space.children(&p, query));
            }
        }
        out
    }

    fn small_workload(seed: u64) -> (Catalog, Vec<Query>) {
        let cat = generate_catalog(&CatalogConfig::correlated_snowflake(), 7).unwrap();
        let wl = WorkloadConfig {
            queries: 12,
            min_joins: 1,
            max_joins: 3,
            ..WorkloadConfig::default()
        };
        let qs = generate_workload(&cat, &wl, seed).unwrap();
        (cat, qs)
    }

    #[test]
    fn matches_exhaustive_minimum_on_small_queries() {
        let (cat, qs) = small_workload(3);
        let model = LatencyModel::default();
        let space = PlanSpace::new(cat.indexable());
        for q in &qs {
            let best = all_complete_plans(&space, q)
                .iter()
                .map(|p| estimate_cost(&cat, p, q, &model).unwrap().value)
                .fold(f64::INFINITY, f64::min);
            let dp = optimize(q, &cat, &model).unwrap();
            assert_eq!(estimate_cost(&cat, &dp, q, &model).unwrap().value, best, "{}", q.id);
            assert_eq!(optimize(q, &cat, &model).unwrap(), dp);
        }
    }

    #[test]
    fn no_rollout_beats_the_dp() {
        let cat = generate_catalog(&CatalogConfig::correlated_snowflake(), 7).unwrap();
        let qs = generate_workload(&cat, &WorkloadConfig::default(), 5).unwrap();
        let model = LatencyModel::default();
        let space = PlanSpace::new(cat.indexable());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for i in 0..1000 {
            let q = &qs[i % qs.len()];
            let dp = estimate_cost(&cat, &optimize(q, &cat, &model).unwrap(), q, &model).unwrap().value;
            let p = rollout(&space, q, &mut rng);
            let c = estimate_cost(&cat, &p, q, &model).unwrap().value;
            assert!(dp <= c * (1.0 + 1e-12), "{}: dp {dp} > rollout {c}", q.id);
        }
    }

    #[test]
    fn independence_underestimates_correlated_pairs() {
        let cat = generate_catalog(&CatalogConfig::correlated_snowflake(), 7).unwrap();
        let corr = &cat.correlations[0];
        let src = cat.column_by_name(&corr.source).unwrap();
        let dst = cat.column_by_name(&corr.target).unwrap();
        assert_eq!(src.rel, dst.rel, "first configured correlation is intra-table");
        let (xs, ys) = (cat.values(src), cat.values(dst));
        let domain = cat.column_def(dst).unwrap().domain;
        let row = (0..xs.len()).find(|&i| ys[i] == xs[i] % domain).unwrap();
        let (a, b) = (xs[row] as i64, ys[row] as i64);
        let preds = vec![
            ColumnPredicate::new(src.rel, src.column, CompareOp::Eq, vec![a]).unwrap(),
            ColumnPredicate::new(dst.rel, dst.column, CompareOp::Eq, vec![b]).unwrap(),
        ];
        let q = Query::new("c", vec![src.rel], vec![], preds).unwrap();
        let scan = PlanNode::scan(ScanKind::Table, src.rel);
        let est = estimated_cardinality(&cat, &scan, &q).unwrap();
        let truth = true_cardinality(&cat, &scan, &q).unwrap();
        assert!(est / truth < 1.0, "est {est} truth {truth}");
    }

    #[test]
    fn estimates_track_truth_on_uniform_chain() {
        let attr = |name: &str| AttributeSpec {
            name: name.into(),
            domain: 10,
            skew: 0.0,
        };
        let table = |name: &str, rows, fks: &[&str]| TableSpec {
            name: name.into(),
            rows,
            foreign_keys: fks
                .iter()
                .map(|r| crate::simdb::ForeignKeySpec {
                    references: (*r).into(),
                    skew: 0.0,
                })
                .collect(),
            attributes: vec![attr("p")],
            index: Some("id".into()),
        };
        let config = CatalogConfig {
            tables: vec![table("a", 50, &[]), table("b", 400, &["a"]), table("c", 3000, &["b"])],
            correlations: vec![],
            histogram_buckets: 32,
        };
        let cat = generate_catalog(&config, 4).unwrap();
        let model = LatencyModel::default();
        let space = PlanSpace::new(cat.indexable());
        let edges = cat
            .fk_graph()
            .into_iter()
            .map(|(l, r)| crate::plan::JoinEdge::new(l, r))
            .collect();
        let rels = vec![RelId(0), RelId(1), RelId(2)];
        let q = Query::new("u", rels, edges, vec![]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let p = rollout(&space, &q, &mut rng);
            let est = estimate_cost(&cat, &p, &q, &model).unwrap().value;
            let sim = simulate_latency(&cat, &p, &q, &model).unwrap();
            assert!((est - sim).abs() <= 0.1 * sim, "{}: est {est} sim {sim}", p.canonical_key());
        }
    }
}
