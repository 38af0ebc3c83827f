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


//! Fixtures, brute-force oracles and property checks shared by the
//! integration suites.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use neo_core::expert::estimate_cost;
use neo_core::plan::NodeKind;
use neo_core::search::Evaluator;
use neo_core::simdb::{
    generate_catalog, generate_workload, histogram_selectivity, simulate_latency, simulate_latency_cached,
    true_cardinality, Catalog, CatalogConfig, ColumnDef, ColumnRole, LatencyModel, TableDef, TrueCardinalities,
    WorkloadConfig,
};
use neo_core::valuemodel::{training_targets, CostMode, ExperienceEntry, Transform};
use neo_core::{
    construction_states, is_subplan, ColumnPredicate, CompareOp, JoinOp, PlanForest, PlanNode, PlanSpace, Query,
    Result,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PROPERTY_CASES: u32 = 1000;

pub fn catalog() -> &'static Catalog {
    static CATALOG: OnceLock<Catalog> = OnceLock::new();
    CATALOG.get_or_init(|| generate_catalog(&CatalogConfig::correlated_snowflake(), 5).unwrap())
}

/// Queries over 2 to 4 relations, each with its own shape.
pub fn small_queries(count: usize, seed: u64) -> Vec<Query> {
    let config = WorkloadConfig {
        queries: count,
        min_joins: 1,
        max_joins: 3,
        min_predicates: 1,
        max_predicates: 3,
        templates: 0,
        id_prefix: "s".into(),
    };
    generate_workload(catalog(), &config, seed).unwrap()
}

/// A fixed pool for property tests: 1 to 5 relations.
pub fn query_pool() -> &'static [Query] {
    static POOL: OnceLock<Vec<Query>> = OnceLock::new();
    POOL.get_or_init(|| {
        let config = WorkloadConfig {
            queries: 120,
            min_joins: 0,
            max_joins: 4,
            min_predicates: 0,
            max_predicates: 3,
            templates: 0,
            id_prefix: "p".into(),
        };
        generate_workload(catalog(), &config, 17).unwrap()
    })
}

pub fn space() -> PlanSpace {
    PlanSpace::new(catalog().indexable())
}

/// Uniformly random child choices from the all-unspecified forest until
/// `steps` actions were taken or the plan is complete. Returns every state.
pub fn random_walk(space: &PlanSpace, query: &Query, seed: u64, steps: usize) -> Vec<PlanForest> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plan = PlanForest::initial(query);
    let mut out = vec![plan.clone()];
    while !plan.is_finished() && out.len() <= steps {
        let mut kids = space.children(&plan, query);
        plan = kids.swap_remove(rng.random_range(0..kids.len()));
        out.push(plan.clone());
    }
    out
}

pub fn random_complete(space: &PlanSpace, query: &Query, seed: u64) -> PlanForest {
    random_walk(space, query, seed, usize::MAX).pop().unwrap()
}

/// Every complete plan reachable from the initial forest, by depth-first
/// expansion with duplicate states removed.
pub fn all_complete_plans(space: &PlanSpace, query: &Query) -> Vec<PlanForest> {
    let mut seen = HashSet::new();
    let mut stack = vec![PlanForest::initial(query)];
    let mut out = Vec::new();
    while let Some(p) = stack.pop() {
        if !seen.insert(p.canonical_key()) {
            continue;
        }
        if p.is_finished() {
            out.push(p);
            continue;
        }
        stack.extend(space.children(&p, query));
    }
    out
}

/// Exact minimum latency over the completions of a plan, by memoized recursion.
pub struct ExactBest<'a> {
    pub catalog: &'a Catalog,
    pub model: LatencyModel,
    pub space: PlanSpace,
    pub query: Query,
    cards: TrueCardinalities,
    memo: HashMap<String, f64>,
}

impl<'a> ExactBest<'a> {
    pub fn new(catalog: &'a Catalog, query: &Query, space: PlanSpace) -> Self {
        ExactBest {
            catalog,
            model: LatencyModel::default(),
            space,
            query: query.clone(),
            cards: TrueCardinalities::new(catalog, query).unwrap(),
            memo: HashMap::new(),
        }
    }

    pub fn best(&mut self, plan: &PlanForest) -> f64 {
        let key = plan.canonical_key();
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let v = if plan.is_finished() {
            simulate_latency_cached(self.catalog, plan, &mut self.cards, &self.model).unwrap()
        } else {
            let kids = self.space.children(plan, &self.query);
            kids.iter().map(|k| self.best(k)).fold(f64::INFINITY, f64::min)
        };
        self.memo.insert(key, v);
        v
    }
}

impl Evaluator for ExactBest<'_> {
    fn score(&mut self, plan: &PlanForest) -> Result<f64> {
        Ok(self.best(plan))
    }
}

pub fn exhaustive_min_latency(catalog: &Catalog, query: &Query, space: &PlanSpace) -> f64 {
    let model = LatencyModel::default();
    let mut cards = TrueCardinalities::new(catalog, query).unwrap();
    all_complete_plans(space, query)
        .iter()
        .map(|p| simulate_latency_cached(catalog, p, &mut cards, &model).unwrap())
        .fold(f64::INFINITY, f64::min)
}

pub fn exhaustive_min_estimate(catalog: &Catalog, query: &Query, space: &PlanSpace) -> f64 {
    let model = LatencyModel::default();
    all_complete_plans(space, query)
        .iter()
        .map(|p| estimate_cost(catalog, p, query, &model).unwrap().value)
        .fold(f64::INFINITY, f64::min)
}

/// Number of distinct complete trees over `n` relations when any two roots may
/// be joined: `scans` choices per leaf, 3 operators, ordered operands.
pub fn complete_tree_count(scans: &[usize]) -> u64 {
    let n = scans.len();
    let full = (1usize << n) - 1;
    let mut count = vec![0u64; full + 1];
    for set in 1..=full {
        if set.count_ones() == 1 {
            count[set] = scans[set.trailing_zeros() as usize] as u64;
            continue;
        }
        let mut left = (set - 1) & set;
        while left > 0 {
            let right = set & !left;
            count[set] += 3 * count[left] * count[right];
            left = (left - 1) & set;
        }
    }
    count[full]
}

/// Tree-convolution output recomputed node by node and channel by channel
/// from the flat `3 × c_in × c_out` filterbank.
pub fn brute_tree_conv(
    weight: &[f64],
    bias: &[f64],
    c_in: usize,
    c_out: usize,
    x: &[f64],
    left: &[Option<usize>],
    right: &[Option<usize>],
) -> Vec<f64> {
    let n = left.len();
    let zero = vec![0.0; c_in];
    let w = |s: usize, i: usize, k: usize| weight[s * c_in * c_out + i * c_out + k];
    let mut out = vec![0.0; n * c_out];
    for p in 0..n {
        let xp = &x[p * c_in..(p + 1) * c_in];
        let xl = left[p].map_or(&zero[..], |l| &x[l * c_in..(l + 1) * c_in]);
        let xr = right[p].map_or(&zero[..], |r| &x[r * c_in..(r + 1) * c_in]);
        for k in 0..c_out {
            let mut z = bias[k];
            for i in 0..c_in {
                z += w(0, i, k) * xp[i] + w(1, i, k) * xl[i] + w(2, i, k) * xr[i];
            }
            out[p * c_out + k] = if z >= 0.0 { z } else { 0.01 * z };
        }
    }
    out
}

/// A random binary forest of `n` nodes in parent-before-child order.
pub fn random_forest(n: usize, rng: &mut impl Rng) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let mut left = vec![None; n];
    let mut right = vec![None; n];
    for child in 1..n {
        // attach to a random earlier node with a free slot, or start a new tree
        if rng.random_bool(0.15) {
            continue;
        }
        let free: Vec<(usize, bool)> = (0..child)
            .flat_map(|p| [(p, true), (p, false)])
            .filter(|&(p, l)| if l { left[p].is_none() } else { right[p].is_none() })
            .collect();
        let (p, l) = free[rng.random_range(0..free.len())];
        if l {
            left[p] = Some(child);
        } else {
            right[p] = Some(child);
        }
    }
    (left, right)
}

/// One table with a key and two attributes: `x = 0` is followed by `y = 0` in
/// `strong` of its rows, every other `x` draws `y` uniformly.
pub fn cooccurrence_catalog(rows: usize, domain: u32, strong: f64, seed: u64) -> Catalog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let col = |name: &str, domain: u32, role| ColumnDef {
        name: name.into(),
        domain,
        role,
    };
    let table = TableDef {
        name: "t".into(),
        columns: vec![
            col("id", rows as u32, ColumnRole::Key),
            col("x", domain, ColumnRole::Attribute),
            col("y", domain, ColumnRole::Attribute),
        ],
        fk_edges: vec![],
        row_count: rows,
        index_column: None,
    };
    let data = (0..rows)
        .map(|r| {
            let x = rng.random_range(0..domain);
            let y = if x == 0 && rng.random_bool(strong) {
                0
            } else {
                rng.random_range(0..domain)
            };
            vec![r as u32, x, y]
        })
        .collect();
    Catalog::from_rows(vec![table], vec![data], 32).unwrap()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

// ---- properties ---------------------------------------------------------

type Check = std::result::Result<(), TestCaseError>;

fn pick(index: usize) -> &'static Query {
    let pool = query_pool();
    &pool[index % pool.len()]
}

/// Every child of a random partial plan contains it and has one decision fewer.
pub fn prop_children_refine(index: usize, seed: u64, depth: usize) -> Check {
    let q = pick(index);
    let space = space();
    let plan = random_walk(&space, q, seed, depth).pop().unwrap();
    let open = plan.open_decisions();
    for c in space.children(&plan, q) {
        prop_assert!(is_subplan(&plan, &c).unwrap());
        prop_assert_eq!(c.open_decisions() + 1, open);
    }
    Ok(())
}

/// Subplan is reflexive, holds along a construction path, and is transitive
/// across states drawn from two independent paths.
pub fn prop_subplan_order(index: usize, a: u64, b: u64) -> Check {
    let q = pick(index);
    let space = space();
    let p = random_walk(&space, q, a, usize::MAX);
    let r = random_walk(&space, q, b, usize::MAX);
    for s in &p {
        prop_assert!(is_subplan(s, s).unwrap());
    }
    for i in 0..p.len() {
        prop_assert!(is_subplan(&p[i], &p[p.len() - 1]).unwrap());
    }
    let states: Vec<&PlanForest> = p.iter().chain(&r).collect();
    let sub: Vec<Vec<bool>> = states
        .iter()
        .map(|x| states.iter().map(|y| is_subplan(x, y).unwrap()).collect())
        .collect();
    for i in 0..states.len() {
        for j in 0..states.len() {
            if !sub[i][j] {
                continue;
            }
            for k in 0..states.len() {
                if sub[j][k] {
                    prop_assert!(sub[i][k], "{} <= {} <= {}", states[i].canonical_key(), states[j].canonical_key(), states[k].canonical_key());
                }
            }
        }
    }
    Ok(())
}

fn join_count(node: &PlanNode) -> usize {
    node.preorder().iter().filter(|n| matches!(n.kind(), NodeKind::Join { .. })).count()
}

/// A complete plan has n-1 joins, 2n construction states each a child of the
/// previous, and survives a canonical-key round trip.
pub fn prop_complete_plan_shape(index: usize, seed: u64) -> Check {
    let q = pick(index);
    let space = space();
    let plan = random_complete(&space, q, seed);
    let n = q.relations.len();
    prop_assert_eq!(join_count(plan.root().unwrap()), n - 1);
    let states = construction_states(&plan).unwrap();
    prop_assert_eq!(states.len(), 2 * n);
    prop_assert_eq!(&states[0], &PlanForest::initial(q));
    prop_assert_eq!(states.last().unwrap(), &plan);
    for w in states.windows(2) {
        prop_assert!(space.children(&w[0], q).contains(&w[1]));
    }
    let back = PlanForest::parse_key(q.id.clone(), &plan.canonical_key()).unwrap();
    prop_assert_eq!(back, plan);
    Ok(())
}

/// With cross products allowed, exhaustive expansion reaches exactly the
/// trees counted by a direct enumerator.
pub fn prop_cross_product_count(index: usize) -> Check {
    let pool = query_pool();
    let small: Vec<&Query> = pool.iter().filter(|q| q.relations.len() <= 3).collect();
    let q = small[index % small.len()];
    let space = space().with_cross_products(true);
    let reached = all_complete_plans(&space, q).len() as u64;
    let scans: Vec<usize> = q.relations.iter().map(|&r| space.scan_choices(r).len()).collect();
    prop_assert_eq!(reached, complete_tree_count(&scans));
    Ok(())
}

/// Latency is positive and a pure function of its inputs.
pub fn prop_latency_positive_and_pure(index: usize, seed: u64) -> Check {
    let q = pick(index);
    let cat = catalog();
    let plan = random_complete(&space(), q, seed);
    let model = LatencyModel::default();
    let a = simulate_latency(cat, &plan, q, &model).unwrap();
    let b = simulate_latency(cat, &plan, q, &model).unwrap();
    prop_assert!(a > 0.0);
    prop_assert_eq!(a.to_bits(), b.to_bits());
    Ok(())
}

/// Swapping the operator or orientation of any join leaves every true
/// cardinality unchanged.
pub fn prop_cardinality_ignores_operator(index: usize, seed: u64, op: usize) -> Check {
    let q = pick(index);
    let cat = catalog();
    let plan = random_complete(&space(), q, seed);
    for node in plan.root().unwrap().preorder() {
        if let NodeKind::Join { left, right, .. } = node.kind() {
            let base = true_cardinality(cat, node, q).unwrap();
            let other = PlanNode::join(JoinOp::ALL[op % 3], right.clone(), left.clone());
            prop_assert_eq!(true_cardinality(cat, &other, q).unwrap(), base);
        }
    }
    Ok(())
}

fn random_predicate(q: &Query, rng: &mut impl Rng) -> ColumnPredicate {
    let cat = catalog();
    let rel = q.relations[rng.random_range(0..q.relations.len())];
    let cols: Vec<u16> = cat.table(rel).attribute_columns().collect();
    let col = cols[rng.random_range(0..cols.len())];
    let domain = cat.table(rel).columns[col as usize].domain as i64;
    let v = rng.random_range(0..domain);
    let (op, values) = match rng.random_range(0..6) {
        0 => (CompareOp::Eq, vec![v]),
        1 => (CompareOp::Neq, vec![v]),
        2 => (CompareOp::Lt, vec![v]),
        3 => (CompareOp::Gt, vec![v]),
        4 => (CompareOp::InList, vec![v, rng.random_range(0..domain)]),
        _ => (CompareOp::LikePrefix, vec![v]),
    };
    ColumnPredicate::new(rel, col, op, values).unwrap()
}

/// An extra predicate never increases the true cardinality of a node that
/// contains its relation.
pub fn prop_predicate_monotone(index: usize, seed: u64) -> Check {
    let q = pick(index);
    let cat = catalog();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_predicate(q, &mut rng);
    let mut narrowed = q.clone();
    narrowed.predicates.push(p.clone());
    let plan = random_complete(&space(), q, seed);
    for node in plan.root().unwrap().preorder() {
        if node.rels().contains(p.relation) {
            let before = true_cardinality(cat, node, q).unwrap();
            let after = true_cardinality(cat, node, &narrowed).unwrap();
            prop_assert!(after <= before, "{} -> {}", before, after);
        }
    }
    Ok(())
}

fn uniform_catalog() -> &'static Catalog {
    static UNIFORM: OnceLock<Catalog> = OnceLock::new();
    UNIFORM.get_or_init(|| cooccurrence_catalog(20_000, 200, 0.0, 9))
}

/// Selectivity estimates stay in [0, 1] everywhere and within one bucket of
/// the exact fraction on uniform data.
pub fn prop_histogram_selectivity(index: usize, seed: u64) -> Check {
    let q = pick(index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_predicate(q, &mut rng);
    let s = histogram_selectivity(catalog(), &p).unwrap();
    prop_assert!((0.0..=1.0).contains(&s));

    let uni = uniform_catalog();
    let mut p = p;
    p.relation = neo_core::RelId(0);
    p.column = 1;
    if p.op != CompareOp::LikePrefix {
        p.values = p.values.iter().map(|v| v % 200).collect();
    }
    let est = histogram_selectivity(uni, &p).unwrap();
    let values = uni.values(p.column_ref());
    let exact = values.iter().filter(|&&v| p.matches(v as i64)).count() as f64 / values.len() as f64;
    prop_assert!((0.0..=1.0).contains(&est));
    prop_assert!((est - exact).abs() <= 1.0 / 32.0, "{:?}: est {} exact {}", p, est, exact);
    Ok(())
}

/// Every training target is the minimum transformed cost over the experienced
/// completions containing its state; complete plans get their own best cost.
pub fn prop_target_min(index: usize, seed: u64, plans: usize, relative: bool) -> Check {
    let q = pick(index);
    let space = space();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mode = if relative { CostMode::Relative } else { CostMode::Absolute };
    let transform = if rng.random_bool(0.5) { Transform::Log1p } else { Transform::Identity };
    let baseline = rng.random_range(1.0..1e4);
    let experience: Vec<ExperienceEntry> = (0..plans)
        .map(|_| ExperienceEntry {
            query_id: q.id.clone(),
            // few distinct seeds so plans repeat
            plan: random_complete(&space, q, rng.random_range(0..4u64) ^ seed),
            latency: rng.random_range(1.0..1e6),
            baseline,
        })
        .collect();
    let states = training_targets(&experience, mode, transform).unwrap();
    let mut keys = HashSet::new();
    for s in &states {
        prop_assert!(keys.insert(s.plan.canonical_key()), "duplicate state");
        let containing: Vec<f64> = experience
            .iter()
            .filter(|e| is_subplan(&s.plan, &e.plan).unwrap())
            .map(|e| transform.apply(e.cost(mode)))
            .collect();
        prop_assert!(!containing.is_empty());
        for &c in &containing {
            prop_assert!(s.target <= c);
        }
        let min = containing.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(s.target, min);
    }
    for e in &experience {
        let own = experience
            .iter()
            .filter(|o| o.plan == e.plan)
            .map(|o| transform.apply(o.cost(mode)))
            .fold(f64::INFINITY, f64::min);
        let s = states.iter().find(|s| s.plan == e.plan).unwrap();
        prop_assert_eq!(s.target, own);
    }
    Ok(())
}

/// The cost transform is strictly increasing, so it never reorders plans.
pub fn prop_transform_preserves_order(a: f64, b: f64) -> Check {
    for t in [Transform::Log1p, Transform::Identity] {
        prop_assert_eq!(a.partial_cmp(&b), t.apply(a).partial_cmp(&t.apply(b)));
        prop_assert!((t.invert(t.apply(a)) - a).abs() <= 1e-9 * a.max(1.0));
    }
    Ok(())
}

/// Runs every property suite through one runner; returns the failures.
pub fn run_property_suites(cases: u32) -> Vec<String> {
    use proptest::test_runner::{Config, TestRunner};
    let mut failures = Vec::new();
    macro_rules! suite {
        ($name:literal, $strategy:expr, $check:expr) => {{
            let mut runner = TestRunner::new(Config {
                cases,
                failure_persistence: None,
                ..Config::default()
            });
            if let Err(e) = runner.run(&$strategy, $check) {
                failures.push(format!("{}: {e}", $name));
            }
        }};
    }
    let idx = 0usize..10_000;
    suite!("children_refine", (idx.clone(), any::<u64>(), 0usize..12), |(i, s, d)| {
        prop_children_refine(i, s, d)
    });
    suite!("subplan_order", (idx.clone(), any::<u64>(), any::<u64>()), |(i, a, b)| {
        prop_subplan_order(i, a, b)
    });
    suite!("complete_plan_shape", (idx.clone(), any::<u64>()), |(i, s)| prop_complete_plan_shape(i, s));
    suite!("cross_product_count", idx.clone(), prop_cross_product_count);
    suite!("latency_positive_and_pure", (idx.clone(), any::<u64>()), |(i, s)| {
        prop_latency_positive_and_pure(i, s)
    });
    suite!("cardinality_ignores_operator", (idx.clone(), any::<u64>(), 0usize..3), |(i, s, o)| {
        prop_cardinality_ignores_operator(i, s, o)
    });
    suite!("predicate_monotone", (idx.clone(), any::<u64>()), |(i, s)| prop_predicate_monotone(i, s));
    suite!("histogram_selectivity", (idx.clone(), any::<u64>()), |(i, s)| prop_histogram_selectivity(i, s));
    suite!("target_min", (idx.clone(), any::<u64>(), 1usize..8, any::<bool>()), |(i, s, n, r)| {
        prop_target_min(i, s, n, r)
    });
    suite!("transform_order", (0.0f64..1e9, 0.0f64..1e9), |(a, b)| prop_transform_preserves_order(a, b));
    failures
}
