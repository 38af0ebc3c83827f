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

//! Closed-form operator cost model standing in for plan execution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cardinality::TrueCardinalities;
use super::catalog::Catalog;
use crate::error::{NeoError, Result};
use crate::plan::{ColumnRef, JoinOp, NodeKind, PlanForest, PlanNode, Query, RelId, RelSet, ScanKind};

/// Operator cost coefficients plus optional multiplicative lognormal noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatencyModel {
    /// Table scan, per stored row.
    pub c_ts: f64,
    /// Index scan, fixed probe cost.
    pub c_io: f64,
    /// Index scan, per selected row.
    pub c_is: f64,
    /// Loop join, per pair of input rows.
    pub c_l: f64,
    /// Hash join build, per left row.
    pub c_hb: f64,
    /// Hash join probe, per right row.
    pub c_hp: f64,
    /// Hash and merge join, per output row.
    pub c_ho: f64,
    /// Merge join, per input row.
    pub c_m: f64,
    /// Sort of an unordered merge input, times `x log2(x + 1)`.
    pub c_s: f64,
    pub sigma: f64,
    pub noise_seed: u64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel {
            c_ts: 1.0,
            c_io: 50.0,
            c_is: 2.0,
            c_l: 0.01,
            c_hb: 1.5,
            c_hp: 1.0,
            c_ho: 0.5,
            c_m: 1.0,
            c_s: 0.2,
            sigma: 0.0,
            noise_seed: 0,
        }
    }
}

impl LatencyModel {
    pub fn validate(&self) -> Result<()> {
        let coeffs = [
            self.c_ts, self.c_io, self.c_is, self.c_l, self.c_hb, self.c_hp, self.c_ho, self.c_m, self.c_s,
        ];
        if coeffs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(NeoError::config("latency coefficients must be positive"));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(NeoError::config("latency sigma must be non-negative"));
        }
        Ok(())
    }

    pub fn scan_cost(&self, kind: ScanKind, table_rows: f64, selected_rows: f64) -> f64 {
        match kind {
            ScanKind::Table => self.c_ts * table_rows,
            ScanKind::Index => self.c_io + self.c_is * selected_rows,
            ScanKind::Unspecified => unreachable!("unspecified scans have no cost"),
        }
    }

    pub fn join_cost(&self, op: JoinOp, left: Input, right: Input, out: f64) -> f64 {
        match op {
            JoinOp::Loop => self.c_l * left.rows * right.rows,
            JoinOp::Hash => self.c_hb * left.rows + self.c_hp * right.rows + self.c_ho * out,
            JoinOp::Merge => {
                let sort = |i: Input| {
                    if i.sorted {
                        0.0
                    } else {
                        self.c_s * i.rows * (i.rows + 1.0).log2()
                    }
                };
                self.c_m * (left.rows + right.rows) + self.c_ho * out + sort(left) + sort(right)
            }
        }
    }
}

/// A join input as the cost formulas see it.
#[derive(Debug, Clone, Copy)]
pub struct Input {
    pub rows: f64,
    /// Already ordered on the join key.
    pub sorted: bool,
}

/// Columns an operator's output is ordered on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ordering {
    Unordered,
    /// Index scan output, ordered on the indexed column.
    Column(ColumnRef),
    /// Merge join output, ordered on both (equal) key columns.
    Key(ColumnRef, ColumnRef),
}

impl Ordering {
    pub fn covers(self, col: ColumnRef) -> bool {
        match self {
            Ordering::Unordered => false,
            Ordering::Column(c) => c == col,
            Ordering::Key(a, b) => a == col || b == col,
        }
    }
}

pub fn scan_ordering(catalog: &Catalog, kind: ScanKind, rel: RelId) -> Ordering {
    match (kind, catalog.table(rel).index_column) {
        (ScanKind::Index, Some(c)) => Ordering::Column(ColumnRef::new(rel, c)),
        _ => Ordering::Unordered,
    }
}

/// Merge key between two sides: the first join edge linking them, as
/// `(left column, right column)`.
pub fn join_key(query: &Query, left: RelSet, right: RelSet) -> Option<(ColumnRef, ColumnRef)> {
    let e = query.first_edge_between(left, right)?;
    Some((e.column_in(left)?, e.column_in(right)?))
}

pub fn join_ordering(op: JoinOp, key: Option<(ColumnRef, ColumnRef)>) -> Ordering {
    match (op, key) {
        (JoinOp::Merge, Some((a, b))) => Ordering::Key(a, b),
        _ => Ordering::Unordered,
    }
}

/// Total cost of a fully specified tree, with cardinalities supplied by `card`.
pub fn tree_cost(
    model: &LatencyModel,
    catalog: &Catalog,
    query: &Query,
    root: &PlanNode,
    card: &mut dyn FnMut(RelSet) -> f64,
) -> Result<f64> {
    Ok(node_cost(model, catalog, query, root, card)?.0)
}

fn node_cost(
    model: &LatencyModel,
    catalog: &Catalog,
    query: &Query,
    node: &PlanNode,
    card: &mut dyn FnMut(RelSet) -> f64,
) -> Result<(f64, f64, Ordering)> {
    match node.kind() {
        NodeKind::Scan { kind, rel } => {
            if *kind == ScanKind::Unspecified {
                return Err(NeoError::contract("cost of an unspecified scan"));
            }
            if *kind == ScanKind::Index && !catalog.is_indexable(*rel) {
                return Err(NeoError::contract(format!("index scan on unindexed relation {rel}")));
            }
            let rows = card(node.rels());
            let table_rows = catalog.table(*rel).row_count as f64;
            Ok((model.scan_cost(*kind, table_rows, rows), rows, scan_ordering(catalog, *kind, *rel)))
        }
        NodeKind::Join { op, left, right } => {
            let (lc, lrows, lord) = node_cost(model, catalog, query, left, card)?;
            let (rc, rrows, rord) = node_cost(model, catalog, query, right, card)?;
            let out = card(node.rels());
            let key = join_key(query, left.rels(), right.rels());
            let l = Input {
                rows: lrows,
                sorted: key.is_some_and(|(k, _)| lord.covers(k)),
            };
            let r = Input {
                rows: rrows,
                sorted: key.is_some_and(|(_, k)| rord.covers(k)),
            };
            Ok((lc + rc + model.join_cost(*op, l, r, out), out, join_ordering(*op, key)))
        }
    }
}

fn complete_root<'a>(plan: &'a PlanForest, query: &Query) -> Result<&'a PlanNode> {
    if !plan.is_complete(query)? {
        return Err(NeoError::contract("latency of an incomplete plan"));
    }
    Ok(plan.root().unwrap())
}

/// Simulated latency using memoized true cardinalities for the plan's query.
pub fn simulate_latency_cached(
    catalog: &Catalog,
    plan: &PlanForest,
    cards: &mut TrueCardinalities,
    model: &LatencyModel,
) -> Result<f64> {
    let query = cards.query().clone();
    let root = complete_root(plan, &query)?;
    let base = tree_cost(model, catalog, &query, root, &mut |s| cards.of_set(catalog, s))?;
    Ok(base * noise_factor(model, plan))
}

/// Latency of a complete plan: sum of operator costs over true cardinalities,
/// times lognormal noise seeded by the plan's identity when `sigma > 0`.
pub fn simulate_latency(catalog: &Catalog, plan: &PlanForest, query: &Query, model: &LatencyModel) -> Result<f64> {
    complete_root(plan, query)?;
    let mut cards = TrueCardinalities::new(catalog, query)?;
    simulate_latency_cached(catalog, plan, &mut cards, model)
}

fn noise_factor(model: &LatencyModel, plan: &PlanForest) -> f64 {
    if model.sigma == 0.0 {
        return 1.0;
    }
    let digest = Sha256::digest(format!("{}|{}", plan.query_id(), plan.canonical_key()).as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    let mut rng = ChaCha8Rng::seed_from_u64(model.noise_seed ^ u64::from_le_bytes(bytes));
    LogNormal::new(0.0, model.sigma).expect("valid sigma").sample(&mut rng)
}
