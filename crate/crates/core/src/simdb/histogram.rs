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

use serde::{Deserialize, Serialize};

use super::catalog::Catalog;
use crate::error::{NeoError, Result};
use crate::plan::{ColumnPredicate, CompareOp};

/// Equi-width histogram over the integer domain `0..domain`.
///
/// Bucket `k` covers `edges[k]..edges[k + 1]` and records its row count and
/// the number of distinct values seen in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<i64>,
    pub counts: Vec<u64>,
    pub distinct: Vec<u64>,
    pub rows: u64,
}

impl Histogram {
    pub fn build(values: &[u32], domain: u32, buckets: usize) -> Histogram {
        let b = buckets.min(domain.max(1) as usize).max(1);
        let edges: Vec<i64> = (0..=b)
            .map(|k| (k as u128 * domain as u128 / b as u128) as i64)
            .collect();
        let mut counts = vec![0u64; b];
        let mut seen = vec![false; domain as usize];
        for &v in values {
            counts[bucket_of(&edges, v as i64).expect("value inside domain")] += 1;
            seen[v as usize] = true;
        }
        let distinct = (0..b)
            .map(|k| {
                (edges[k]..edges[k + 1])
                    .filter(|&v| seen[v as usize])
                    .count() as u64
            })
            .collect();
        Histogram {
            edges,
            counts,
            distinct,
            rows: values.len() as u64,
        }
    }

    pub fn buckets(&self) -> usize {
        self.counts.len()
    }

    /// Estimated number of distinct values in the column.
    pub fn distinct_values(&self) -> u64 {
        self.distinct.iter().sum()
    }

    /// Fraction of rows equal to `v`, assuming uniformity within a bucket.
    pub fn eq_fraction(&self, v: i64) -> f64 {
        match bucket_of(&self.edges, v) {
            Some(k) if self.distinct[k] > 0 && self.rows > 0 => {
                self.counts[k] as f64 / self.rows as f64 / self.distinct[k] as f64
            }
            _ => 0.0,
        }
    }

    /// Fraction of rows strictly below `v`, interpolating inside the boundary bucket.
    pub fn below_fraction(&self, v: i64) -> f64 {
        if self.rows == 0 || v <= self.edges[0] {
            return 0.0;
        }
        let last = *self.edges.last().unwrap();
        if v >= last {
            return 1.0;
        }
        let k = bucket_of(&self.edges, v).unwrap();
        let full: u64 = self.counts[..k].iter().sum();
        let (lo, hi) = (self.edges[k], self.edges[k + 1]);
        let partial = self.counts[k] as f64 * (v - lo) as f64 / (hi - lo) as f64;
        ((full as f64 + partial) / self.rows as f64).clamp(0.0, 1.0)
    }

    /// Fraction of rows in `lo..hi`.
    pub fn range_fraction(&self, lo: i64, hi: i64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        (self.below_fraction(hi) - self.below_fraction(lo)).max(0.0)
    }
}

fn bucket_of(edges: &[i64], v: i64) -> Option<usize> {
    let last = *edges.last()?;
    if v < edges[0] || v >= last {
        return None;
    }
    // edges are strictly increasing
    Some(edges.partition_point(|&e| e <= v) - 1)
}

/// Integer intervals `[lo, hi)` whose decimal renderings start with `prefix`'s digits.
pub(crate) fn prefix_intervals(prefix: i64, domain: i64) -> Vec<(i64, i64)> {
    if prefix < 0 {
        return vec![];
    }
    if prefix == 0 {
        return vec![(0, 1)];
    }
    let mut out = Vec::new();
    let mut scale: i64 = 1;
    while let Some(lo) = prefix.checked_mul(scale) {
        if lo >= domain {
            break;
        }
        out.push((lo, (prefix + 1).saturating_mul(scale).min(domain)));
        scale = match scale.checked_mul(10) {
            Some(s) => s,
            None => break,
        };
    }
    out
}

/// Selectivity of a single predicate from the column histogram alone.
pub fn histogram_selectivity(catalog: &Catalog, predicate: &ColumnPredicate) -> Result<f64> {
    let col = predicate.column_ref();
    let hist = catalog.histogram(col)?;
    if predicate.values.is_empty() {
        return Err(NeoError::contract("predicate without values"));
    }
    let v = predicate.values[0];
    let sel = match predicate.op {
        CompareOp::Eq => hist.eq_fraction(v),
        CompareOp::Neq => 1.0 - hist.eq_fraction(v),
        CompareOp::Lt => hist.below_fraction(v),
        CompareOp::Gt => 1.0 - hist.below_fraction(v.saturating_add(1)),
        CompareOp::InList => {
            let mut vals = predicate.values.clone();
            vals.sort_unstable();
            vals.dedup();
            vals.iter().map(|&x| hist.eq_fraction(x)).sum::<f64>().min(1.0)
        }
        CompareOp::LikePrefix => {
            let domain = *hist.edges.last().unwrap();
            prefix_intervals(v, domain)
                .into_iter()
                .map(|(lo, hi)| hist.range_fraction(lo, hi))
                .sum::<f64>()
                .min(1.0)
        }
    };
    Ok(sel.clamp(0.0, 1.0))
}
