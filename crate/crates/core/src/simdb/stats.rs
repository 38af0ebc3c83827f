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

use std::collections::HashMap;

/// Cramér's V of two paired categorical samples (0 for degenerate tables).
pub fn cramers_v(xs: &[u32], ys: &[u32]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "paired samples required");
    let n = xs.len() as f64;
    if xs.is_empty() {
        return 0.0;
    }
    let mut joint: HashMap<(u32, u32), f64> = HashMap::new();
    let mut row: HashMap<u32, f64> = HashMap::new();
    let mut col: HashMap<u32, f64> = HashMap::new();
    for (&x, &y) in xs.iter().zip(ys) {
        *joint.entry((x, y)).or_default() += 1.0;
        *row.entry(x).or_default() += 1.0;
        *col.entry(y).or_default() += 1.0;
    }
    let k = row.len().min(col.len());
    if k < 2 {
        return 0.0;
    }
    // chi2 = n * (sum_ij n_ij^2 / (n_i n_j) - 1)
    let sum: f64 = joint
        .iter()
        .map(|(&(x, y), &nij)| nij * nij / (row[&x] * col[&y]))
        .sum();
    let chi2 = n * (sum - 1.0);
    (chi2 / (n * (k - 1) as f64)).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_dependence_is_one() {
        let xs: Vec<u32> = (0..100).map(|i| i % 5).collect();
        let ys: Vec<u32> = xs.iter().map(|x| (x + 2) % 5).collect();
        assert!((cramers_v(&xs, &ys) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn balanced_independence_is_zero() {
        let xs: Vec<u32> = (0..100).map(|i| i % 5).collect();
        let ys: Vec<u32> = (0..100).map(|i| (i / 5) % 4).collect();
        assert!(cramers_v(&xs, &ys) < 1e-6);
    }
}
