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


mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(PROPERTY_CASES))]

    #[test]
    fn children_refine_their_parent(i in 0usize..10_000, seed: u64, depth in 0usize..12) {
        prop_children_refine(i, seed, depth)?;
    }

    #[test]
    fn subplan_is_a_preorder(i in 0usize..10_000, a: u64, b: u64) {
        prop_subplan_order(i, a, b)?;
    }

    #[test]
    fn complete_plans_have_n_minus_one_joins_and_2n_states(i in 0usize..10_000, seed: u64) {
        prop_complete_plan_shape(i, seed)?;
    }

    #[test]
    fn cross_product_space_matches_direct_count(i in 0usize..10_000) {
        prop_cross_product_count(i)?;
    }
}

#[test]
fn direct_count_small_cases() {
    assert_eq!(complete_tree_count(&[2]), 2);
    // two leaves: 3 operators, 2 orientations
    assert_eq!(complete_tree_count(&[1, 1]), 6);
    // three leaves: 3 ways to pick the lone leaf, 2 orientations at each of 2 joins, 9 operator pairs
    assert_eq!(complete_tree_count(&[1, 1, 1]), 3 * 4 * 9);
}
