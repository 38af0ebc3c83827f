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

use std::fmt;

use serde::{Deserialize, Serialize};

/// Index of a relation in the global catalog order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelId(pub u16);

impl RelId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for RelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Maximum number of relations a catalog may hold (one bit per relation).
pub const MAX_RELATIONS: usize = 64;

/// Bit set of relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RelSet(pub u64);

impl RelSet {
    pub const EMPTY: RelSet = RelSet(0);

    pub fn single(rel: RelId) -> Self {
        debug_assert!(rel.index() < MAX_RELATIONS);
        RelSet(1u64 << rel.0)
    }

    pub fn contains(self, rel: RelId) -> bool {
        self.0 & (1u64 << rel.0) != 0
    }

    pub fn union(self, other: RelSet) -> RelSet {
        RelSet(self.0 | other.0)
    }

    pub fn intersects(self, other: RelSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_subset_of(self, other: RelSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Lowest relation in the set; `None` when empty.
    pub fn min(self) -> Option<RelId> {
        (self.0 != 0).then(|| RelId(self.0.trailing_zeros() as u16))
    }

    pub fn iter(self) -> impl Iterator<Item = RelId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let r = bits.trailing_zeros();
            bits &= bits - 1;
            Some(RelId(r as u16))
        })
    }
}

impl FromIterator<RelId> for RelSet {
    fn from_iter<I: IntoIterator<Item = RelId>>(iter: I) -> Self {
        iter.into_iter()
            .fold(RelSet::EMPTY, |acc, r| acc.union(RelSet::single(r)))
    }
}
