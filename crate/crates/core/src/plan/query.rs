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
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::relset::{RelId, RelSet, MAX_RELATIONS};
use crate::error::{NeoError, Result};

/// A column of a specific relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColumnRef {
    pub rel: RelId,
    pub column: u16,
}

impl ColumnRef {
    pub fn new(rel: RelId, column: u16) -> Self {
        ColumnRef { rel, column }
    }
}

/// Equi-join predicate between two relations. Normalized so `left.rel < right.rel`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JoinEdge {
    pub left: ColumnRef,
    pub right: ColumnRef,
}

impl JoinEdge {
    pub fn new(a: ColumnRef, b: ColumnRef) -> Self {
        if a.rel <= b.rel {
            JoinEdge { left: a, right: b }
        } else {
            JoinEdge { left: b, right: a }
        }
    }

    pub fn rels(&self) -> RelSet {
        RelSet::single(self.left.rel).union(RelSet::single(self.right.rel))
    }

    /// True when the edge has one endpoint in each of the two sets.
    pub fn connects(&self, a: RelSet, b: RelSet) -> bool {
        (a.contains(self.left.rel) && b.contains(self.right.rel))
            || (b.contains(self.left.rel) && a.contains(self.right.rel))
    }

    /// The endpoint column lying in `side`, if any.
    pub fn column_in(&self, side: RelSet) -> Option<ColumnRef> {
        if side.contains(self.left.rel) {
            Some(self.left)
        } else if side.contains(self.right.rel) {
            Some(self.right)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareOp {
    Eq,
    Neq,
    Lt,
    Gt,
    InList,
    LikePrefix,
}

impl CompareOp {
    pub const ALL: [CompareOp; 6] = [
        CompareOp::Eq,
        CompareOp::Neq,
        CompareOp::Lt,
        CompareOp::Gt,
        CompareOp::InList,
        CompareOp::LikePrefix,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnPredicate {
    pub relation: RelId,
    pub column: u16,
    pub op: CompareOp,
    pub values: Vec<i64>,
}

impl ColumnPredicate {
    pub fn new(relation: RelId, column: u16, op: CompareOp, values: Vec<i64>) -> Result<Self> {
        let p = ColumnPredicate {
            relation,
            column,
            op,
            values,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn column_ref(&self) -> ColumnRef {
        ColumnRef::new(self.relation, self.column)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.op {
            CompareOp::InList => !self.values.is_empty(),
            _ => self.values.len() == 1,
        };
        if ok {
            Ok(())
        } else {
            Err(NeoError::contract(format!(
                "predicate {:?} on {}.{} has {} values",
                self.op,
                self.relation,
                self.column,
                self.values.len()
            )))
        }
    }

    /// Evaluates the predicate against one stored value.
    pub fn matches(&self, value: i64) -> bool {
        let first = self.values[0];
        match self.op {
            CompareOp::Eq => value == first,
            CompareOp::Neq => value != first,
            CompareOp::Lt => value < first,
            CompareOp::Gt => value > first,
            CompareOp::InList => self.values.contains(&value),
            CompareOp::LikePrefix => {
                value >= 0 && first >= 0 && value.to_string().starts_with(&first.to_string())
            }
        }
    }
}

/// Identifier of a query within a workload.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QueryId(pub Arc<str>);

impl QueryId {
    pub fn new(id: impl AsRef<str>) -> Self {
        QueryId(Arc::from(id.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for QueryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A select-project-join query: relations, join graph and column predicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub id: QueryId,
    pub relations: Vec<RelId>,
    pub join_edges: Vec<JoinEdge>,
    #[serde(default)]
    pub predicates: Vec<ColumnPredicate>,
}

impl Query {
    /// Builds a query in canonical form (sorted relations and edges) and validates it.
    pub fn new(
        id: impl AsRef<str>,
        mut relations: Vec<RelId>,
        join_edges: Vec<JoinEdge>,
        predicates: Vec<ColumnPredicate>,
    ) -> Result<Self> {
        relations.sort();
        relations.dedup();
        let mut join_edges: Vec<JoinEdge> = join_edges
            .into_iter()
            .map(|e| JoinEdge::new(e.left, e.right))
            .collect();
        join_edges.sort();
        join_edges.dedup();
        let q = Query {
            id: QueryId::new(id),
            relations,
            join_edges,
            predicates,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn rel_set(&self) -> RelSet {
        self.relations.iter().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    /// True when at least one join edge links the two relation sets.
    pub fn connected(&self, a: RelSet, b: RelSet) -> bool {
        self.join_edges.iter().any(|e| e.connects(a, b))
    }

    /// First edge (in canonical order) linking the two sets.
    pub fn first_edge_between(&self, a: RelSet, b: RelSet) -> Option<&JoinEdge> {
        self.join_edges.iter().find(|e| e.connects(a, b))
    }

    pub fn edges_between(&self, a: RelSet, b: RelSet) -> impl Iterator<Item = &JoinEdge> {
        self.join_edges.iter().filter(move |e| e.connects(a, b))
    }

    pub fn predicates_on(&self, rel: RelId) -> impl Iterator<Item = &ColumnPredicate> {
        self.predicates.iter().filter(move |p| p.relation == rel)
    }

    /// True when `set` induces a connected subgraph of the join graph.
    pub fn is_connected_set(&self, set: RelSet) -> bool {
        let Some(start) = set.min() else {
            return false;
        };
        let mut reached = RelSet::single(start);
        loop {
            let mut grown = reached;
            for e in &self.join_edges {
                if e.rels().is_subset_of(set) && e.rels().intersects(reached) {
                    grown = grown.union(e.rels());
                }
            }
            if grown == reached {
                return reached == set;
            }
            reached = grown;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.relations.is_empty() {
            return Err(NeoError::contract(format!("query {} has no relations", self.id)));
        }
        if self.relations.windows(2).any(|w| w[0] >= w[1]) {
            return Err(NeoError::contract(format!(
                "query {} relations are not sorted and unique",
                self.id
            )));
        }
        if self.relations.iter().any(|r| r.index() >= MAX_RELATIONS) {
            return Err(NeoError::contract(format!(
                "query {} references a relation beyond {MAX_RELATIONS}",
                self.id
            )));
        }
        let rels = self.rel_set();
        for e in &self.join_edges {
            if !e.rels().is_subset_of(rels) || e.left.rel == e.right.rel {
                return Err(NeoError::contract(format!(
                    "query {} has join edge outside its relations",
                    self.id
                )));
            }
        }
        for p in &self.predicates {
            if !rels.contains(p.relation) {
                return Err(NeoError::contract(format!(
                    "query {} has predicate on relation {} it does not use",
                    self.id, p.relation
                )));
            }
            p.validate()?;
        }
        if !self.is_connected_set(rels) {
            return Err(NeoError::contract(format!(
                "query {} join graph is not connected",
                self.id
            )));
        }
        Ok(())
    }
}
