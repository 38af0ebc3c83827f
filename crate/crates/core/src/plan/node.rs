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

use std::fmt::{self, Write as _};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::query::{Query, QueryId};
use super::relset::{RelId, RelSet};
use crate::error::{NeoError, Result};

/// Physical join operators. Declaration order is the one-hot order used by the
/// plan encoder (merge first, then hash, then loop).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JoinOp {
    Merge,
    Hash,
    Loop,
}

impl JoinOp {
    /// Enumeration order for children: hash, merge, loop.
    pub const ALL: [JoinOp; 3] = [JoinOp::Hash, JoinOp::Merge, JoinOp::Loop];

    fn tag(self) -> char {
        match self {
            JoinOp::Hash => 'H',
            JoinOp::Merge => 'M',
            JoinOp::Loop => 'L',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScanKind {
    #[serde(rename = "table")]
    Table,
    #[serde(rename = "index")]
    Index,
    #[serde(rename = "unspec")]
    Unspecified,
}

impl ScanKind {
    fn tag(self) -> char {
        match self {
            ScanKind::Table => 'T',
            ScanKind::Index => 'I',
            ScanKind::Unspecified => 'U',
        }
    }
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Scan {
        kind: ScanKind,
        rel: RelId,
    },
    Join {
        op: JoinOp,
        left: Arc<PlanNode>,
        right: Arc<PlanNode>,
    },
}

/// One node of a (partial) plan tree. Immutable; subtrees are shared through `Arc`.
#[derive(Debug, PartialEq, Eq, Hash)]
pub struct PlanNode {
    kind: NodeKind,
    rels: RelSet,
    unspecified: u16,
    size: u16,
}

impl PlanNode {
    pub fn scan(kind: ScanKind, rel: RelId) -> Arc<PlanNode> {
        Arc::new(PlanNode {
            kind: NodeKind::Scan { kind, rel },
            rels: RelSet::single(rel),
            unspecified: u16::from(kind == ScanKind::Unspecified),
            size: 1,
        })
    }

    pub fn join(op: JoinOp, left: Arc<PlanNode>, right: Arc<PlanNode>) -> Arc<PlanNode> {
        Arc::new(PlanNode {
            rels: left.rels.union(right.rels),
            unspecified: left.unspecified + right.unspecified,
            size: left.size + right.size + 1,
            kind: NodeKind::Join { op, left, right },
        })
    }

    pub fn kind(&self) -> &NodeKind {
        &self.kind
    }

    /// Relations scanned somewhere in this subtree.
    pub fn rels(&self) -> RelSet {
        self.rels
    }

    pub fn unspecified_scans(&self) -> usize {
        self.unspecified as usize
    }

    /// Number of nodes in the subtree.
    pub fn size(&self) -> usize {
        self.size as usize
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Scan { .. })
    }

    pub fn children(&self) -> Option<(&Arc<PlanNode>, &Arc<PlanNode>)> {
        match &self.kind {
            NodeKind::Join { left, right, .. } => Some((left, right)),
            NodeKind::Scan { .. } => None,
        }
    }

    pub fn join_op(&self) -> Option<JoinOp> {
        match self.kind {
            NodeKind::Join { op, .. } => Some(op),
            NodeKind::Scan { .. } => None,
        }
    }

    pub fn scan_kind(&self) -> Option<(ScanKind, RelId)> {
        match self.kind {
            NodeKind::Scan { kind, rel } => Some((kind, rel)),
            NodeKind::Join { .. } => None,
        }
    }

    /// Pre-order traversal (node, left subtree, right subtree).
    pub fn preorder(&self) -> Vec<&PlanNode> {
        let mut out = Vec::with_capacity(self.size());
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            if let Some((l, r)) = n.children() {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    /// The subtree whose relation set is exactly `rels`, if one exists.
    pub fn find_subtree(&self, rels: RelSet) -> Option<&PlanNode> {
        if self.rels == rels {
            return Some(self);
        }
        if !rels.is_subset_of(self.rels) {
            return None;
        }
        let (l, r) = self.children()?;
        l.find_subtree(rels).or_else(|| r.find_subtree(rels))
    }

    fn write_key(&self, out: &mut String) {
        match &self.kind {
            NodeKind::Scan { kind, rel } => {
                out.push(kind.tag());
                let _ = write!(out, "{}", rel.0);
            }
            NodeKind::Join { op, left, right } => {
                out.push(op.tag());
                out.push('(');
                left.write_key(out);
                out.push(',');
                right.write_key(out);
                out.push(')');
            }
        }
    }

    pub fn key(&self) -> String {
        let mut s = String::new();
        self.write_key(&mut s);
        s
    }
}

impl fmt::Display for PlanNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            NodeKind::Scan { kind, rel } => write!(f, "{}({})", kind.tag(), rel),
            NodeKind::Join { op, left, right } => write!(f, "({left} {} {right})", op.tag()),
        }
    }
}

/// A partial or complete execution plan: a forest of plan trees for one query.
///
/// Roots are always kept sorted by the lowest relation they contain, so two
/// forests with the same trees compare equal regardless of construction order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlanForest {
    query_id: QueryId,
    roots: Vec<Arc<PlanNode>>,
}

impl PlanForest {
    pub fn new(query_id: QueryId, mut roots: Vec<Arc<PlanNode>>) -> Self {
        roots.sort_by_key(|r| r.rels().min());
        PlanForest { query_id, roots }
    }

    /// The starting state of a search: one unspecified scan per relation.
    pub fn initial(query: &Query) -> Self {
        let roots = query
            .relations
            .iter()
            .map(|&r| PlanNode::scan(ScanKind::Unspecified, r))
            .collect();
        PlanForest::new(query.id.clone(), roots)
    }

    /// A single-tree plan.
    pub fn from_root(query_id: QueryId, root: Arc<PlanNode>) -> Self {
        PlanForest {
            query_id,
            roots: vec![root],
        }
    }

    pub fn query_id(&self) -> &QueryId {
        &self.query_id
    }

    pub fn roots(&self) -> &[Arc<PlanNode>] {
        &self.roots
    }

    pub fn rels(&self) -> RelSet {
        self.roots
            .iter()
            .fold(RelSet::EMPTY, |acc, r| acc.union(r.rels()))
    }

    pub fn unspecified_scans(&self) -> usize {
        self.roots.iter().map(|r| r.unspecified_scans()).sum()
    }

    pub fn node_count(&self) -> usize {
        self.roots.iter().map(|r| r.size()).sum()
    }

    /// Decisions still to take: unspecified scans plus pending root merges.
    pub fn open_decisions(&self) -> usize {
        self.unspecified_scans() + self.roots.len().saturating_sub(1)
    }

    /// Single tree with no unspecified scans; ignores query ownership.
    pub fn is_finished(&self) -> bool {
        self.roots.len() == 1 && self.unspecified_scans() == 0
    }

    pub fn is_complete(&self, query: &Query) -> Result<bool> {
        self.check_owner(query)?;
        Ok(self.is_finished())
    }

    /// The single root of a one-tree forest.
    pub fn root(&self) -> Option<&Arc<PlanNode>> {
        match self.roots.as_slice() {
            [r] => Some(r),
            _ => None,
        }
    }

    pub(crate) fn check_owner(&self, query: &Query) -> Result<()> {
        if self.query_id != query.id {
            return Err(NeoError::contract(format!(
                "plan belongs to query {} but was used with query {}",
                self.query_id, query.id
            )));
        }
        Ok(())
    }

    /// Checks that leaves cover the query's relations exactly once each.
    pub fn validate(&self, query: &Query) -> Result<()> {
        self.check_owner(query)?;
        let mut seen = RelSet::EMPTY;
        let mut leaves = 0usize;
        for root in &self.roots {
            for n in root.preorder() {
                if let Some((_, rel)) = n.scan_kind() {
                    if seen.contains(rel) {
                        return Err(NeoError::contract(format!(
                            "relation {rel} appears in more than one leaf"
                        )));
                    }
                    seen = seen.union(RelSet::single(rel));
                    leaves += 1;
                }
            }
        }
        if seen != query.rel_set() || leaves != query.len() {
            return Err(NeoError::contract(format!(
                "plan leaves do not cover the relations of query {}",
                query.id
            )));
        }
        Ok(())
    }

    /// Deterministic serialization; roots appear in canonical order separated by `;`.
    pub fn canonical_key(&self) -> String {
        let mut s = String::new();
        for (i, r) in self.roots.iter().enumerate() {
            if i > 0 {
                s.push(';');
            }
            r.write_key(&mut s);
        }
        s
    }

    /// Inverse of [`PlanForest::canonical_key`].
    pub fn parse_key(query_id: QueryId, key: &str) -> Result<PlanForest> {
        let mut roots = Vec::new();
        for part in key.split(';') {
            let mut p = KeyParser {
                bytes: part.as_bytes(),
                pos: 0,
            };
            let node = p.node()?;
            if p.pos != p.bytes.len() {
                return Err(NeoError::Parse(format!("trailing input in plan key {part:?}")));
            }
            roots.push(node);
        }
        Ok(PlanForest::new(query_id, roots))
    }
}

impl fmt::Display for PlanForest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.roots.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "[{r}]")?;
        }
        Ok(())
    }
}

struct KeyParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl KeyParser<'_> {
    fn err(&self, what: &str) -> NeoError {
        NeoError::Parse(format!("plan key: {what} at byte {}", self.pos))
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.bytes.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected {:?}", c as char)))
        }
    }

    fn node(&mut self) -> Result<Arc<PlanNode>> {
        let tag = *self.bytes.get(self.pos).ok_or_else(|| self.err("unexpected end"))?;
        self.pos += 1;
        let op = match tag {
            b'H' => Some(JoinOp::Hash),
            b'M' => Some(JoinOp::Merge),
            b'L' => Some(JoinOp::Loop),
            _ => None,
        };
        if let Some(op) = op {
            self.expect(b'(')?;
            let l = self.node()?;
            self.expect(b',')?;
            let r = self.node()?;
            self.expect(b')')?;
            return Ok(PlanNode::join(op, l, r));
        }
        let kind = match tag {
            b'T' => ScanKind::Table,
            b'I' => ScanKind::Index,
            b'U' => ScanKind::Unspecified,
            _ => return Err(self.err("unknown node tag")),
        };
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let digits = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap_or_default();
        let rel: u16 = digits.parse().map_err(|_| self.err("bad relation id"))?;
        Ok(PlanNode::scan(kind, RelId(rel)))
    }
}
