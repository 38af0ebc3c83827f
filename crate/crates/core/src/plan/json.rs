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

//! JSON form of plans:
//! `{"join": "hash|merge|loop", "l": <node>, "r": <node>}` or
//! `{"scan": "table|index|unspec", "rel": "<id>"}`; forests are
//! `{"query_id": "...", "roots": [<node>, ...]}`.

use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::node::{JoinOp, NodeKind, PlanForest, PlanNode, ScanKind};
use super::query::QueryId;
use super::relset::RelId;

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeRepr {
    Join {
        join: JoinOp,
        l: Box<NodeRepr>,
        r: Box<NodeRepr>,
    },
    Scan {
        scan: ScanKind,
        rel: String,
    },
}

impl NodeRepr {
    fn from_node(node: &PlanNode) -> Self {
        match node.kind() {
            NodeKind::Scan { kind, rel } => NodeRepr::Scan {
                scan: *kind,
                rel: rel.to_string(),
            },
            NodeKind::Join { op, left, right } => NodeRepr::Join {
                join: *op,
                l: Box::new(NodeRepr::from_node(left)),
                r: Box::new(NodeRepr::from_node(right)),
            },
        }
    }

    fn into_node(self) -> Result<Arc<PlanNode>, String> {
        match self {
            NodeRepr::Scan { scan, rel } => {
                let id: u16 = rel.parse().map_err(|_| format!("bad relation id {rel:?}"))?;
                Ok(PlanNode::scan(scan, RelId(id)))
            }
            NodeRepr::Join { join, l, r } => Ok(PlanNode::join(join, l.into_node()?, r.into_node()?)),
        }
    }
}

impl Serialize for PlanNode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        NodeRepr::from_node(self).serialize(s)
    }
}

#[derive(Serialize, Deserialize)]
struct ForestRepr {
    query_id: QueryId,
    roots: Vec<NodeRepr>,
}

impl Serialize for PlanForest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ForestRepr {
            query_id: self.query_id().clone(),
            roots: self.roots().iter().map(|r| NodeRepr::from_node(r)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PlanForest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = ForestRepr::deserialize(d)?;
        let roots = repr
            .roots
            .into_iter()
            .map(NodeRepr::into_node)
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        Ok(PlanForest::new(repr.query_id, roots))
    }
}
