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

//! Query and plan data model.

mod json;
mod node;
mod query;
mod relset;
mod space;

pub use node::{JoinOp, NodeKind, PlanForest, PlanNode, ScanKind};
pub use query::{ColumnPredicate, ColumnRef, CompareOp, JoinEdge, Query, QueryId};
pub use relset::{RelId, RelSet, MAX_RELATIONS};
pub use space::{construction_states, is_subplan, PlanSpace};
pub(crate) use space::is_subplan_unchecked;
