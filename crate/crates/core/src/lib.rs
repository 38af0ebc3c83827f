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

//! A learned query optimizer at desk scale.
//!
//! A Selinger-style expert bootstraps a set of executed plans; a tree
//! convolution value network is trained on the observed latencies; a
//! best-first search guided by the network then proposes new plans, which are
//! executed (here: costed by a closed-form latency simulator over true
//! cardinalities) and fed back as experience.

pub mod driver;
pub mod error;
pub mod expert;
pub mod featurize;
pub mod nn;
pub mod plan;
pub mod rvec;
pub mod search;
pub mod simdb;
pub mod valuemodel;

pub use error::{NeoError, Result};
pub use plan::{
    construction_states, is_subplan, ColumnPredicate, ColumnRef, CompareOp, JoinEdge, JoinOp,
    PlanForest, PlanNode, PlanSpace, Query, QueryId, RelId, RelSet, ScanKind,
};
