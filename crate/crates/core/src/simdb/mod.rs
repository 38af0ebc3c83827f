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

//! Synthetic database: schema and data generation with controlled
//! correlations, histograms, exact cardinalities and the latency simulator.

mod cardinality;
mod catalog;
mod config;
mod histogram;
mod latency;
mod stats;
mod workload;

pub use cardinality::{true_cardinality, TrueCardinalities};
pub use catalog::{generate_catalog, Catalog, ColumnDef, ColumnRole, TableDef};
pub(crate) use catalog::hex_digest;
pub use config::{AttributeSpec, CatalogConfig, CorrelationSpec, ForeignKeySpec, TableSpec, WorkloadConfig};
pub use histogram::{histogram_selectivity, Histogram};
pub use latency::{
    join_key, join_ordering, scan_ordering, simulate_latency, simulate_latency_cached, tree_cost, Input,
    LatencyModel, Ordering,
};
pub use stats::cramers_v;
pub use workload::generate_workload;
