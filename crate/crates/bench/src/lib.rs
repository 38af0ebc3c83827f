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


//! Fixtures shared by the benchmarks.

use neo_core::featurize::{encode_query, node_width, Variant};
use neo_core::simdb::{generate_catalog, generate_workload, Catalog, CatalogConfig, WorkloadConfig};
use neo_core::valuemodel::{NetConfig, ValueNet};
use neo_core::Query;

pub struct Fixture {
    pub catalog: Catalog,
    pub queries: Vec<Query>,
    pub net: ValueNet,
}

impl Fixture {
    /// Default catalog and workload with an untrained compact network.
    pub fn new() -> Self {
        let catalog = generate_catalog(&CatalogConfig::correlated_snowflake(), 0).unwrap();
        let queries = generate_workload(&catalog, &WorkloadConfig::default(), 0).unwrap();
        let width = encode_query(&queries[0], &catalog, Variant::Histogram, None).unwrap().len();
        let net = ValueNet::new(NetConfig::compact(), width, node_width(catalog.relation_count(), 3)).unwrap();
        Fixture { catalog, queries, net }
    }

    pub fn query_vec(&self, q: &Query) -> Vec<f64> {
        encode_query(q, &self.catalog, Variant::Histogram, None).unwrap().to_vec()
    }

    /// The query with the most relations.
    pub fn largest(&self) -> &Query {
        self.queries.iter().max_by_key(|q| q.relations.len()).unwrap()
    }
}

impl Default for Fixture {
    fn default() -> Self {
        Fixture::new()
    }
}
