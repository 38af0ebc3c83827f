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

use serde::{Deserialize, Serialize};

/// Schema and data-generation parameters for a synthetic catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogConfig {
    pub tables: Vec<TableSpec>,
    #[serde(default)]
    pub correlations: Vec<CorrelationSpec>,
    #[serde(default = "default_buckets")]
    pub histogram_buckets: usize,
}

fn default_buckets() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub name: String,
    pub rows: usize,
    #[serde(default)]
    pub foreign_keys: Vec<ForeignKeySpec>,
    #[serde(default)]
    pub attributes: Vec<AttributeSpec>,
    /// Column carrying an index (`"id"`, an FK column name, or an attribute).
    #[serde(default)]
    pub index: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForeignKeySpec {
    pub references: String,
    /// Zipf exponent over referenced keys; 0 is uniform.
    #[serde(default)]
    pub skew: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub domain: u32,
    /// Zipf exponent over the domain; 0 gives an exactly uniform column.
    #[serde(default)]
    pub skew: f64,
}

/// `target` copies a function of `source` with high probability. `source` is
/// either in the target's table or in a table the target's table references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    /// `table.column`
    pub source: String,
    /// `table.column`
    pub target: String,
    /// Minimum Cramér's V between the two columns.
    pub strength: f64,
}

impl CatalogConfig {
    /// Snowflake schema around a `sales` fact table with several strongly
    /// correlated column pairs, both within and across tables.
    pub fn correlated_snowflake() -> Self {
        fn attr(name: &str, domain: u32, skew: f64) -> AttributeSpec {
            AttributeSpec {
                name: name.into(),
                domain,
                skew,
            }
        }
        fn fk(references: &str, skew: f64) -> ForeignKeySpec {
            ForeignKeySpec {
                references: references.into(),
                skew,
            }
        }
        fn corr(source: &str, target: &str, strength: f64) -> CorrelationSpec {
            CorrelationSpec {
                source: source.into(),
                target: target.into(),
                strength,
            }
        }
        let tables = vec![
            TableSpec {
                name: "region".into(),
                rows: 50,
                foreign_keys: vec![],
                attributes: vec![attr("country", 25, 0.0), attr("climate", 5, 0.0)],
                index: Some("id".into()),
            },
            TableSpec {
                name: "brand".into(),
                rows: 100,
                foreign_keys: vec![],
                attributes: vec![attr("tier", 40, 0.0), attr("origin", 10, 0.0)],
                index: Some("id".into()),
            },
            TableSpec {
                name: "reason".into(),
                rows: 20,
                foreign_keys: vec![],
                attributes: vec![attr("kind", 5, 0.0)],
                index: None,
            },
            TableSpec {
                name: "calendar".into(),
                rows: 365,
                foreign_keys: vec![],
                attributes: vec![attr("month", 12, 0.0), attr("weekday", 7, 0.0)],
                index: Some("id".into()),
            },
            TableSpec {
                name: "customer".into(),
                rows: 2000,
                foreign_keys: vec![fk("region", 0.0)],
                attributes: vec![attr("segment", 25, 0.0), attr("age_band", 10, 0.0)],
                index: Some("id".into()),
            },
            TableSpec {
                name: "product".into(),
                rows: 1000,
                foreign_keys: vec![fk("brand", 0.0)],
                attributes: vec![attr("category", 40, 0.0), attr("color", 40, 0.0)],
                index: Some("id".into()),
            },
            TableSpec {
                name: "store".into(),
                rows: 200,
                foreign_keys: vec![],
                attributes: vec![attr("size", 8, 0.0), attr("format", 6, 0.0)],
                index: None,
            },
            TableSpec {
                name: "sales".into(),
                rows: 20000,
                foreign_keys: vec![
                    fk("customer", 0.0),
                    fk("product", 0.8),
                    fk("store", 0.0),
                    fk("calendar", 0.0),
                ],
                attributes: vec![
                    attr("qty", 50, 0.0),
                    attr("price_band", 40, 0.0),
                    attr("channel", 25, 0.0),
                ],
                index: Some("product_id".into()),
            },
            TableSpec {
                name: "returns".into(),
                rows: 4000,
                foreign_keys: vec![fk("sales", 0.0), fk("reason", 0.0)],
                attributes: vec![attr("amount_band", 10, 0.0)],
                index: Some("sales_id".into()),
            },
        ];
        let correlations = vec![
            corr("product.category", "product.color", 0.95),
            corr("product.category", "sales.price_band", 0.95),
            corr("customer.segment", "sales.channel", 0.95),
            corr("region.country", "customer.segment", 0.95),
            corr("brand.tier", "product.category", 0.95),
            corr("store.size", "sales.qty", 0.8),
            corr("reason.kind", "returns.amount_band", 0.8),
        ];
        CatalogConfig {
            tables,
            correlations,
            histogram_buckets: default_buckets(),
        }
    }
}

impl Default for CatalogConfig {
    fn default() -> Self {
        CatalogConfig::correlated_snowflake()
    }
}

/// Query generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadConfig {
    pub queries: usize,
    pub min_joins: usize,
    pub max_joins: usize,
    pub min_predicates: usize,
    pub max_predicates: usize,
    /// Number of query shapes; query `i` instantiates shape `i mod templates`
    /// with fresh literals. Zero gives every query its own shape.
    #[serde(default)]
    pub templates: usize,
    #[serde(default = "default_prefix")]
    pub id_prefix: String,
}

fn default_prefix() -> String {
    "q".into()
}

impl Default for WorkloadConfig {
    fn default() -> Self {
        WorkloadConfig {
            queries: 50,
            min_joins: 2,
            max_joins: 6,
            min_predicates: 2,
            max_predicates: 3,
            templates: 10,
            id_prefix: default_prefix(),
        }
    }
}
