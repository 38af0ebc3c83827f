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

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{CatalogConfig, CorrelationSpec};
use super::histogram::Histogram;
use super::stats::cramers_v;
use crate::error::{NeoError, Result};
use crate::plan::{ColumnRef, RelId, RelSet, MAX_RELATIONS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    /// Dense primary key `0..rows`.
    Key,
    ForeignKey { references: RelId },
    Attribute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    /// Values lie in `0..domain`.
    pub domain: u32,
    pub role: ColumnRole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDef {
    pub name: String,
    pub columns: Vec<ColumnDef>,
    /// `(column, referenced relation)`; the referenced column is always its key.
    pub fk_edges: Vec<(u16, RelId)>,
    pub row_count: usize,
    pub index_column: Option<u16>,
}

impl TableDef {
    pub fn column_index(&self, name: &str) -> Option<u16> {
        self.columns.iter().position(|c| c.name == name).map(|i| i as u16)
    }

    pub fn attribute_columns(&self) -> impl Iterator<Item = u16> + '_ {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.role == ColumnRole::Attribute)
            .map(|(i, _)| i as u16)
    }
}

/// The synthetic database: schema, base rows (column-major), per-column
/// equi-width histograms, and index flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub tables: Vec<TableDef>,
    /// `columns[table][column][row]`
    pub columns: Vec<Vec<Vec<u32>>>,
    pub histograms: Vec<Vec<Histogram>>,
    pub correlations: Vec<CorrelationSpec>,
    pub seed: u64,
}

impl Catalog {
    pub fn table(&self, rel: RelId) -> &TableDef {
        &self.tables[rel.index()]
    }

    pub fn relation_count(&self) -> usize {
        self.tables.len()
    }

    pub fn rel_by_name(&self, name: &str) -> Option<RelId> {
        self.tables.iter().position(|t| t.name == name).map(|i| RelId(i as u16))
    }

    pub fn column_by_name(&self, qualified: &str) -> Option<ColumnRef> {
        let (t, c) = qualified.split_once('.')?;
        let rel = self.rel_by_name(t)?;
        let col = self.table(rel).column_index(c)?;
        Some(ColumnRef::new(rel, col))
    }

    pub fn column_name(&self, col: ColumnRef) -> String {
        let t = self.table(col.rel);
        format!("{}.{}", t.name, t.columns[col.column as usize].name)
    }

    pub fn column_def(&self, col: ColumnRef) -> Result<&ColumnDef> {
        self.tables
            .get(col.rel.index())
            .and_then(|t| t.columns.get(col.column as usize))
            .ok_or_else(|| NeoError::Catalog(format!("unknown column {}.{}", col.rel, col.column)))
    }

    pub fn values(&self, col: ColumnRef) -> &[u32] {
        &self.columns[col.rel.index()][col.column as usize]
    }

    pub fn histogram(&self, col: ColumnRef) -> Result<&Histogram> {
        self.histograms
            .get(col.rel.index())
            .and_then(|t| t.get(col.column as usize))
            .ok_or_else(|| NeoError::Catalog(format!("unknown column {}.{}", col.rel, col.column)))
    }

    pub fn is_indexable(&self, rel: RelId) -> bool {
        self.table(rel).index_column.is_some()
    }

    /// Relations with an index.
    pub fn indexable(&self) -> RelSet {
        (0..self.tables.len())
            .map(|i| RelId(i as u16))
            .filter(|&r| self.is_indexable(r))
            .collect()
    }

    /// Global column slots in catalog order; the predicate-vector layout.
    pub fn all_columns(&self) -> Vec<ColumnRef> {
        self.tables
            .iter()
            .enumerate()
            .flat_map(|(t, def)| {
                (0..def.columns.len()).map(move |c| ColumnRef::new(RelId(t as u16), c as u16))
            })
            .collect()
    }

    /// Undirected FK edges as `(child column, parent key column)`.
    pub fn fk_graph(&self) -> Vec<(ColumnRef, ColumnRef)> {
        let mut out = Vec::new();
        for (t, def) in self.tables.iter().enumerate() {
            for &(col, parent) in &def.fk_edges {
                out.push((ColumnRef::new(RelId(t as u16), col), ColumnRef::new(parent, 0)));
            }
        }
        out
    }

    /// SHA-256 over the canonical JSON form, hex encoded.
    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(&CatalogFile::from(self)).expect("catalog serializes");
        hex_digest(&bytes)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CatalogFile::from(self)).expect("catalog serializes")
    }

    pub fn from_json(text: &str) -> Result<Catalog> {
        let file: CatalogFile = serde_json::from_str(text)?;
        file.into_catalog()
    }

    /// Builds a catalog from explicit rows, computing histograms.
    pub fn from_rows(tables: Vec<TableDef>, rows: Vec<Vec<Vec<u32>>>, buckets: usize) -> Result<Catalog> {
        if tables.len() != rows.len() {
            return Err(NeoError::Catalog("one row set per table required".into()));
        }
        let mut columns = Vec::with_capacity(tables.len());
        for (def, table_rows) in tables.iter().zip(rows) {
            let mut cols = vec![Vec::with_capacity(table_rows.len()); def.columns.len()];
            for row in table_rows {
                if row.len() != def.columns.len() {
                    return Err(NeoError::Catalog(format!("row width mismatch in {}", def.name)));
                }
                for (c, v) in row.into_iter().enumerate() {
                    cols[c].push(v);
                }
            }
            columns.push(cols);
        }
        let catalog = Catalog::assemble(tables, columns, vec![], 0, buckets);
        catalog.validate()?;
        Ok(catalog)
    }

    fn assemble(
        tables: Vec<TableDef>,
        columns: Vec<Vec<Vec<u32>>>,
        correlations: Vec<CorrelationSpec>,
        seed: u64,
        buckets: usize,
    ) -> Catalog {
        let histograms = tables
            .iter()
            .zip(&columns)
            .map(|(def, cols)| {
                def.columns
                    .iter()
                    .zip(cols)
                    .map(|(c, vals)| Histogram::build(vals, c.domain, buckets))
                    .collect()
            })
            .collect();
        Catalog {
            tables,
            columns,
            histograms,
            correlations,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tables.is_empty() || self.tables.len() > MAX_RELATIONS {
            return Err(NeoError::Catalog(format!(
                "catalog must hold 1..={MAX_RELATIONS} tables"
            )));
        }
        for (t, def) in self.tables.iter().enumerate() {
            if def.row_count == 0 {
                return Err(NeoError::Catalog(format!("table {} is empty", def.name)));
            }
            if def.columns.iter().any(|c| c.domain < 2 && c.role == ColumnRole::Attribute) {
                return Err(NeoError::Catalog(format!("table {} has a domain below 2", def.name)));
            }
            for (c, col) in self.columns[t].iter().enumerate() {
                if col.len() != def.row_count {
                    return Err(NeoError::Catalog(format!("column length mismatch in {}", def.name)));
                }
                let domain = def.columns[c].domain;
                if col.iter().any(|&v| v >= domain) {
                    return Err(NeoError::Catalog(format!(
                        "value outside domain in {}.{}",
                        def.name, def.columns[c].name
                    )));
                }
            }
            for &(col, parent) in &def.fk_edges {
                let parent_rows = self
                    .tables
                    .get(parent.index())
                    .map(|p| p.row_count as u32)
                    .ok_or_else(|| NeoError::Catalog(format!("dangling FK in {}", def.name)))?;
                if self.columns[t][col as usize].iter().any(|&v| v >= parent_rows) {
                    return Err(NeoError::Catalog(format!("FK integrity violated in {}", def.name)));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Persisted catalog: schema, row-major base rows, histogram blocks.
#[derive(Serialize, Deserialize)]
struct CatalogFile {
    seed: u64,
    tables: Vec<TableDef>,
    correlations: Vec<CorrelationSpec>,
    rows: Vec<Vec<Vec<u32>>>,
    histograms: Vec<Vec<Histogram>>,
}

impl From<&Catalog> for CatalogFile {
    fn from(c: &Catalog) -> Self {
        let rows = c
            .tables
            .iter()
            .zip(&c.columns)
            .map(|(def, cols)| {
                (0..def.row_count)
                    .map(|r| cols.iter().map(|col| col[r]).collect())
                    .collect()
            })
            .collect();
        CatalogFile {
            seed: c.seed,
            tables: c.tables.clone(),
            correlations: c.correlations.clone(),
            rows,
            histograms: c.histograms.clone(),
        }
    }
}

impl CatalogFile {
    fn into_catalog(self) -> Result<Catalog> {
        let mut columns = Vec::with_capacity(self.tables.len());
        for (def, rows) in self.tables.iter().zip(&self.rows) {
            let mut cols = vec![Vec::with_capacity(rows.len()); def.columns.len()];
            for row in rows {
                if row.len() != def.columns.len() {
                    return Err(NeoError::Catalog(format!("row width mismatch in {}", def.name)));
                }
                for (c, &v) in row.iter().enumerate() {
                    cols[c].push(v);
                }
            }
            columns.push(cols);
        }
        let catalog = Catalog {
            tables: self.tables,
            columns,
            histograms: self.histograms,
            correlations: self.correlations,
            seed: self.seed,
        };
        catalog.validate()?;
        Ok(catalog)
    }
}

struct Resolved {
    target: ColumnRef,
    source: ColumnRef,
    /// FK column of the target table leading to the source table, when cross-table.
    via: Option<u16>,
    strength: f64,
}

/// Generates a catalog deterministically from `(config, seed)`.
pub fn generate_catalog(config: &CatalogConfig, seed: u64) -> Result<Catalog> {
    if config.tables.is_empty() || config.tables.len() > MAX_RELATIONS {
        return Err(NeoError::config(format!(
            "catalog needs 1..={MAX_RELATIONS} tables"
        )));
    }
    if config.histogram_buckets == 0 {
        return Err(NeoError::config("histogram_buckets must be positive"));
    }
    let names: HashMap<&str, usize> = config
        .tables
        .iter()
        .enumerate()
        .map(|(i, t)| (t.name.as_str(), i))
        .collect();
    if names.len() != config.tables.len() {
        return Err(NeoError::config("duplicate table names"));
    }

    // Schema.
    let mut tables = Vec::with_capacity(config.tables.len());
    for spec in &config.tables {
        if spec.rows == 0 {
            return Err(NeoError::config(format!("table {} has no rows", spec.name)));
        }
        let mut columns = vec![ColumnDef {
            name: "id".into(),
            domain: spec.rows as u32,
            role: ColumnRole::Key,
        }];
        let mut fk_edges = Vec::new();
        for fk in &spec.foreign_keys {
            let parent = *names.get(fk.references.as_str()).ok_or_else(|| {
                NeoError::config(format!("{} references unknown table {}", spec.name, fk.references))
            })?;
            fk_edges.push((columns.len() as u16, RelId(parent as u16)));
            columns.push(ColumnDef {
                name: format!("{}_id", fk.references),
                domain: config.tables[parent].rows as u32,
                role: ColumnRole::ForeignKey {
                    references: RelId(parent as u16),
                },
            });
        }
        for a in &spec.attributes {
            if a.domain < 2 {
                return Err(NeoError::config(format!(
                    "{}.{} domain must be at least 2",
                    spec.name, a.name
                )));
            }
            columns.push(ColumnDef {
                name: a.name.clone(),
                domain: a.domain,
                role: ColumnRole::Attribute,
            });
        }
        let index_column = match &spec.index {
            None => None,
            Some(c) => Some(
                columns
                    .iter()
                    .position(|d| &d.name == c)
                    .ok_or_else(|| NeoError::config(format!("index on unknown column {}.{c}", spec.name)))?
                    as u16,
            ),
        };
        tables.push(TableDef {
            name: spec.name.clone(),
            columns,
            fk_edges,
            row_count: spec.rows,
            index_column,
        });
    }
    if has_fk_cycle(&tables) {
        return Err(NeoError::config("foreign keys form a cycle"));
    }

    let resolve = |q: &str| -> Result<ColumnRef> {
        let (t, c) = q
            .split_once('.')
            .ok_or_else(|| NeoError::config(format!("expected table.column, got {q}")))?;
        let rel = *names
            .get(t)
            .ok_or_else(|| NeoError::config(format!("unknown table {t}")))?;
        let col = tables[rel]
            .column_index(c)
            .ok_or_else(|| NeoError::config(format!("unknown column {q}")))?;
        Ok(ColumnRef::new(RelId(rel as u16), col))
    };
    let mut correlations = Vec::new();
    for spec in &config.correlations {
        let source = resolve(&spec.source)?;
        let target = resolve(&spec.target)?;
        if !(0.0..=1.0).contains(&spec.strength) {
            return Err(NeoError::config(format!(
                "correlation strength {} outside [0, 1]",
                spec.strength
            )));
        }
        let tdef = &tables[target.rel.index()];
        if tdef.columns[target.column as usize].role != ColumnRole::Attribute {
            return Err(NeoError::config(format!("{} is not an attribute", spec.target)));
        }
        let via = if source.rel == target.rel {
            if source == target {
                return Err(NeoError::config("a column cannot correlate with itself"));
            }
            None
        } else {
            Some(
                tdef.fk_edges
                    .iter()
                    .find(|(_, p)| *p == source.rel)
                    .map(|(c, _)| *c)
                    .ok_or_else(|| {
                        NeoError::config(format!(
                            "{} and {} are not linked by a foreign key",
                            spec.source, spec.target
                        ))
                    })?,
            )
        };
        if correlations.iter().any(|r: &Resolved| r.target == target) {
            return Err(NeoError::config(format!("{} is the target of two correlations", spec.target)));
        }
        correlations.push(Resolved {
            target,
            source,
            via,
            strength: spec.strength,
        });
    }

    // Data, parents before children.
    let order = topological_order(&tables);
    let mut columns: Vec<Vec<Vec<u32>>> = tables.iter().map(|t| vec![Vec::new(); t.columns.len()]).collect();
    for &t in &order {
        let rel = RelId(t as u16);
        let spec = &config.tables[t];
        let rows = spec.rows;
        columns[t][0] = (0..rows as u32).collect();
        for (k, &(col, parent)) in tables[t].fk_edges.iter().enumerate() {
            let mut rng = column_rng(seed, t, col as usize, 0);
            let parent_rows = tables[parent.index()].row_count as u32;
            columns[t][col as usize] = sample_column(&mut rng, rows, parent_rows, spec.foreign_keys[k].skew)?;
        }
        let attr_cols: Vec<u16> = tables[t].attribute_columns().collect();
        let mut pending: BTreeSet<u16> = attr_cols.iter().copied().collect();
        while !pending.is_empty() {
            let ready: Vec<u16> = pending
                .iter()
                .copied()
                .filter(|&c| {
                    correlations
                        .iter()
                        .find(|r| r.target == ColumnRef::new(rel, c))
                        .is_none_or(|r| r.via.is_some() || !pending.contains(&r.source.column))
                })
                .collect();
            if ready.is_empty() {
                return Err(NeoError::config(format!(
                    "correlations inside {} are cyclic",
                    tables[t].name
                )));
            }
            for c in ready {
                pending.remove(&c);
                let a_index = attr_cols.iter().position(|&x| x == c).unwrap();
                let a = &spec.attributes[a_index];
                let target = ColumnRef::new(rel, c);
                let values = match correlations.iter().find(|r| r.target == target) {
                    None => {
                        let mut rng = column_rng(seed, t, c as usize, 0);
                        sample_column(&mut rng, rows, a.domain, a.skew)?
                    }
                    Some(r) => {
                        let source_vals: Vec<u32> = match r.via {
                            None => columns[t][r.source.column as usize].clone(),
                            Some(fk_col) => {
                                let parent = &columns[r.source.rel.index()][r.source.column as usize];
                                columns[t][fk_col as usize].iter().map(|&k| parent[k as usize]).collect()
                            }
                        };
                        correlated_column(seed, t, c, &source_vals, a.domain, a.skew, r.strength)?
                    }
                };
                columns[t][c as usize] = values;
            }
        }
    }

    let catalog = Catalog::assemble(
        tables,
        columns,
        config.correlations.clone(),
        seed,
        config.histogram_buckets,
    );
    catalog.validate()?;
    Ok(catalog)
}

fn column_rng(seed: u64, table: usize, column: usize, attempt: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((table as u64) << 40) | ((column as u64) << 20) | attempt);
    rng
}

/// Uniform (exactly balanced, shuffled) when `skew == 0`, Zipf otherwise.
fn sample_column(rng: &mut ChaCha8Rng, rows: usize, domain: u32, skew: f64) -> Result<Vec<u32>> {
    if skew <= 0.0 {
        let mut v: Vec<u32> = (0..rows).map(|i| (i as u64 % domain as u64) as u32).collect();
        v.shuffle(rng);
        Ok(v)
    } else {
        let zipf = Zipf::new(domain as f64, skew)
            .map_err(|e| NeoError::config(format!("bad zipf parameters: {e}")))?;
        Ok((0..rows).map(|_| zipf.sample(rng) as u32 - 1).collect())
    }
}

fn correlated_value(source: u32, domain: u32) -> u32 {
    source % domain
}

/// Copies `f(source)` with probability `p`, otherwise draws from the base
/// distribution; `p` starts at `strength` and rises until Cramér's V reaches it.
fn correlated_column(
    seed: u64,
    table: usize,
    column: u16,
    source: &[u32],
    domain: u32,
    skew: f64,
    strength: f64,
) -> Result<Vec<u32>> {
    let mut p = strength;
    for attempt in 0u64.. {
        let mut rng = column_rng(seed, table, column as usize, attempt);
        let base = sample_column(&mut rng, source.len(), domain, skew)?;
        let values: Vec<u32> = source
            .iter()
            .zip(base)
            .map(|(&s, b)| {
                if rng.random::<f64>() < p {
                    correlated_value(s, domain)
                } else {
                    b
                }
            })
            .collect();
        if p >= 1.0 || cramers_v(source, &values) >= strength {
            return Ok(values);
        }
        p = (p + 0.02).min(1.0);
    }
    unreachable!()
}

fn has_fk_cycle(tables: &[TableDef]) -> bool {
    topological_order(tables).len() != tables.len()
}

/// Tables ordered so every referenced table precedes its referrers.
fn topological_order(tables: &[TableDef]) -> Vec<usize> {
    let mut done = vec![false; tables.len()];
    let mut order = Vec::with_capacity(tables.len());
    loop {
        let mut progressed = false;
        for (t, def) in tables.iter().enumerate() {
            if !done[t] && def.fk_edges.iter().all(|(_, p)| done[p.index()] && p.index() != t) {
                done[t] = true;
                order.push(t);
                progressed = true;
            }
        }
        if !progressed {
            return order;
        }
    }
}
