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

use std::collections::HashMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::catalog::Catalog;
use super::config::WorkloadConfig;
use crate::error::{NeoError, Result};
use crate::plan::{ColumnPredicate, ColumnRef, CompareOp, JoinEdge, Query, RelId, RelSet};

/// Generates connected select-join queries over the catalog's FK graph.
///
/// Predicate literals are read from one consistent joined tuple of the
/// query's relations, so predicates on correlated columns carry correlated
/// values (the case independence-based estimators get wrong). Queries are
/// instances of `config.templates` shapes, cycled in order.
pub fn generate_workload(catalog: &Catalog, config: &WorkloadConfig, seed: u64) -> Result<Vec<Query>> {
    if config.min_joins > config.max_joins || config.min_predicates > config.max_predicates {
        return Err(NeoError::config("workload ranges must satisfy min <= max"));
    }
    let fk = catalog.fk_graph();
    let n = catalog.relation_count();
    let mut neighbors = vec![RelSet::EMPTY; n];
    for (child, parent) in &fk {
        neighbors[child.rel.index()] = neighbors[child.rel.index()].union(RelSet::single(parent.rel));
        neighbors[parent.rel.index()] = neighbors[parent.rel.index()].union(RelSet::single(child.rel));
    }
    let component_size: Vec<usize> = (0..n)
        .map(|r| {
            let mut comp = RelSet::single(RelId(r as u16));
            loop {
                let grown = comp.iter().fold(comp, |acc, x| acc.union(neighbors[x.index()]));
                if grown == comp {
                    return comp.len();
                }
                comp = grown;
            }
        })
        .collect();
    let largest = component_size.iter().copied().max().unwrap_or(0);
    if config.max_joins + 1 > largest {
        return Err(NeoError::config(format!(
            "{} joins requested but the largest connected FK subgraph has {} relations",
            config.max_joins, largest
        )));
    }

    let correlated: Vec<(ColumnRef, ColumnRef)> = catalog
        .correlations
        .iter()
        .filter_map(|c| Some((catalog.column_by_name(&c.source)?, catalog.column_by_name(&c.target)?)))
        .collect();

    let template_count = match config.templates {
        0 => config.queries,
        t => t.min(config.queries),
    };
    let templates: Vec<Template> = (0..template_count)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64 + 1);
            make_template(catalog, config, &fk, &neighbors, &component_size, &correlated, &mut rng)
        })
        .collect();

    let mut out = Vec::with_capacity(config.queries);
    for qi in 0..config.queries {
        let template = &templates[qi % template_count];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((1 << 32) | qi as u64);
        let anchor = anchor_tuple(catalog, template.set, &template.edges, &mut rng);
        let predicates = instantiate_predicates(catalog, template, &anchor, &mut rng)?;
        let id = format!("{}{:04}", config.id_prefix, qi);
        out.push(Query::new(id, template.set.iter().collect(), template.edges.clone(), predicates)?);
    }
    Ok(out)
}

/// Query shape shared by all instances of a template: relations, join
/// edges and predicated columns with their operator draw. Literals come
/// from each instance's anchor tuple.
struct Template {
    set: RelSet,
    edges: Vec<JoinEdge>,
    /// Column, operator draw in [0, 1), and whether it is forced to equality.
    columns: Vec<(ColumnRef, f64, bool)>,
}

fn make_template(
    catalog: &Catalog,
    config: &WorkloadConfig,
    fk: &[(ColumnRef, ColumnRef)],
    neighbors: &[RelSet],
    component_size: &[usize],
    correlated: &[(ColumnRef, ColumnRef)],
    rng: &mut ChaCha8Rng,
) -> Template {
    let n = neighbors.len();
    let joins = rng.random_range(config.min_joins..=config.max_joins);
    let starts: Vec<usize> = (0..n).filter(|&r| component_size[r] > joins).collect();
    let start = RelId(*starts.choose(rng).unwrap() as u16);
    let mut set = RelSet::single(start);
    for _ in 0..joins {
        let frontier: Vec<RelId> = set
            .iter()
            .fold(RelSet::EMPTY, |acc, r| acc.union(neighbors[r.index()]))
            .iter()
            .filter(|r| !set.contains(*r))
            .collect();
        let next = *frontier.choose(rng).expect("component is large enough");
        set = set.union(RelSet::single(next));
    }
    let edges: Vec<JoinEdge> = fk
        .iter()
        .filter(|(c, p)| set.contains(c.rel) && set.contains(p.rel))
        .map(|&(c, p)| JoinEdge::new(c, p))
        .collect();

    let mut available: Vec<ColumnRef> = set
        .iter()
        .flat_map(|r| catalog.table(r).attribute_columns().map(move |c| ColumnRef::new(r, c)))
        .collect();
    let wanted = rng
        .random_range(config.min_predicates..=config.max_predicates)
        .min(available.len());
    let mut chosen: Vec<ColumnRef> = Vec::new();
    let usable: Vec<&(ColumnRef, ColumnRef)> = correlated
        .iter()
        .filter(|(a, b)| set.contains(a.rel) && set.contains(b.rel))
        .collect();
    // A correlated pair, when the query covers one, is always predicated
    // with equality on both columns.
    if wanted >= 2 && !usable.is_empty() {
        let &(a, b) = *usable.choose(rng).unwrap();
        chosen.push(a);
        chosen.push(b);
    }
    let paired = chosen.len();
    available.retain(|c| !chosen.contains(c));
    available.shuffle(rng);
    chosen.extend(available.into_iter().take(wanted.saturating_sub(chosen.len())));
    let columns = chosen
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c, rng.random::<f64>(), i < paired))
        .collect();
    Template { set, edges, columns }
}

/// One row id per relation such that all FK edges in `set` are satisfied
/// wherever the data allows.
fn anchor_tuple(catalog: &Catalog, set: RelSet, edges: &[JoinEdge], rng: &mut ChaCha8Rng) -> HashMap<RelId, u32> {
    let start = set
        .iter()
        .max_by_key(|r| (catalog.table(*r).row_count, std::cmp::Reverse(r.0)))
        .unwrap();
    let mut rows = HashMap::new();
    rows.insert(start, rng.random_range(0..catalog.table(start).row_count as u32));
    let mut frontier = vec![start];
    while let Some(cur) = frontier.pop() {
        for e in edges {
            let (mine, theirs) = if e.left.rel == cur {
                (e.left, e.right)
            } else if e.right.rel == cur {
                (e.right, e.left)
            } else {
                continue;
            };
            if rows.contains_key(&theirs.rel) {
                continue;
            }
            let my_value = catalog.values(mine)[rows[&cur] as usize];
            let their_rows = catalog.table(theirs.rel).row_count as u32;
            let row = if theirs.column == 0 {
                // following a foreign key to a dense primary key
                my_value
            } else {
                let matches: Vec<u32> = (0..their_rows)
                    .filter(|&r| catalog.values(theirs)[r as usize] == my_value)
                    .collect();
                matches
                    .choose(rng)
                    .copied()
                    .unwrap_or_else(|| rng.random_range(0..their_rows))
            };
            rows.insert(theirs.rel, row);
            frontier.push(theirs.rel);
        }
    }
    rows
}

fn instantiate_predicates(
    catalog: &Catalog,
    template: &Template,
    anchor: &HashMap<RelId, u32>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<ColumnPredicate>> {
    let mut preds = Vec::with_capacity(template.columns.len());
    for &(col, roll, forced_eq) in &template.columns {
        let domain = catalog.column_def(col)?.domain as i64;
        let v = catalog.values(col)[anchor[&col.rel] as usize] as i64;
        let (op, values) = if forced_eq || roll < 0.6 {
            (CompareOp::Eq, vec![v])
        } else if roll < 0.75 {
            let mut vals = vec![v];
            for _ in 0..rng.random_range(1..=2) {
                vals.push(rng.random_range(0..domain));
            }
            vals.sort_unstable();
            vals.dedup();
            (CompareOp::InList, vals)
        } else if roll < 0.85 {
            (CompareOp::Lt, vec![(v + 1 + rng.random_range(0..=domain / 4)).min(domain)])
        } else if roll < 0.95 {
            (CompareOp::Gt, vec![(v - 1 - rng.random_range(0..=domain / 4)).max(-1)])
        } else if v >= 10 {
            (CompareOp::LikePrefix, vec![v / 10])
        } else {
            (CompareOp::Neq, vec![(v + 1) % domain])
        };
        preds.push(ColumnPredicate::new(col.rel, col.column, op, values)?);
    }
    Ok(preds)
}
