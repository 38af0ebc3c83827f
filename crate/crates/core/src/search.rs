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

//! Value-guided best-first plan search with an anytime cutoff and a greedy
//! fallback when no complete plan has been reached.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{NeoError, Result};
use crate::plan::{PlanForest, PlanSpace, Query};
use crate::simdb::Catalog;
use crate::valuemodel::PlanScorer;

/// Scores partial plans; lower is better.
pub trait Evaluator {
    fn score(&mut self, plan: &PlanForest) -> Result<f64>;
}

impl Evaluator for PlanScorer<'_> {
    fn score(&mut self, plan: &PlanForest) -> Result<f64> {
        PlanScorer::score(self, plan)
    }
}

/// Adapts a closure into an [`Evaluator`].
pub struct FnEvaluator<F>(pub F);

impl<F: FnMut(&PlanForest) -> f64> Evaluator for FnEvaluator<F> {
    fn score(&mut self, plan: &PlanForest) -> Result<f64> {
        Ok((self.0)(plan))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cutoff {
    /// Milliseconds of wall-clock time.
    WallClock(u64),
    /// Number of expanded plans.
    Expansions(usize),
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub cutoff: Cutoff,
    pub allow_cross_products: bool,
    /// Stop once the best complete plan scores no worse than the cheapest
    /// open plan. Sound only when scores never underestimate a plan's
    /// completions, e.g. with an exact best-completion evaluator.
    pub stop_at_bound: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            cutoff: Cutoff::WallClock(250),
            allow_cross_products: false,
            stop_at_bound: false,
        }
    }
}

impl SearchConfig {
    pub fn expansions(n: usize) -> Self {
        SearchConfig {
            cutoff: Cutoff::Expansions(n),
            ..SearchConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.cutoff {
            Cutoff::WallClock(0) | Cutoff::Expansions(0) => Err(NeoError::config("search cutoff must be positive")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub plan: PlanForest,
    pub score: f64,
    pub expansions: usize,
    /// The cutoff fired before any complete plan was seen.
    pub hurried: bool,
}

struct Open {
    score: f64,
    seq: u64,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.score.total_cmp(&self.score).then(other.seq.cmp(&self.seq))
    }
}

fn space_for(catalog: &Catalog, cfg: &SearchConfig) -> PlanSpace {
    PlanSpace::new(catalog.indexable()).with_cross_products(cfg.allow_cross_products)
}

fn finite(score: f64, plan: &PlanForest) -> Result<f64> {
    if score.is_nan() {
        Err(NeoError::contract(format!("evaluator returned NaN for {}", plan.canonical_key())))
    } else {
        Ok(score)
    }
}

/// Pops the lowest-scored plan, scores and pushes its children, and keeps the
/// best-scored complete plan seen. Ties are broken first-in first-out.
pub fn best_first_search(
    evaluator: &mut dyn Evaluator,
    query: &Query,
    catalog: &Catalog,
    cfg: &SearchConfig,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    query.validate()?;
    let started = Instant::now();
    let space = space_for(catalog, cfg);
    let mut plans: Vec<Option<PlanForest>> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut best: Option<(f64, PlanForest)> = None;

    let p0 = PlanForest::initial(query);
    let s0 = finite(evaluator.score(&p0)?, &p0)?;
    seen.insert(p0.canonical_key());
    if p0.is_finished() {
        best = Some((s0, p0.clone()));
    }
    heap.push(Open { score: s0, seq: 0 });
    plans.push(Some(p0.clone()));
    let mut last_popped = p0;
    let mut expansions = 0usize;

    loop {
        let out_of_budget = match cfg.cutoff {
            Cutoff::Expansions(n) => expansions >= n,
            Cutoff::WallClock(ms) => started.elapsed() >= Duration::from_millis(ms),
            Cutoff::None => false,
        };
        if out_of_budget {
            break;
        }
        let Some(open) = heap.pop() else { break };
        if cfg.stop_at_bound && best.as_ref().is_some_and(|(b, _)| *b <= open.score) {
            break;
        }
        let plan = plans[open.seq as usize].take().expect("each plan is popped once");
        if plan.is_finished() {
            last_popped = plan;
            continue;
        }
        expansions += 1;
        for child in space.children(&plan, query) {
            if !seen.insert(child.canonical_key()) {
                continue;
            }
            let s = finite(evaluator.score(&child)?, &child)?;
            if child.is_finished() && best.as_ref().is_none_or(|(b, _)| s < *b) {
                best = Some((s, child.clone()));
            }
            heap.push(Open {
                score: s,
                seq: plans.len() as u64,
            });
            plans.push(Some(child));
        }
        last_popped = plan;
    }

    match best {
        Some((score, plan)) => Ok(SearchOutcome {
            plan,
            score,
            expansions,
            hurried: false,
        }),
        None => {
            let (plan, score) = hurry_up_scored(evaluator, last_popped, query, catalog, cfg)?;
            Ok(SearchOutcome {
                plan,
                score,
                expansions,
                hurried: true,
            })
        }
    }
}

/// Greedy descent: repeatedly moves to the lowest-scored child.
pub fn hurry_up(
    evaluator: &mut dyn Evaluator,
    start: PlanForest,
    query: &Query,
    catalog: &Catalog,
    cfg: &SearchConfig,
) -> Result<PlanForest> {
    Ok(hurry_up_scored(evaluator, start, query, catalog, cfg)?.0)
}

fn hurry_up_scored(
    evaluator: &mut dyn Evaluator,
    start: PlanForest,
    query: &Query,
    catalog: &Catalog,
    cfg: &SearchConfig,
) -> Result<(PlanForest, f64)> {
    start.validate(query)?;
    let space = space_for(catalog, cfg);
    let mut plan = start;
    let mut score = None;
    while !plan.is_finished() {
        let mut pick: Option<(f64, PlanForest)> = None;
        for child in space.children(&plan, query) {
            let s = finite(evaluator.score(&child)?, &child)?;
            if pick.as_ref().is_none_or(|(b, _)| s < *b) {
                pick = Some((s, child));
            }
        }
        let (s, next) = pick.ok_or_else(|| NeoError::contract("incomplete plan without children"))?;
        plan = next;
        score = Some(s);
    }
    let score = match score {
        Some(s) => s,
        None => finite(evaluator.score(&plan)?, &plan)?,
    };
    Ok((plan, score))
}
