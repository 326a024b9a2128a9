//! Rank aggregation over scenario records.
//!
//! Within one scenario the successful methods receive fractional ranks by
//! score; every failed method receives rank s+1, one worse than the worst
//! success. Methods whose metric was undefined are left out of that
//! scenario entirely. A scenario where everything failed carries no
//! information and is marked degenerate (everyone rank 1).

use std::collections::BTreeMap;

use crate::metrics::{Metric, Orientation};
use crate::stattest;

use super::{DatasetKind, RecordStatus, ScenarioRecord};

#[derive(Debug, Clone)]
pub struct ScenarioRankRow {
    pub dataset: String,
    pub dataset_kind: DatasetKind,
    pub key: String,
    /// Aligned with `RankTable::methods`; None = method absent or
    /// unscored in this scenario.
    pub ranks: Vec<Option<f64>>,
    /// True when no method succeeded.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct RankTable {
    pub metric: Metric,
    pub methods: Vec<String>,
    pub scenarios: Vec<ScenarioRankRow>,
    /// Mean rank per method over the scenarios it appears in; NaN when it
    /// appears in none.
    pub mean_rank: Vec<f64>,
    pub median_rank: Vec<f64>,
    pub n_scenarios: Vec<usize>,
    pub degenerate_scenarios: usize,
}

impl RankTable {
    /// Methods ordered best (lowest mean rank) first; NaN sinks to the end.
    pub fn order_by_mean(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.methods.len()).collect();
        idx.sort_by(|&a, &b| {
            match (self.mean_rank[a].is_nan(), self.mean_rank[b].is_nan()) {
                (true, true) => a.cmp(&b),
                (true, false) => std::cmp::Ordering::Greater,
                (false, true) => std::cmp::Ordering::Less,
                (false, false) => self.mean_rank[a]
                    .total_cmp(&self.mean_rank[b])
                    .then(a.cmp(&b)),
            }
        });
        idx
    }

    pub fn method_index(&self, name: &str) -> Option<usize> {
        self.methods.iter().position(|m| m == name)
    }
}

/// Builds the rank table for one metric. Records of other metrics are
/// ignored; non-rankable metrics panic, they have no ordering to rank by.
pub fn rank(records: &[ScenarioRecord], metric: Metric) -> RankTable {
    assert!(metric.rankable(), "{} is reported, never ranked", metric.name());
    let relevant: Vec<&ScenarioRecord> =
        records.iter().filter(|r| r.metric == metric).collect();

    let mut methods: Vec<String> = Vec::new();
    for r in &relevant {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
    }

    // BTreeMap keeps scenario rows in a stable key order.
    let mut by_scenario: BTreeMap<String, Vec<&ScenarioRecord>> = BTreeMap::new();
    for r in &relevant {
        by_scenario.entry(r.scenario_key()).or_default().push(r);
    }

    let orientation = metric.orientation();
    let mut scenarios = Vec::new();
    let mut degenerate_scenarios = 0;
    for (key, group) in &by_scenario {
        let mut ranks: Vec<Option<f64>> = vec![None; methods.len()];
        let mut successes: Vec<(usize, f64)> = Vec::new();
        let mut failures: Vec<usize> = Vec::new();
        for r in group {
            let m = methods.iter().position(|name| name == &r.method).expect("method listed");
            match r.status {
                RecordStatus::Scored => {
                    successes.push((m, r.score.expect("scored record has a score")));
                }
                RecordStatus::Failed => failures.push(m),
                RecordStatus::Unscored => {}
            }
        }
        let degenerate = successes.is_empty();
        if degenerate {
            degenerate_scenarios += 1;
            for &m in &failures {
                ranks[m] = Some(1.0);
            }
        } else {
            let keyed: Vec<f64> = successes
                .iter()
                .map(|&(_, v)| match orientation {
                    Orientation::LowerBetter => v,
                    Orientation::HigherBetter => -v,
                })
                .collect();
            for (&(m, _), rank) in successes.iter().zip(stattest::fractional_ranks(&keyed)) {
                ranks[m] = Some(rank);
            }
            let failure_rank = successes.len() as f64 + 1.0;
            for &m in &failures {
                ranks[m] = Some(failure_rank);
            }
        }
        let sample = group[0];
        scenarios.push(ScenarioRankRow {
            dataset: sample.dataset.clone(),
            dataset_kind: sample.dataset_kind,
            key: key.clone(),
            ranks,
            degenerate,
        });
    }

    let mut mean_rank = vec![f64::NAN; methods.len()];
    let mut median_rank = vec![f64::NAN; methods.len()];
    let mut n_scenarios = vec![0usize; methods.len()];
    for (m, (mean, median)) in mean_rank.iter_mut().zip(&mut median_rank).enumerate() {
        let mut values: Vec<f64> =
            scenarios.iter().filter_map(|row| row.ranks[m]).collect();
        n_scenarios[m] = values.len();
        if values.is_empty() {
            continue;
        }
        *mean = values.iter().sum::<f64>() / values.len() as f64;
        values.sort_by(f64::total_cmp);
        let mid = values.len() / 2;
        *median = if values.len() % 2 == 1 {
            values[mid]
        } else {
            (values[mid - 1] + values[mid]) / 2.0
        };
    }

    RankTable {
        metric,
        methods,
        scenarios,
        mean_rank,
        median_rank,
        n_scenarios,
        degenerate_scenarios,
    }
}

/// Fraction of non-degenerate scenarios where at least one method of the
/// subset ranks k-th or better.
pub fn top_k_coverage(table: &RankTable, subset: &[usize], k: f64) -> f64 {
    let rows: Vec<&ScenarioRankRow> =
        table.scenarios.iter().filter(|row| !row.degenerate).collect();
    if rows.is_empty() {
        return 0.0;
    }
    let covered = rows
        .iter()
        .filter(|row| subset.iter().any(|&m| row.ranks[m].is_some_and(|r| r <= k)))
        .count();
    covered as f64 / rows.len() as f64
}

/// Greedy cover order: repeatedly add the method that lifts first-place
/// coverage the most. Returns (method index, cumulative coverage) pairs;
/// useful for picking a small portfolio of methods.
pub fn greedy_top1_order(table: &RankTable) -> Vec<(usize, f64)> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    let mut remaining: Vec<usize> = (0..table.methods.len()).collect();
    while !remaining.is_empty() {
        let (best_pos, best_cov) = remaining
            .iter()
            .enumerate()
            .map(|(pos, &m)| {
                let mut trial = chosen.clone();
                trial.push(m);
                (pos, top_k_coverage(table, &trial, 1.0))
            })
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("remaining is non-empty");
        let m = remaining.remove(best_pos);
        chosen.push(m);
        out.push((m, best_cov));
    }
    out
}
