//! Turns a record store into human-readable CSV tables plus a JSON
//! summary. Every rankable metric present gets rank tables pooled and per
//! dataset kind; failure and runtime tables aggregate per method.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::metrics::Metric;
use crate::validation::Verdict;

use super::rank::{greedy_top1_order, rank, RankTable};
use super::{DatasetKind, OrchestratorError, RecordStatus, ScenarioRecord};

#[derive(Debug, Clone, Serialize)]
pub struct ReportSummary {
    pub n_records: usize,
    pub n_work_units: usize,
    pub metrics: Vec<String>,
    pub methods: Vec<String>,
    pub files: Vec<PathBuf>,
    pub degenerate_scenarios: BTreeMap<String, usize>,
}

pub fn write_report(
    records: &[ScenarioRecord],
    out_dir: &Path,
) -> Result<ReportSummary, OrchestratorError> {
    if records.is_empty() {
        return Err(OrchestratorError::Config("store holds no records".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let mut degenerate = BTreeMap::new();

    let mut metrics: Vec<Metric> = Vec::new();
    for r in records {
        if r.metric.rankable() && !metrics.contains(&r.metric) {
            metrics.push(r.metric);
        }
    }

    for &metric in &metrics {
        let pooled = rank(records, metric);
        degenerate.insert(metric.name().to_string(), pooled.degenerate_scenarios);
        files.push(write_rank_table(out_dir, &pooled, "pooled")?);
        files.push(write_scenario_ranks(out_dir, &pooled)?);
        files.push(write_greedy(out_dir, &pooled)?);
        for (kind, scope) in
            [(DatasetKind::Numeric, "numeric"), (DatasetKind::Mixed, "mixed")]
        {
            let subset: Vec<ScenarioRecord> =
                records.iter().filter(|r| r.dataset_kind == kind).cloned().collect();
            if subset.iter().any(|r| r.metric == metric) {
                files.push(write_rank_table(out_dir, &rank(&subset, metric), scope)?);
            }
        }
    }

    let units = work_units(records);
    files.push(write_error_fractions(out_dir, &units)?);
    files.push(write_runtime(out_dir, &units)?);

    let mut methods: Vec<String> = Vec::new();
    for r in records {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
    }
    files.push(out_dir.join("summary.json"));
    let summary = ReportSummary {
        n_records: records.len(),
        n_work_units: units.len(),
        metrics: metrics.iter().map(|m| m.name().to_string()).collect(),
        methods,
        files,
        degenerate_scenarios: degenerate,
    };
    std::fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// One record per work unit (a method on a scenario); energy mode writes
/// one record per metric, all sharing verdict and duration.
fn work_units(records: &[ScenarioRecord]) -> Vec<&ScenarioRecord> {
    let mut seen = std::collections::HashSet::new();
    records.iter().filter(|r| seen.insert(r.work_key())).collect()
}

fn write_rank_table(
    out_dir: &Path,
    table: &RankTable,
    scope: &str,
) -> Result<PathBuf, OrchestratorError> {
    let path = out_dir.join(format!("rank_{}_{scope}.csv", table.metric.name()));
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(["method", "mean_rank", "median_rank", "n_scenarios"]).map_err(csv_err)?;
    for &m in &table.order_by_mean() {
        w.write_record([
            table.methods[m].as_str(),
            &format!("{:.4}", table.mean_rank[m]),
            &format!("{:.4}", table.median_rank[m]),
            &table.n_scenarios[m].to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(path)
}

fn write_scenario_ranks(out_dir: &Path, table: &RankTable) -> Result<PathBuf, OrchestratorError> {
    let path = out_dir.join(format!("scenario_ranks_{}.csv", table.metric.name()));
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    let mut header = vec!["scenario".to_string(), "dataset".into(), "degenerate".into()];
    header.extend(table.methods.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for row in &table.scenarios {
        let mut line = vec![row.key.clone(), row.dataset.clone(), row.degenerate.to_string()];
        line.extend(
            row.ranks
                .iter()
                .map(|r| r.map_or_else(String::new, |v| format!("{v:.1}"))),
        );
        w.write_record(&line).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(path)
}

fn write_greedy(out_dir: &Path, table: &RankTable) -> Result<PathBuf, OrchestratorError> {
    let path = out_dir.join(format!("topk_greedy_{}.csv", table.metric.name()));
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(["order", "method", "top1_coverage"]).map_err(csv_err)?;
    for (i, (m, coverage)) in greedy_top1_order(table).into_iter().enumerate() {
        w.write_record([
            &(i + 1).to_string(),
            table.methods[m].as_str(),
            &format!("{coverage:.4}"),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(path)
}

fn write_error_fractions(
    out_dir: &Path,
    units: &[&ScenarioRecord],
) -> Result<PathBuf, OrchestratorError> {
    const FAILURES: [Verdict; 5] = [
        Verdict::ComputationalError,
        Verdict::Timeout,
        Verdict::MissingRemained,
        Verdict::ModifiedObserved,
        Verdict::InvalidCategory,
    ];
    let path = out_dir.join("error_fractions.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    let mut header = vec!["method".to_string(), "n_units".into(), "n_failed".into(), "failure_fraction".into()];
    header.extend(FAILURES.iter().map(|v| v.name().to_string()));
    w.write_record(&header).map_err(csv_err)?;
    let mut by_method: BTreeMap<&str, Vec<&&ScenarioRecord>> = BTreeMap::new();
    for u in units {
        by_method.entry(u.method.as_str()).or_default().push(u);
    }
    for (method, group) in by_method {
        let n = group.len();
        let failed = group.iter().filter(|u| u.status == RecordStatus::Failed).count();
        let mut line = vec![
            method.to_string(),
            n.to_string(),
            failed.to_string(),
            format!("{:.4}", failed as f64 / n as f64),
        ];
        for v in FAILURES {
            line.push(group.iter().filter(|u| u.verdict == v).count().to_string());
        }
        w.write_record(&line).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(path)
}

fn write_runtime(
    out_dir: &Path,
    units: &[&ScenarioRecord],
) -> Result<PathBuf, OrchestratorError> {
    let path = out_dir.join("runtime.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
    w.write_record(["method", "n_units", "mean_secs", "total_secs"]).map_err(csv_err)?;
    let mut by_method: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for u in units {
        by_method.entry(u.method.as_str()).or_default().push(u.duration_secs);
    }
    for (method, secs) in by_method {
        let total: f64 = secs.iter().sum();
        w.write_record([
            method,
            &secs.len().to_string(),
            &format!("{:.4}", total / secs.len() as f64),
            &format!("{total:.4}"),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(path)
}

fn csv_err(e: csv::Error) -> OrchestratorError {
    OrchestratorError::Config(format!("csv write: {e}"))
}
