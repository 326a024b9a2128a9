//! Grid expansion and parallel execution.
//!
//! Seeds are derived from the config seed by path-like keys, so every
//! scenario is reproducible in isolation and the mask for a grid cell does
//! not depend on which methods run. Records are appended to the store as
//! each work unit finishes; an interrupted run resumes by key.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use rayon::prelude::*;

use crate::amputation::{amputate, AmputationPlan, Mechanism};
use crate::data::Dataset;
use crate::imputers::ImputerSpec;
use crate::metrics::{
    energy_iscore_with, mpe, nrmse, standardized_energy_pipeline, IScoreConfig, Metric,
    MetricError,
};
use crate::seed;
use crate::validation::{run_with_retry, Verdict};

use super::{
    BenchmarkConfig, LoadedDataset, MethodConfig, MetricMode, OrchestratorError, RecordStatus,
    ScenarioRecord, Store,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub scenarios_run: usize,
    pub scenarios_skipped: usize,
    pub records_written: usize,
}

/// One work unit: a method on a grid cell (or on a dataset's own
/// missingness in iscore mode).
struct WorkItem<'a> {
    dataset: &'a LoadedDataset,
    method: &'a MethodConfig,
    /// None in iscore mode.
    cell: Option<GridCell<'a>>,
}

struct GridCell<'a> {
    mechanism: Mechanism,
    proportion: f64,
    replicate: u32,
    incomplete: &'a Dataset,
    mask: &'a [bool],
}

pub fn run_benchmark(
    config: &BenchmarkConfig,
    store: &Store,
    resume: bool,
) -> Result<RunSummary, OrchestratorError> {
    if store.exists() && !resume {
        return Err(OrchestratorError::Config(format!(
            "store {} already exists; resume it or choose a fresh path",
            store.path().display()
        )));
    }
    let datasets = super::load_datasets(config)?;
    let done = if resume { store.completed_work()? } else { Default::default() };

    // Masks are shared by every method on the same grid cell.
    let mut cells: HashMap<(usize, usize, usize, u32), (Dataset, Vec<bool>)> = HashMap::new();
    if config.metric == MetricMode::Energy {
        for (d, ds) in datasets.iter().enumerate() {
            for (m, &mechanism) in config.mechanisms.iter().enumerate() {
                for (p, &proportion) in config.proportions.iter().enumerate() {
                    let plan = build_plan(config, ds, mechanism, proportion)?;
                    for replicate in 0..config.replicates {
                        let rep = amputate(&ds.data, &plan, replicate)?;
                        let incomplete = rep.apply(&ds.data)?;
                        cells.insert((d, m, p, replicate), (incomplete, rep.mask));
                    }
                }
            }
        }
    }

    let mut items = Vec::new();
    match config.metric {
        MetricMode::Energy => {
            for (d, ds) in datasets.iter().enumerate() {
                for (m, &mechanism) in config.mechanisms.iter().enumerate() {
                    for (p, &proportion) in config.proportions.iter().enumerate() {
                        for replicate in 0..config.replicates {
                            let (incomplete, mask) = &cells[&(d, m, p, replicate)];
                            for method in &config.methods {
                                items.push(WorkItem {
                                    dataset: ds,
                                    method,
                                    cell: Some(GridCell {
                                        mechanism,
                                        proportion,
                                        replicate,
                                        incomplete,
                                        mask,
                                    }),
                                });
                            }
                        }
                    }
                }
            }
        }
        MetricMode::Iscore => {
            for ds in &datasets {
                for method in &config.methods {
                    items.push(WorkItem { dataset: ds, method, cell: None });
                }
            }
        }
    }

    let total = items.len();
    let pending: Vec<&WorkItem> =
        items.iter().filter(|item| !done.contains(&item_work_key(item))).collect();
    let skipped = total - pending.len();
    if skipped > 0 {
        log::info!("resume: {skipped} of {total} work units already in the store");
    }

    let sink = Arc::new(Mutex::new((store.clone(), 0usize)));
    let finished = AtomicUsize::new(0);
    let run_one = |item: &&WorkItem| -> Result<(), OrchestratorError> {
        let records = match &item.cell {
            Some(cell) => run_energy_item(config, item.dataset, item.method, cell),
            None => run_iscore_item(config, item.dataset, item.method),
        };
        let n = records.len();
        {
            let mut guard = sink.lock().expect("store sink lock");
            guard.0.append(&records)?;
            guard.1 += n;
        }
        let k = finished.fetch_add(1, Ordering::Relaxed) + 1;
        log::info!(
            "[{k}/{}] {} / {} done",
            pending.len(),
            item.dataset.id,
            item.method.name
        );
        Ok(())
    };
    pending.par_iter().try_for_each(run_one)?;

    let records_written = sink.lock().expect("store sink lock").1;
    Ok(RunSummary { scenarios_run: pending.len(), scenarios_skipped: skipped, records_written })
}

fn build_plan(
    config: &BenchmarkConfig,
    ds: &LoadedDataset,
    mechanism: Mechanism,
    proportion: f64,
) -> Result<AmputationPlan, OrchestratorError> {
    let plan_seed =
        seed::derive(config.seed, &format!("ampute/{}/{mechanism}/{proportion}", ds.id));
    Ok(match mechanism {
        Mechanism::Mcar => AmputationPlan::mcar(proportion, plan_seed),
        Mechanism::Mar => AmputationPlan::mar_default(ds.data.n_cols(), proportion, plan_seed)?,
    })
}

fn item_work_key(item: &WorkItem) -> String {
    let (mech, prop, rep) = match &item.cell {
        Some(c) => (
            c.mechanism.to_string(),
            c.proportion.to_bits().to_string(),
            c.replicate.to_string(),
        ),
        None => ("-".into(), "-".into(), "-".into()),
    };
    format!("{}|{mech}|{prop}|{rep}|{}", item.dataset.id, item.method.name)
}

fn impute_seed(config: &BenchmarkConfig, item_key: &str) -> u64 {
    seed::derive(config.seed, item_key)
}

fn base_record(
    ds: &LoadedDataset,
    method: &MethodConfig,
    cell: Option<&GridCell>,
    metric: Metric,
) -> ScenarioRecord {
    ScenarioRecord {
        dataset: ds.id.clone(),
        dataset_kind: ds.kind,
        method: method.name.clone(),
        mechanism: cell.map(|c| c.mechanism),
        proportion: cell.map(|c| c.proportion),
        replicate: cell.map(|c| c.replicate),
        metric,
        status: RecordStatus::Scored,
        score: None,
        orientation: metric.orientation(),
        verdict: Verdict::Success,
        detail: None,
        attempts: 1,
        duration_secs: 0.0,
    }
}

fn run_energy_item(
    config: &BenchmarkConfig,
    ds: &LoadedDataset,
    method: &MethodConfig,
    cell: &GridCell,
) -> Vec<ScenarioRecord> {
    let work_key = format!(
        "{}/{}/{}/{}/{}",
        ds.id, cell.mechanism, cell.proportion, cell.replicate, method.name
    );
    let spec = ImputerSpec {
        name: method.name.clone(),
        kind: method.kind,
        seed: impute_seed(config, &work_key),
        params: method.params.clone(),
    };
    let start = Instant::now();
    let outcome = run_with_retry(&spec, cell.incomplete);
    let duration_secs = start.elapsed().as_secs_f64();

    let metrics = [Metric::EnergyDistance, Metric::Nrmse, Metric::Mpe];
    let mut records = Vec::with_capacity(metrics.len());
    if outcome.verdict.is_success() {
        let imputed = &outcome.result.as_ref().expect("success carries a result").imputed;
        for metric in metrics {
            let mut rec = base_record(ds, method, Some(cell), metric);
            rec.attempts = outcome.attempts;
            rec.duration_secs = duration_secs;
            let value = match metric {
                Metric::EnergyDistance => {
                    standardized_energy_pipeline(&ds.data, imputed).map(|s| Some(s.value))
                }
                Metric::Nrmse => nrmse(&ds.data, imputed, cell.mask).map(|s| Some(s.value)),
                Metric::Mpe => mpe(&ds.data, imputed, cell.mask).map(|o| o.map(|s| s.value)),
                Metric::EnergyIscore => unreachable!("not an energy-mode metric"),
            };
            match value {
                Ok(Some(v)) => rec.score = Some(v),
                Ok(None) => {
                    rec.status = RecordStatus::Unscored;
                    rec.detail = Some("undefined: a true value is zero".into());
                }
                Err(e) => {
                    rec.status = RecordStatus::Unscored;
                    rec.detail = Some(e.to_string());
                }
            }
            records.push(rec);
        }
    } else {
        for metric in metrics {
            let mut rec = base_record(ds, method, Some(cell), metric);
            rec.status = RecordStatus::Failed;
            rec.verdict = outcome.verdict;
            rec.detail = outcome.error.clone().or_else(|| Some(outcome.verdict.to_string()));
            rec.attempts = outcome.attempts;
            rec.duration_secs = duration_secs;
            records.push(rec);
        }
    }
    records
}

fn run_iscore_item(
    config: &BenchmarkConfig,
    ds: &LoadedDataset,
    method: &MethodConfig,
) -> Vec<ScenarioRecord> {
    let spec = ImputerSpec {
        name: method.name.clone(),
        kind: method.kind,
        seed: impute_seed(config, &format!("{}/-/-/-/{}", ds.id, method.name)),
        params: method.params.clone(),
    };
    let cfg = IScoreConfig {
        n_imputations: config.iscore_imputations,
        // Shared across methods: every method hides the same cells.
        split_seed: seed::derive(config.seed, &format!("iscore-split/{}", ds.id)),
    };
    let start = Instant::now();
    let mut attempts = 1;
    let mut outcome = energy_iscore_with(&ds.data, &spec, spec.seed, &cfg);
    if matches!(&outcome, Err(MetricError::Impute(e)) if !e.is_timeout()) {
        attempts = 2;
        outcome = energy_iscore_with(&ds.data, &spec, spec.seed.wrapping_add(1), &cfg);
    }
    let duration_secs = start.elapsed().as_secs_f64();

    let mut rec = base_record(ds, method, None, Metric::EnergyIscore);
    rec.attempts = attempts;
    rec.duration_secs = duration_secs;
    match outcome {
        Ok(breakdown) => {
            rec.score = Some(breakdown.overall.value);
        }
        Err(MetricError::Impute(e)) => {
            rec.status = RecordStatus::Failed;
            rec.verdict =
                if e.is_timeout() { Verdict::Timeout } else { Verdict::ComputationalError };
            rec.detail = Some(e.to_string());
        }
        Err(MetricError::IncompleteDraw { col }) => {
            rec.status = RecordStatus::Failed;
            rec.verdict = Verdict::MissingRemained;
            rec.detail = Some(format!("draws left column {col} missing"));
        }
        Err(e) => {
            rec.status = RecordStatus::Unscored;
            rec.detail = Some(e.to_string());
        }
    }
    vec![rec]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imputers::{Hyperparams, ImputerKind};
    use crate::orchestrator::{DatasetConfig, DatasetKind};
    use crate::synth;

    fn desk_config(dir: &std::path::Path, methods: &[(&str, ImputerKind)]) -> BenchmarkConfig {
        let bundle = synth::write_bundle(dir, 5).unwrap();
        BenchmarkConfig {
            seed: 11,
            replicates: 1,
            proportions: vec![0.2],
            mechanisms: vec![Mechanism::Mcar],
            metric: MetricMode::Energy,
            iscore_imputations: 4,
            jobs: 0,
            datasets: bundle
                .iter()
                .take(1)
                .map(|b| DatasetConfig {
                    id: b.id.clone(),
                    csv: b.csv.clone(),
                    schema: Some(b.schema.clone()),
                })
                .collect(),
            methods: methods
                .iter()
                .map(|&(name, kind)| MethodConfig {
                    name: name.into(),
                    kind,
                    params: Hyperparams::default(),
                })
                .collect(),
        }
    }

    #[test]
    fn energy_run_writes_three_records_per_work_unit() {
        let dir = tempfile::tempdir().unwrap();
        let config =
            desk_config(dir.path(), &[("mean", ImputerKind::Mean), ("pmm", ImputerKind::Pmm)]);
        let store = Store::new(dir.path().join("run.jsonl"));
        let summary = run_benchmark(&config, &store, false).unwrap();
        assert_eq!(summary.scenarios_run, 2);
        assert_eq!(summary.records_written, 6);
        let records = store.load().unwrap();
        assert_eq!(records.len(), 6);
        for r in &records {
            r.check_invariants().unwrap();
            assert_eq!(r.mechanism, Some(Mechanism::Mcar));
        }
        let energy: Vec<_> =
            records.iter().filter(|r| r.metric == Metric::EnergyDistance).collect();
        assert_eq!(energy.len(), 2);
        assert!(energy.iter().all(|r| r.status == RecordStatus::Scored));
    }

    #[test]
    fn reruns_produce_identical_scores_and_resume_skips_done_work() {
        let dir = tempfile::tempdir().unwrap();
        let config = desk_config(dir.path(), &[("norm", ImputerKind::Norm)]);
        let store_a = Store::new(dir.path().join("a.jsonl"));
        let store_b = Store::new(dir.path().join("b.jsonl"));
        run_benchmark(&config, &store_a, false).unwrap();
        run_benchmark(&config, &store_b, false).unwrap();
        // Records land in completion order, so compare after keying.
        let sorted = |records: Vec<ScenarioRecord>| {
            let mut v = records;
            v.sort_by_key(|r| (r.work_key(), format!("{:?}", r.metric)));
            v
        };
        let a = sorted(store_a.load().unwrap());
        let b = sorted(store_b.load().unwrap());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.work_key(), y.work_key());
            assert_eq!(x.metric, y.metric);
            assert_eq!(x.score, y.score, "{} {:?}", x.method, x.metric);
            assert_eq!(x.verdict, y.verdict);
        }
        let resumed = run_benchmark(&config, &store_a, true).unwrap();
        assert_eq!(resumed.scenarios_run, 0);
        assert_eq!(resumed.scenarios_skipped, 1);
        assert_eq!(store_a.load().unwrap().len(), a.len());
    }

    #[test]
    fn existing_store_without_resume_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let config = desk_config(dir.path(), &[("mean", ImputerKind::Mean)]);
        let store = Store::new(dir.path().join("run.jsonl"));
        run_benchmark(&config, &store, false).unwrap();
        assert!(matches!(
            run_benchmark(&config, &store, false),
            Err(OrchestratorError::Config(_))
        ));
    }

    #[test]
    fn unsupported_data_becomes_failure_records() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = synth::write_bundle(dir.path(), 5).unwrap();
        let mixed = bundle.iter().find(|b| b.id == "mixedcat").unwrap();
        let mut config = desk_config(dir.path(), &[("mean", ImputerKind::Mean)]);
        config.datasets = vec![DatasetConfig {
            id: mixed.id.clone(),
            csv: mixed.csv.clone(),
            schema: Some(mixed.schema.clone()),
        }];
        let store = Store::new(dir.path().join("run.jsonl"));
        run_benchmark(&config, &store, false).unwrap();
        let records = store.load().unwrap();
        assert_eq!(records.len(), 3);
        for r in &records {
            assert_eq!(r.status, RecordStatus::Failed);
            assert_eq!(r.verdict, Verdict::ComputationalError);
            assert_eq!(r.dataset_kind, DatasetKind::Mixed);
        }
    }

    #[test]
    fn iscore_mode_scores_incomplete_datasets() {
        let dir = tempfile::tempdir().unwrap();
        let complete = synth::gaussian_factors(300, 3);
        let plan = AmputationPlan::mcar(0.15, 9);
        let holed = amputate(&complete, &plan, 0).unwrap().apply(&complete).unwrap();
        let csv = dir.path().join("holed.csv");
        let schema_path = dir.path().join("holed.schema.toml");
        let schema = crate::data::SchemaConfig::for_dataset(&holed);
        crate::data::write_csv(&holed, &csv, &schema.missing_token).unwrap();
        std::fs::write(&schema_path, schema.to_toml_string()).unwrap();
        let config = BenchmarkConfig {
            seed: 21,
            replicates: 1,
            proportions: vec![0.1],
            mechanisms: vec![Mechanism::Mcar],
            metric: MetricMode::Iscore,
            iscore_imputations: 4,
            jobs: 0,
            datasets: vec![DatasetConfig {
                id: "holed".into(),
                csv,
                schema: Some(schema_path),
            }],
            methods: vec![
                MethodConfig {
                    name: "mean".into(),
                    kind: ImputerKind::Mean,
                    params: Hyperparams::default(),
                },
                MethodConfig {
                    name: "norm".into(),
                    kind: ImputerKind::Norm,
                    params: Hyperparams::default(),
                },
            ],
        };
        let store = Store::new(dir.path().join("run.jsonl"));
        let summary = run_benchmark(&config, &store, false).unwrap();
        assert_eq!(summary.records_written, 2);
        let records = store.load().unwrap();
        for r in &records {
            assert_eq!(r.metric, Metric::EnergyIscore);
            assert_eq!(r.status, RecordStatus::Scored);
            assert!(r.mechanism.is_none());
            let score = r.score.unwrap();
            assert!(score <= 0.0 && score > -5.0, "{}: {score}", r.method);
        }
        // The proper draw should beat the point mass.
        let norm = records.iter().find(|r| r.method == "norm").unwrap().score.unwrap();
        let mean = records.iter().find(|r| r.method == "mean").unwrap().score.unwrap();
        assert!(norm > mean, "norm {norm} should beat mean {mean}");
    }
}
