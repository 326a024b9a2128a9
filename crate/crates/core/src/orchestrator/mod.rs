//! The benchmark harness: expands a config into a scenario grid, runs it
//! in parallel, streams records into a JSON-lines store, and aggregates
//! ranks and reports from the store.

mod diagnostic;
mod rank;
mod record;
mod report;
mod runner;
mod store;

pub use diagnostic::{validate_method, DiagnosticCheck, DiagnosticReport};
pub use rank::{greedy_top1_order, rank, top_k_coverage, RankTable, ScenarioRankRow};
pub use record::{DatasetKind, RecordStatus, ScenarioRecord};
pub use report::{write_report, ReportSummary};
pub use runner::{run_benchmark, RunSummary};
pub use store::Store;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amputation::{AmputeError, Mechanism};
use crate::data::{DataError, Dataset, SchemaConfig};
use crate::imputers::{Hyperparams, ImputerKind};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("config error: {0}")]
    Config(String),
    #[error("dataset '{id}': {source}")]
    Dataset { id: String, source: DataError },
    #[error("data error: {0}")]
    Data(#[from] DataError),
    #[error("amputation error: {0}")]
    Ampute(#[from] AmputeError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("store line {line}: {source}")]
    StoreParse { line: usize, source: serde_json::Error },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which evaluation the run performs: `energy` scores against ground truth
/// on amputated complete data, `iscore` scores the datasets' own
/// missingness without ground truth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricMode {
    #[default]
    Energy,
    Iscore,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub id: String,
    pub csv: PathBuf,
    /// Schema TOML next to the data; omitted means every column is numeric.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodConfig {
    pub name: String,
    pub kind: ImputerKind,
    #[serde(flatten)]
    pub params: Hyperparams,
}

fn default_replicates() -> u32 {
    2
}

fn default_proportions() -> Vec<f64> {
    vec![0.1, 0.2, 0.3]
}

fn default_mechanisms() -> Vec<Mechanism> {
    vec![Mechanism::Mcar, Mechanism::Mar]
}

fn default_iscore_imputations() -> usize {
    20
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: u32,
    #[serde(default = "default_proportions")]
    pub proportions: Vec<f64>,
    #[serde(default = "default_mechanisms")]
    pub mechanisms: Vec<Mechanism>,
    #[serde(default)]
    pub metric: MetricMode,
    #[serde(default = "default_iscore_imputations")]
    pub iscore_imputations: usize,
    /// Worker threads; 0 keeps the global default.
    #[serde(default)]
    pub jobs: usize,
    pub datasets: Vec<DatasetConfig>,
    pub methods: Vec<MethodConfig>,
}

impl BenchmarkConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, OrchestratorError> {
        let cfg: BenchmarkConfig =
            toml::from_str(text).map_err(|e| OrchestratorError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Paths inside the file resolve relative to the file's directory.
    pub fn from_path(path: &Path) -> Result<Self, OrchestratorError> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(dir) = path.parent() {
            for ds in &mut cfg.datasets {
                if ds.csv.is_relative() {
                    ds.csv = dir.join(&ds.csv);
                }
                if let Some(schema) = &ds.schema {
                    if schema.is_relative() {
                        ds.schema = Some(dir.join(schema));
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    fn validate(&self) -> Result<(), OrchestratorError> {
        let fail = |msg: String| Err(OrchestratorError::Config(msg));
        if self.datasets.is_empty() {
            return fail("no datasets declared".into());
        }
        if self.methods.is_empty() {
            return fail("no methods declared".into());
        }
        if self.replicates == 0 {
            return fail("replicates must be at least 1".into());
        }
        let mut ids: Vec<&str> = self.datasets.iter().map(|d| d.id.as_str()).collect();
        ids.sort();
        ids.dedup();
        if ids.len() != self.datasets.len() {
            return fail("duplicate dataset ids".into());
        }
        let mut names: Vec<&str> = self.methods.iter().map(|m| m.name.as_str()).collect();
        names.sort();
        names.dedup();
        if names.len() != self.methods.len() {
            return fail("duplicate method names".into());
        }
        if self.metric == MetricMode::Energy {
            if self.mechanisms.is_empty() {
                return fail("energy mode needs at least one mechanism".into());
            }
            if self.proportions.is_empty() {
                return fail("energy mode needs at least one proportion".into());
            }
            for &p in &self.proportions {
                if !(p > 0.0 && p < 1.0) {
                    return fail(format!("proportion {p} must lie strictly between 0 and 1"));
                }
            }
        }
        if self.iscore_imputations < 2 {
            return fail("iscore_imputations must be at least 2".into());
        }
        for m in &self.methods {
            if m.kind == ImputerKind::External && m.params.command.is_none() {
                return fail(format!("external method '{}' declares no command", m.name));
            }
        }
        Ok(())
    }
}

/// A dataset loaded and classified for the run.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub id: String,
    pub data: Dataset,
    pub kind: DatasetKind,
}

/// Loads every dataset and checks it fits the chosen mode: energy needs
/// complete data to amputate, the I-Score needs genuine missingness.
pub fn load_datasets(config: &BenchmarkConfig) -> Result<Vec<LoadedDataset>, OrchestratorError> {
    let mut out = Vec::new();
    for ds in &config.datasets {
        let schema = match &ds.schema {
            Some(path) => SchemaConfig::from_path(path),
            None => numeric_schema_from_header(&ds.csv),
        }
        .map_err(|source| OrchestratorError::Dataset { id: ds.id.clone(), source })?;
        let data = crate::data::load_csv(&ds.csv, &schema)
            .map_err(|source| OrchestratorError::Dataset { id: ds.id.clone(), source })?;
        match config.metric {
            MetricMode::Energy if !data.is_complete() => {
                return Err(OrchestratorError::Config(format!(
                    "dataset '{}' has missing cells; energy mode amputates complete data",
                    ds.id
                )));
            }
            MetricMode::Iscore if data.is_complete() => {
                return Err(OrchestratorError::Config(format!(
                    "dataset '{}' is complete; iscore mode scores genuine missingness",
                    ds.id
                )));
            }
            _ => {}
        }
        let kind =
            if data.has_categorical() { DatasetKind::Mixed } else { DatasetKind::Numeric };
        out.push(LoadedDataset { id: ds.id.clone(), data, kind });
    }
    Ok(out)
}

fn numeric_schema_from_header(csv: &Path) -> Result<SchemaConfig, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .from_path(csv)
        .map_err(|e| DataError::Csv(format!("{}: {e}", csv.display())))?;
    let headers = reader.headers().map_err(|e| DataError::Csv(e.to_string()))?;
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    Ok(SchemaConfig::all_numeric(&names))
}
