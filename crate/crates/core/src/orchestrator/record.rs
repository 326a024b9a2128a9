//! The unit the store holds: one metric value (or failure) for one method
//! on one scenario.

use serde::{Deserialize, Serialize};

use crate::amputation::Mechanism;
use crate::metrics::{Metric, Orientation};
use crate::validation::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Numeric,
    Mixed,
}

/// - `Scored`: the method succeeded and the metric is defined.
/// - `Failed`: the method failed; ranking penalizes it.
/// - `Unscored`: the method succeeded but this metric is undefined here
///   (for example MPE with a zero true value); ranking skips it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Scored,
    Failed,
    Unscored,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub dataset: String,
    pub dataset_kind: DatasetKind,
    pub method: String,
    /// None when scoring a dataset's own missingness.
    pub mechanism: Option<Mechanism>,
    pub proportion: Option<f64>,
    pub replicate: Option<u32>,
    pub metric: Metric,
    pub status: RecordStatus,
    pub score: Option<f64>,
    pub orientation: Orientation,
    pub verdict: Verdict,
    /// Error or skip reason; None on clean scores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub attempts: u32,
    pub duration_secs: f64,
}

impl ScenarioRecord {
    /// Groups the records of one (dataset, mechanism, proportion,
    /// replicate) cell; method and metric vary within a scenario.
    pub fn scenario_key(&self) -> String {
        format!(
            "{}|{}|{}|{}",
            self.dataset,
            self.mechanism.map_or_else(|| "-".to_string(), |m| m.to_string()),
            self.proportion.map_or_else(|| "-".to_string(), |p| p.to_bits().to_string()),
            self.replicate.map_or_else(|| "-".to_string(), |r| r.to_string()),
        )
    }

    /// Adds the method: identifies the work unit for resume.
    pub fn work_key(&self) -> String {
        format!("{}|{}", self.scenario_key(), self.method)
    }

    /// Structural invariants every record must satisfy.
    pub fn check_invariants(&self) -> Result<(), String> {
        match self.status {
            RecordStatus::Scored => {
                if self.score.is_none() {
                    return Err("scored record lacks a score".into());
                }
                if !self.verdict.is_success() {
                    return Err(format!("scored record carries verdict {}", self.verdict));
                }
            }
            RecordStatus::Failed => {
                if self.score.is_some() {
                    return Err("failed record carries a score".into());
                }
                if self.verdict.is_success() {
                    return Err("failed record carries a success verdict".into());
                }
            }
            RecordStatus::Unscored => {
                if self.score.is_some() {
                    return Err("unscored record carries a score".into());
                }
                if !self.verdict.is_success() {
                    return Err(format!(
                        "unscored means success without a defined metric, not {}",
                        self.verdict
                    ));
                }
            }
        }
        if let Some(s) = self.score {
            if !s.is_finite() {
                return Err(format!("non-finite score {s}"));
            }
        }
        Ok(())
    }
}
