//! Scoring: energy distance against ground truth, pointwise NRMSE and MPE,
//! and the energy-based I-Score for data with genuine missingness.

mod energy;
mod iscore;
mod pointwise;

pub use energy::{energy_distance, standardized_energy_pipeline};
pub use iscore::{
    energy_iscore, energy_iscore_with, ColumnIScore, DrawSampler, IScoreBreakdown, IScoreConfig,
    Projection,
};
pub use pointwise::{mpe, nrmse};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("data error: {0}")]
    Data(#[from] crate::data::DataError),
    #[error("matrices must share a shape: {0}")]
    ShapeMismatch(String),
    #[error("no masked numeric cells to score")]
    NothingMasked,
    #[error("dataset has no missing cells, so there is nothing to judge an imputer on")]
    NoMissingness,
    #[error("every candidate column lost its test split; score undefined")]
    EmptyProjection,
    #[error("an imputation draw left column {col} missing at a scored cell")]
    IncompleteDraw { col: usize },
    #[error("imputation inside the score failed: {0}")]
    Impute(#[from] crate::imputers::ImputeError),
}

/// Which way a score orders methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    LowerBetter,
    HigherBetter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    EnergyDistance,
    Nrmse,
    Mpe,
    EnergyIscore,
}

impl Metric {
    pub fn orientation(self) -> Orientation {
        match self {
            Metric::EnergyDistance | Metric::Nrmse => Orientation::LowerBetter,
            // MPE is signed; it is reported, never ranked.
            Metric::Mpe => Orientation::LowerBetter,
            Metric::EnergyIscore => Orientation::HigherBetter,
        }
    }

    /// Whether method ranks may be computed from this metric.
    pub fn rankable(self) -> bool {
        !matches!(self, Metric::Mpe)
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::EnergyDistance => "energy_distance",
            Metric::Nrmse => "nrmse",
            Metric::Mpe => "mpe",
            Metric::EnergyIscore => "energy_iscore",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "energy_distance" | "energy" => Ok(Metric::EnergyDistance),
            "nrmse" => Ok(Metric::Nrmse),
            "mpe" => Ok(Metric::Mpe),
            "energy_iscore" | "iscore" => Ok(Metric::EnergyIscore),
            other => Err(format!("unknown metric '{other}'")),
        }
    }
}

/// One scored quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub metric: Metric,
    pub value: f64,
    pub orientation: Orientation,
}

impl Score {
    pub fn new(metric: Metric, value: f64) -> Self {
        Score { metric, value, orientation: metric.orientation() }
    }
}
