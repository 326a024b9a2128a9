//! Benchmarking framework for missing-value imputation methods.
//!
//! The pipeline: take a complete dataset, knock cells out under a controlled
//! MCAR or MAR mechanism, run a suite of imputers over the incomplete copies,
//! validate each output, score it as a distributional prediction (energy
//! distance against ground truth, or an energy-based I-Score when no ground
//! truth exists), and aggregate scores into cross-scenario method ranks.

pub mod amputation;
pub mod data;
pub mod imputers;
pub mod metrics;
pub mod orchestrator;
pub mod seed;
pub mod stattest;
pub mod synth;
pub mod validation;

pub use amputation::{AmputationPlan, MarDependenceReport, MaskReplicate, Mechanism};
pub use data::{Cell, ColumnKind, ColumnSchema, Dataset, EncodedMatrix, SchemaConfig, StandardizationStats};
pub use imputers::{ImputationResult, ImputeError, ImputerKind, ImputerSpec};
pub use metrics::{IScoreConfig, Metric, Orientation, Score};
pub use orchestrator::{BenchmarkConfig, RankTable, ScenarioRecord};
pub use validation::Verdict;
