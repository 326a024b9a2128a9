//! The imputer suite: simple column fills, k-nearest-neighbour, linear-model
//! variants, predictive mean matching, CART, all driven through a fully
//! conditional specification engine where chained equations apply, plus a
//! subprocess adapter for external methods.

mod cart;
mod external;
mod fcs;
mod knn;
mod linear;
mod pmm;
mod simple;

pub use cart::Tree;
pub use external::{read_wire_csv, write_wire_csv, WIRE_MISSING_TOKEN};
pub use fcs::ConditionalModel;

use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Dataset};
use crate::seed;

#[derive(Debug, Error)]
pub enum ImputeError {
    #[error("{0:?} does not support categorical columns")]
    UnsupportedData(ImputerKind),
    #[error("dataset has no missing cells; nothing to impute")]
    NoMissing,
    #[error("column '{0}' has no observed values to learn from")]
    EmptyColumn(String),
    #[error("row {0} shares no observed dimension with any donor row")]
    NoDonor(usize),
    #[error("too few rows with observed '{col}': have {have}, need {need}")]
    TooFewRows { col: String, have: usize, need: usize },
    #[error("model fit failed on column '{col}': {reason}")]
    FitFailed { col: String, reason: String },
    #[error("external imputer spec has no command")]
    NoCommand,
    #[error("external imputer failed: {0}")]
    External(String),
    #[error("external imputer exceeded the {}s time limit", .0.as_secs())]
    Timeout(Duration),
    #[error("data error: {0}")]
    Data(#[from] DataError),
}

impl ImputeError {
    pub fn is_timeout(&self) -> bool {
        matches!(self, ImputeError::Timeout(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputerKind {
    Mean,
    Median,
    Zero,
    Random,
    Knn,
    Norm,
    NormNob,
    NormPredict,
    Pmm,
    CartFcs,
    External,
}

impl ImputerKind {
    /// Whether the method can handle categorical columns at all. For
    /// External this is only the default; the spec may override it.
    pub fn default_supports_categorical(self) -> bool {
        match self {
            ImputerKind::Mean
            | ImputerKind::Zero
            | ImputerKind::Norm
            | ImputerKind::NormNob
            | ImputerKind::NormPredict => false,
            ImputerKind::Median
            | ImputerKind::Random
            | ImputerKind::Knn
            | ImputerKind::Pmm
            | ImputerKind::CartFcs => true,
            ImputerKind::External => false,
        }
    }

    /// Kinds whose output is a deterministic function of (spec, data):
    /// multiple imputation repeats the one result.
    pub fn is_deterministic(self) -> bool {
        matches!(
            self,
            ImputerKind::Mean
                | ImputerKind::Median
                | ImputerKind::Zero
                | ImputerKind::Knn
                | ImputerKind::NormPredict
        )
    }
}

/// Tuning knobs; every field has the suite default baked in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    /// Neighbour count for KNN.
    pub k: usize,
    /// Donor pool size for PMM matching.
    pub donors: usize,
    /// Sweeps of the conditional-specification loop.
    pub iterations: usize,
    /// Smallest admissible CART leaf.
    pub min_leaf: usize,
    /// External only: program plus leading args, whitespace-separated.
    pub command: Option<String>,
    /// External only: wall-clock budget per invocation.
    pub timeout_secs: u64,
    /// External only: whether the command handles categorical columns.
    pub supports_categorical: Option<bool>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            k: 5,
            donors: 5,
            iterations: 5,
            min_leaf: 5,
            command: None,
            timeout_secs: 300,
            supports_categorical: None,
        }
    }
}

/// A fully specified imputation method instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputerSpec {
    pub name: String,
    pub kind: ImputerKind,
    pub seed: u64,
    #[serde(default)]
    pub params: Hyperparams,
}

impl ImputerSpec {
    pub fn new(name: impl Into<String>, kind: ImputerKind, seed: u64) -> Self {
        ImputerSpec { name: name.into(), kind, seed, params: Hyperparams::default() }
    }

    pub fn supports_categorical(&self) -> bool {
        self.params
            .supports_categorical
            .unwrap_or_else(|| self.kind.default_supports_categorical())
    }

    /// Copy of this spec with a different seed; used for retries and draws.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.seed = seed;
        s
    }
}

/// Location of one cell, for reporting rule violations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRef {
    pub row: usize,
    pub col: usize,
}

/// Output of one imputation call.
#[derive(Debug, Clone)]
pub struct ImputationResult {
    pub imputed: Dataset,
    pub duration: Duration,
    /// Attempts consumed; `impute` itself always reports 1, the retry
    /// wrapper overwrites it.
    pub attempts: u32,
    /// Multiple-imputation draws; empty for a single call.
    pub draws: Vec<Dataset>,
    /// Cells where an external method emitted a value outside the column's
    /// category set. Kept out-of-band so the verdict ordering can apply.
    pub category_violations: Vec<CellRef>,
}

/// Runs the method once with the seed from the spec.
pub fn impute(spec: &ImputerSpec, incomplete: &Dataset) -> Result<ImputationResult, ImputeError> {
    impute_with_seed(spec, incomplete, spec.seed)
}

/// Runs the method once with an explicit seed (retries offset it).
pub fn impute_with_seed(
    spec: &ImputerSpec,
    incomplete: &Dataset,
    seed: u64,
) -> Result<ImputationResult, ImputeError> {
    let start = Instant::now();
    if incomplete.missing_count() == 0 {
        return Err(ImputeError::NoMissing);
    }
    if incomplete.has_categorical() && !spec.supports_categorical() {
        return Err(ImputeError::UnsupportedData(spec.kind));
    }
    let mut rng: ChaCha8Rng = rand::SeedableRng::seed_from_u64(seed);
    let mut category_violations = Vec::new();
    let imputed = match spec.kind {
        ImputerKind::Mean => simple::impute_mean(incomplete)?,
        ImputerKind::Median => simple::impute_median(incomplete)?,
        ImputerKind::Zero => simple::impute_zero(incomplete)?,
        ImputerKind::Random => simple::impute_random(incomplete, &mut rng)?,
        ImputerKind::Knn => knn::impute_knn(incomplete, spec.params.k)?,
        ImputerKind::Norm => {
            fcs::run(incomplete, ConditionalModel::Norm, &spec.params, &mut rng)?
        }
        ImputerKind::NormNob => {
            fcs::run(incomplete, ConditionalModel::NormNob, &spec.params, &mut rng)?
        }
        ImputerKind::NormPredict => {
            fcs::run(incomplete, ConditionalModel::NormPredict, &spec.params, &mut rng)?
        }
        ImputerKind::Pmm => fcs::run(incomplete, ConditionalModel::Pmm, &spec.params, &mut rng)?,
        ImputerKind::CartFcs => {
            fcs::run(incomplete, ConditionalModel::Cart, &spec.params, &mut rng)?
        }
        ImputerKind::External => {
            let (ds, violations) = external::run(spec, incomplete, seed)?;
            category_violations = violations;
            ds
        }
    };
    // Built-ins write only masked cells; external output is judged by the
    // validation tolerance instead.
    debug_assert!(
        spec.kind == ImputerKind::External || observed_cells_preserved(incomplete, &imputed),
        "a built-in imputer touched an observed cell"
    );
    Ok(ImputationResult {
        imputed,
        duration: start.elapsed(),
        attempts: 1,
        draws: Vec::new(),
        category_violations,
    })
}

/// Draws m imputations. Stochastic kinds get one derived seed per draw;
/// deterministic kinds run once and repeat the result.
pub fn impute_multiple(
    spec: &ImputerSpec,
    incomplete: &Dataset,
    m: usize,
) -> Result<ImputationResult, ImputeError> {
    assert!(m >= 1, "need at least one draw");
    let start = Instant::now();
    let mut draws = Vec::with_capacity(m);
    let mut category_violations = Vec::new();
    if spec.kind.is_deterministic() {
        let one = impute_with_seed(spec, incomplete, spec.seed)?;
        category_violations = one.category_violations;
        draws.extend(std::iter::repeat_n(one.imputed, m));
    } else {
        for i in 0..m {
            let one = impute_with_seed(spec, incomplete, seed::mix(spec.seed, i as u64))?;
            if i == 0 {
                category_violations = one.category_violations;
            }
            draws.push(one.imputed);
        }
    }
    Ok(ImputationResult {
        imputed: draws[0].clone(),
        duration: start.elapsed(),
        attempts: 1,
        draws,
        category_violations,
    })
}

/// Imputers must never touch observed cells; checked in debug builds on
/// every call. External outputs are exempt at the cell level (validation
/// classifies those), so this compares only cells the input had observed
/// and the built-in path wrote through `Dataset::set`.
fn observed_cells_preserved(before: &Dataset, after: &Dataset) -> bool {
    if before.n_rows() != after.n_rows() || before.n_cols() != after.n_cols() {
        return false;
    }
    for r in 0..before.n_rows() {
        for c in 0..before.n_cols() {
            let orig = before.get(r, c);
            if !orig.is_missing() && !cells_bit_equal(orig, after.get(r, c)) {
                return false;
            }
        }
    }
    true
}

fn cells_bit_equal(a: crate::data::Cell, b: crate::data::Cell) -> bool {
    use crate::data::Cell;
    match (a, b) {
        (Cell::Num(x), Cell::Num(y)) => x.to_bits() == y.to_bits(),
        (Cell::Cat(x), Cell::Cat(y)) => x == y,
        (Cell::Missing, Cell::Missing) => true,
        _ => false,
    }
}
