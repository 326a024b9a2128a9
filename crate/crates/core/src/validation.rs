//! Output validation: classifies every imputation attempt into exactly one
//! verdict, and wraps the single-retry policy for crashed runs.
//!
//! Checks run in a fixed order so mixed defects classify deterministically:
//! process failure, then leftover missing cells, then modified observed
//! cells, then invalid categories. Only the first hit counts.

use serde::{Deserialize, Serialize};

use crate::data::{Cell, Dataset};
use crate::imputers::{self, ImputationResult, ImputeError, ImputerSpec};

/// Observed numeric cells may drift by strictly less than this before the
/// run counts as having modified its inputs; covers printf-in, parse-out
/// round trips through external tools.
pub const MODIFIED_TOLERANCE: f64 = 1.5e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Success,
    ComputationalError,
    Timeout,
    MissingRemained,
    ModifiedObserved,
    InvalidCategory,
}

impl Verdict {
    pub fn is_success(self) -> bool {
        self == Verdict::Success
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Success => "success",
            Verdict::ComputationalError => "computational_error",
            Verdict::Timeout => "timeout",
            Verdict::MissingRemained => "missing_remained",
            Verdict::ModifiedObserved => "modified_observed",
            Verdict::InvalidCategory => "invalid_category",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Classifies one imputation attempt.
pub fn validate(incomplete: &Dataset, outcome: &Result<ImputationResult, ImputeError>) -> Verdict {
    match outcome {
        Err(e) if e.is_timeout() => Verdict::Timeout,
        Err(_) => Verdict::ComputationalError,
        Ok(result) => validate_result(incomplete, result),
    }
}

fn validate_result(incomplete: &Dataset, result: &ImputationResult) -> Verdict {
    let imputed = &result.imputed;
    if imputed.n_rows() != incomplete.n_rows() || imputed.n_cols() != incomplete.n_cols() {
        return Verdict::ComputationalError;
    }
    if imputed.missing_count() > 0 {
        return Verdict::MissingRemained;
    }
    let violation_at = |r: usize, c: usize| {
        result.category_violations.iter().any(|v| v.row == r && v.col == c)
    };
    for r in 0..incomplete.n_rows() {
        for c in 0..incomplete.n_cols() {
            let original = incomplete.get(r, c);
            if original.is_missing() {
                continue;
            }
            if violation_at(r, c) {
                return Verdict::ModifiedObserved;
            }
            match (original, imputed.get(r, c)) {
                (Cell::Num(a), Cell::Num(b)) => {
                    if (a - b).abs() >= MODIFIED_TOLERANCE {
                        return Verdict::ModifiedObserved;
                    }
                }
                (Cell::Cat(a), Cell::Cat(b)) => {
                    if a != b {
                        return Verdict::ModifiedObserved;
                    }
                }
                _ => return Verdict::ModifiedObserved,
            }
        }
    }
    if !result.category_violations.is_empty() {
        return Verdict::InvalidCategory;
    }
    Verdict::Success
}

/// Outcome of an imputation run including the retry bookkeeping.
#[derive(Debug)]
pub struct RunOutcome {
    pub verdict: Verdict,
    pub result: Option<ImputationResult>,
    pub attempts: u32,
    /// Error text when the process itself failed.
    pub error: Option<String>,
}

/// Runs the imputer, validating the output; a `ComputationalError` gets one
/// second chance with an offset seed. Timeouts and rule violations do not:
/// a second identical run would burn the budget or fail the same way.
pub fn run_with_retry(spec: &ImputerSpec, incomplete: &Dataset) -> RunOutcome {
    let first = imputers::impute(spec, incomplete);
    let verdict = validate(incomplete, &first);
    if verdict != Verdict::ComputationalError {
        return RunOutcome {
            verdict,
            error: first.as_ref().err().map(|e| e.to_string()),
            result: first.ok().map(|mut r| {
                r.attempts = 1;
                r
            }),
            attempts: 1,
        };
    }
    let second = imputers::impute_with_seed(spec, incomplete, spec.seed.wrapping_add(1));
    let verdict = validate(incomplete, &second);
    RunOutcome {
        verdict,
        error: second.as_ref().err().map(|e| e.to_string()),
        result: second.ok().map(|mut r| {
            r.attempts = 2;
            r
        }),
        attempts: 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnKind, ColumnSchema};
    use crate::imputers::{CellRef, ImputerKind};
    use std::time::Duration;

    fn incomplete_mixed() -> Dataset {
        let schema = vec![
            ColumnSchema::numeric("a"),
            ColumnSchema::categorical("g", vec!["u".into(), "v".into()]),
        ];
        let cells = vec![
            Cell::Num(0.0),
            Cell::Cat(0),
            Cell::Missing,
            Cell::Cat(1),
            Cell::Num(2.0),
            Cell::Missing,
        ];
        Dataset::new(schema, cells).unwrap()
    }

    fn completed(ds: &Dataset) -> Dataset {
        let mut out = ds.clone();
        for r in 0..out.n_rows() {
            for c in 0..out.n_cols() {
                if out.is_missing(r, c) {
                    let fill = match out.column(c).kind {
                        ColumnKind::Numeric => Cell::Num(1.0),
                        ColumnKind::Categorical => Cell::Cat(0),
                    };
                    out.set(r, c, fill);
                }
            }
        }
        out
    }

    fn result_for(imputed: Dataset) -> ImputationResult {
        ImputationResult {
            imputed,
            duration: Duration::from_millis(1),
            attempts: 1,
            draws: Vec::new(),
            category_violations: Vec::new(),
        }
    }

    #[test]
    fn clean_fill_is_success() {
        let inc = incomplete_mixed();
        let res = Ok(result_for(completed(&inc)));
        assert_eq!(validate(&inc, &res), Verdict::Success);
    }

    #[test]
    fn leftover_missing_wins_over_everything_downstream() {
        let inc = incomplete_mixed();
        let mut out = completed(&inc);
        out.set(1, 0, Cell::Missing);
        // Also modify an observed cell: missing-remained is checked first.
        out.set(0, 0, Cell::Num(50.0));
        let res = Ok(result_for(out));
        assert_eq!(validate(&inc, &res), Verdict::MissingRemained);
    }

    #[test]
    fn modified_observed_boundary_is_strict() {
        let inc = incomplete_mixed();
        for (delta, expected) in [
            (1e-6, Verdict::Success),
            (MODIFIED_TOLERANCE, Verdict::ModifiedObserved),
            (1e-4, Verdict::ModifiedObserved),
        ] {
            let mut out = completed(&inc);
            // Observed cell (0,0) holds 0.0, so the delta survives exactly.
            out.set(0, 0, Cell::Num(delta));
            let res = Ok(result_for(out));
            assert_eq!(validate(&inc, &res), expected, "delta {delta}");
        }
    }

    #[test]
    fn changed_observed_category_is_modified() {
        let inc = incomplete_mixed();
        let mut out = completed(&inc);
        out.set(1, 1, Cell::Cat(0));
        let res = Ok(result_for(out));
        assert_eq!(validate(&inc, &res), Verdict::ModifiedObserved);
    }

    #[test]
    fn invalid_category_at_masked_cell() {
        let inc = incomplete_mixed();
        let mut res = result_for(completed(&inc));
        res.category_violations.push(CellRef { row: 2, col: 1 });
        assert_eq!(validate(&inc, &Ok(res)), Verdict::InvalidCategory);
    }

    #[test]
    fn invalid_category_at_observed_cell_counts_as_modified() {
        let inc = incomplete_mixed();
        let mut res = result_for(completed(&inc));
        res.category_violations.push(CellRef { row: 1, col: 1 });
        assert_eq!(validate(&inc, &Ok(res)), Verdict::ModifiedObserved);
    }

    #[test]
    fn process_failures_map_to_their_verdicts() {
        let inc = incomplete_mixed();
        let timeout: Result<ImputationResult, _> =
            Err(ImputeError::Timeout(Duration::from_secs(1)));
        assert_eq!(validate(&inc, &timeout), Verdict::Timeout);
        let crash: Result<ImputationResult, _> =
            Err(ImputeError::External("exit 1".into()));
        assert_eq!(validate(&inc, &crash), Verdict::ComputationalError);
    }

    #[test]
    fn retry_is_not_triggered_on_success() {
        let schema = vec![ColumnSchema::numeric("a")];
        let cells = vec![Cell::Num(1.0), Cell::Missing, Cell::Num(3.0)];
        let ds = Dataset::new(schema, cells).unwrap();
        let spec = ImputerSpec::new("mean", ImputerKind::Mean, 1);
        let out = run_with_retry(&spec, &ds);
        assert_eq!(out.verdict, Verdict::Success);
        assert_eq!(out.attempts, 1);
        assert_eq!(out.result.unwrap().attempts, 1);
    }

    #[test]
    fn computational_error_gets_exactly_one_retry() {
        // An all-missing second column fails every attempt; the outcome
        // must report two attempts and still be a computational error.
        let schema = vec![ColumnSchema::numeric("a"), ColumnSchema::numeric("b")];
        let cells = vec![
            Cell::Num(1.0),
            Cell::Missing,
            Cell::Num(2.0),
            Cell::Missing,
        ];
        let ds = Dataset::new(schema, cells).unwrap();
        let spec = ImputerSpec::new("mean", ImputerKind::Mean, 1);
        let out = run_with_retry(&spec, &ds);
        assert_eq!(out.verdict, Verdict::ComputationalError);
        assert_eq!(out.attempts, 2);
        assert!(out.error.is_some());
    }
}
