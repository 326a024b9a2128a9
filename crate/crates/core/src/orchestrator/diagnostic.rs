//! Pre-benchmark protocol check for external commands. Runs the command
//! on tiny fixtures and reports which contract rules it honors, so a
//! method author sees "modifies observed values" before burning a grid
//! run on it.

use crate::data::{Cell, ColumnSchema, Dataset};
use crate::imputers::{self, Hyperparams, ImputerKind, ImputerSpec};
use crate::validation::MODIFIED_TOLERANCE;

#[derive(Debug, Clone)]
pub struct DiagnosticCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct DiagnosticReport {
    pub checks: Vec<DiagnosticCheck>,
}

impl DiagnosticReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn numeric_fixture() -> Dataset {
    let schema = vec![
        ColumnSchema::numeric("x"),
        ColumnSchema::numeric("y"),
        ColumnSchema::numeric("z"),
    ];
    let masked = [(0, 0), (3, 1), (5, 2), (7, 0), (9, 1)];
    let mut cells = Vec::new();
    for i in 0..12 {
        let x = i as f64;
        for (j, v) in [x, 2.0 * x + 3.0, 0.1 * x * x + 1.0].into_iter().enumerate() {
            if masked.contains(&(i, j)) {
                cells.push(Cell::Missing);
            } else {
                cells.push(Cell::Num(v));
            }
        }
    }
    Dataset::new(schema, cells).expect("fixture is valid")
}

fn mixed_fixture() -> Dataset {
    let schema = vec![
        ColumnSchema::numeric("x"),
        ColumnSchema::categorical("g", vec!["a".into(), "b".into(), "c".into()]),
    ];
    let masked = [(1, 1), (4, 1), (6, 0)];
    let mut cells = Vec::new();
    for i in 0..12 {
        for j in 0..2 {
            if masked.contains(&(i, j)) {
                cells.push(Cell::Missing);
            } else if j == 0 {
                cells.push(Cell::Num(i as f64 + 0.5));
            } else {
                cells.push(Cell::Cat((i % 3) as u32));
            }
        }
    }
    Dataset::new(schema, cells).expect("fixture is valid")
}

/// The mixed fixture with its categorical column expanded to one numeric
/// 0/1 column per level; rows with a hidden category lose the whole block.
fn one_hot_fixture() -> (Dataset, Vec<usize>, usize) {
    let mixed = mixed_fixture();
    let levels = mixed.column(1).categories.clone();
    let mut schema = vec![ColumnSchema::numeric("x")];
    for label in &levels {
        schema.push(ColumnSchema::numeric(format!("g_{label}")));
    }
    let mut cells = Vec::new();
    let mut masked_rows = Vec::new();
    for r in 0..mixed.n_rows() {
        cells.push(mixed.get(r, 0));
        match mixed.get(r, 1) {
            Cell::Cat(k) => {
                for level in 0..levels.len() {
                    cells.push(Cell::Num(if level as u32 == k { 1.0 } else { 0.0 }));
                }
            }
            Cell::Missing => {
                masked_rows.push(r);
                for _ in 0..levels.len() {
                    cells.push(Cell::Missing);
                }
            }
            Cell::Num(_) => unreachable!("column g is categorical"),
        }
    }
    let data = Dataset::new(schema, cells).expect("fixture is valid");
    (data, masked_rows, levels.len())
}

fn spec_for(command: &str, categorical: bool, timeout_secs: u64) -> ImputerSpec {
    ImputerSpec {
        name: "candidate".into(),
        kind: ImputerKind::External,
        seed: 17,
        params: Hyperparams {
            command: Some(command.to_string()),
            timeout_secs,
            supports_categorical: Some(categorical),
            ..Hyperparams::default()
        },
    }
}

/// Runs the command against the fixtures. `categorical` adds the
/// integer-code and one-hot checks.
pub fn validate_method(
    command: &str,
    categorical: bool,
    timeout_secs: u64,
) -> DiagnosticReport {
    let mut checks = Vec::new();
    let spec = spec_for(command, categorical, timeout_secs);

    let fixture = numeric_fixture();
    match imputers::impute(&spec, &fixture) {
        Err(e) => {
            checks.push(DiagnosticCheck {
                name: "process",
                passed: false,
                detail: e.to_string(),
            });
        }
        Ok(result) => {
            checks.push(DiagnosticCheck {
                name: "process",
                passed: true,
                detail: format!("completed in {:.2}s", result.duration.as_secs_f64()),
            });
            let remaining = result.imputed.missing_count();
            checks.push(DiagnosticCheck {
                name: "missing_filled",
                passed: remaining == 0,
                detail: if remaining == 0 {
                    "every masked cell came back with a value".into()
                } else {
                    format!("{remaining} cells still missing")
                },
            });
            let mut worst: Option<(usize, usize, f64)> = None;
            for r in 0..fixture.n_rows() {
                for c in 0..fixture.n_cols() {
                    if let (Cell::Num(before), Cell::Num(after)) =
                        (fixture.get(r, c), result.imputed.get(r, c))
                    {
                        let delta = (after - before).abs();
                        if delta >= MODIFIED_TOLERANCE
                            && worst.map_or(true, |(_, _, w)| delta > w)
                        {
                            worst = Some((r, c, delta));
                        }
                    }
                }
            }
            checks.push(DiagnosticCheck {
                name: "observed_preserved",
                passed: worst.is_none(),
                detail: match worst {
                    None => "observed cells returned unchanged".into(),
                    Some((r, c, delta)) => format!("cell ({r},{c}) moved by {delta:.2e}"),
                },
            });
        }
    }

    if categorical {
        let fixture = mixed_fixture();
        match imputers::impute(&spec, &fixture) {
            Err(e) => checks.push(DiagnosticCheck {
                name: "category_codes",
                passed: false,
                detail: e.to_string(),
            }),
            Ok(result) => {
                let bad = result.category_violations.len();
                checks.push(DiagnosticCheck {
                    name: "category_codes",
                    passed: bad == 0,
                    detail: if bad == 0 {
                        "categorical cells stayed inside the declared level sets".into()
                    } else {
                        format!("{bad} cells outside the declared level sets")
                    },
                });
            }
        }

        let (fixture, masked_rows, n_levels) = one_hot_fixture();
        match imputers::impute(&spec, &fixture) {
            Err(e) => checks.push(DiagnosticCheck {
                name: "one_hot_blocks",
                passed: false,
                detail: e.to_string(),
            }),
            Ok(result) => {
                let mut bad_rows = 0;
                for &r in &masked_rows {
                    let mut ones = 0;
                    let mut malformed = false;
                    for level in 0..n_levels {
                        match result.imputed.get(r, 1 + level) {
                            Cell::Num(v) if (v - 1.0).abs() <= 1e-9 => ones += 1,
                            Cell::Num(v) if v.abs() <= 1e-9 => {}
                            _ => malformed = true,
                        }
                    }
                    if malformed || ones != 1 {
                        bad_rows += 1;
                    }
                }
                checks.push(DiagnosticCheck {
                    name: "one_hot_blocks",
                    passed: bad_rows == 0,
                    detail: if bad_rows == 0 {
                        "masked dummy blocks came back one-hot".into()
                    } else {
                        format!(
                            "{bad_rows} of {} masked blocks are not one-hot",
                            masked_rows.len()
                        )
                    },
                });
            }
        }
    }

    DiagnosticReport { checks }
}
