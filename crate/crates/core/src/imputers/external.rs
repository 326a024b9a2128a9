//! Subprocess adapter for external imputation methods.
//!
//! Protocol: the configured command is invoked as
//! `cmd <in.csv> <out.csv> <seed>`. The input CSV uses the token `NA` for
//! missing cells and sends categorical values as integer codes 1..c; the
//! command must write a CSV of the same shape with every cell filled. Exit
//! code 0 plus a well-formed output means success; everything else is
//! classified by the validation step.

use std::io::{Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use super::{CellRef, ImputeError, ImputerSpec};
use crate::data::{Cell, ColumnKind, Dataset};

pub const WIRE_MISSING_TOKEN: &str = "NA";

/// Polling interval while waiting for the child to finish.
const WAIT_TICK: Duration = Duration::from_millis(25);

/// How much captured stderr to attach to error messages.
const STDERR_TAIL: usize = 600;

pub(super) fn run(
    spec: &ImputerSpec,
    data: &Dataset,
    seed: u64,
) -> Result<(Dataset, Vec<CellRef>), ImputeError> {
    let command = spec.params.command.as_deref().ok_or(ImputeError::NoCommand)?;
    let parts: Vec<&str> = command.split_whitespace().collect();
    if parts.is_empty() {
        return Err(ImputeError::NoCommand);
    }
    let dir = tempfile::tempdir().map_err(|e| ImputeError::External(format!("tempdir: {e}")))?;
    let in_path = dir.path().join("in.csv");
    let out_path = dir.path().join("out.csv");
    let err_path = dir.path().join("stderr.log");
    write_wire_csv(data, &in_path)?;

    let stderr_file = std::fs::File::create(&err_path)
        .map_err(|e| ImputeError::External(format!("stderr capture: {e}")))?;
    let timeout = Duration::from_secs(spec.params.timeout_secs);
    let mut child = Command::new(parts[0])
        .args(&parts[1..])
        .arg(&in_path)
        .arg(&out_path)
        .arg(seed.to_string())
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::from(stderr_file))
        .spawn()
        .map_err(|e| ImputeError::External(format!("failed to launch '{}': {e}", parts[0])))?;

    let deadline = Instant::now() + timeout;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) => {
                if Instant::now() >= deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(ImputeError::Timeout(timeout));
                }
                std::thread::sleep(WAIT_TICK);
            }
            Err(e) => return Err(ImputeError::External(format!("wait failed: {e}"))),
        }
    };

    if !status.success() {
        let tail = stderr_tail(&err_path);
        return Err(ImputeError::External(format!(
            "command exited with {status}{tail}"
        )));
    }
    read_wire_csv(&out_path, data)
}

fn stderr_tail(path: &Path) -> String {
    let mut text = String::new();
    if std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .is_err()
    {
        return String::new();
    }
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return String::new();
    }
    let tail: String = trimmed
        .chars()
        .skip(trimmed.chars().count().saturating_sub(STDERR_TAIL))
        .collect();
    format!("; stderr: {tail}")
}

/// Writes the wire-format CSV: original column names, numeric values as-is,
/// categorical values as 1-based integer codes, `NA` for missing.
pub fn write_wire_csv(data: &Dataset, path: &Path) -> Result<(), ImputeError> {
    let file = std::fs::File::create(path)
        .map_err(|e| ImputeError::External(format!("write {}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(file);
    let io_err = |e: std::io::Error| ImputeError::External(format!("write: {e}"));
    let names: Vec<&str> = data.schema().iter().map(|c| c.name.as_str()).collect();
    writeln!(w, "{}", names.join(",")).map_err(io_err)?;
    let mut line = String::new();
    for r in 0..data.n_rows() {
        line.clear();
        for j in 0..data.n_cols() {
            if j > 0 {
                line.push(',');
            }
            match data.get(r, j) {
                Cell::Missing => line.push_str(WIRE_MISSING_TOKEN),
                Cell::Num(v) => line.push_str(&format!("{v}")),
                Cell::Cat(k) => line.push_str(&format!("{}", k + 1)),
            }
        }
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Reads an external method's output leniently. Shape problems and
/// unparseable numerics are hard errors; a categorical cell outside the
/// column's level set is kept as a per-cell violation so validation can
/// order its checks.
pub fn read_wire_csv(path: &Path, input: &Dataset) -> Result<(Dataset, Vec<CellRef>), ImputeError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ImputeError::External(format!("output {} unreadable: {e}", path.display()))
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| ImputeError::External(format!("output header: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let expected: Vec<&str> = input.schema().iter().map(|c| c.name.as_str()).collect();
    if headers != expected {
        return Err(ImputeError::External(format!(
            "output header [{}] does not match input header [{}]",
            headers.join(","),
            expected.join(",")
        )));
    }

    let mut cells = Vec::with_capacity(input.n_rows() * input.n_cols());
    let mut violations = Vec::new();
    let mut n_rows = 0usize;
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| ImputeError::External(format!("output row {r}: {e}")))?;
        n_rows += 1;
        if n_rows > input.n_rows() {
            return Err(ImputeError::External(format!(
                "output has more than the expected {} rows",
                input.n_rows()
            )));
        }
        for (j, token) in record.iter().enumerate() {
            let token = token.trim();
            cells.push(parse_wire_cell(token, input, r, j, &mut violations)?);
        }
    }
    if n_rows != input.n_rows() {
        return Err(ImputeError::External(format!(
            "output has {n_rows} rows, expected {}",
            input.n_rows()
        )));
    }
    let ds = Dataset::new(input.schema().to_vec(), cells)?;
    Ok((ds, violations))
}

fn parse_wire_cell(
    token: &str,
    input: &Dataset,
    row: usize,
    col: usize,
    violations: &mut Vec<CellRef>,
) -> Result<Cell, ImputeError> {
    if token == WIRE_MISSING_TOKEN {
        return Ok(Cell::Missing);
    }
    let schema = input.column(col);
    match schema.kind {
        ColumnKind::Numeric => {
            let v: f64 = token.parse().map_err(|_| {
                ImputeError::External(format!(
                    "cell ({row}, {col}): '{token}' is not a number"
                ))
            })?;
            if !v.is_finite() {
                return Err(ImputeError::External(format!(
                    "cell ({row}, {col}): non-finite value '{token}'"
                )));
            }
            Ok(Cell::Num(v))
        }
        ColumnKind::Categorical => {
            let c = schema.n_levels() as f64;
            if let Ok(v) = token.parse::<f64>() {
                let code = v.round();
                if (v - code).abs() <= 1e-9 && code >= 1.0 && code <= c {
                    return Ok(Cell::Cat(code as u32 - 1));
                }
            }
            if let Some(idx) = schema.categories.iter().position(|l| l == token) {
                return Ok(Cell::Cat(idx as u32));
            }
            // Out of the category set: placeholder level plus a violation
            // record; validation decides what it means.
            violations.push(CellRef { row, col });
            Ok(Cell::Cat(0))
        }
    }
}
