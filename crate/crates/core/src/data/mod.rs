//! Dataset container: mixed numeric/categorical columns with explicit
//! missingness, plus the standardization and one-hot encoding steps the
//! scoring pipeline relies on.

mod io;

pub use io::{load_csv, load_csv_reader, write_csv, write_csv_writer, SchemaConfig, SchemaConfigColumn};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(String),
    #[error("schema config error: {0}")]
    Config(String),
    #[error("csv header does not match schema: {0}")]
    HeaderMismatch(String),
    #[error("row {row}, column '{col}': cannot parse '{token}' as a number")]
    BadNumeric { row: usize, col: String, token: String },
    #[error("row {row}, column '{col}': '{token}' is not a finite number")]
    NonFinite { row: usize, col: String, token: String },
    #[error("row {row}, column '{col}': unknown category label '{token}'")]
    UnknownCategory { row: usize, col: String, token: String },
    #[error("dataset has no rows or no columns")]
    Empty,
    #[error("column '{0}' is constant over its observed values; drop it before benchmarking")]
    ConstantColumn(String),
    #[error("column '{0}' has no observed values")]
    AllMissingColumn(String),
    #[error("columns '{0}' and '{1}' are identical; drop one before benchmarking")]
    DuplicateColumns(String, String),
    #[error("column '{0}' has zero variance; cannot standardize")]
    ZeroVariance(String),
    #[error("operation requires a complete dataset but {0} cells are missing")]
    NotComplete(usize),
    #[error("need at least 2 rows to estimate a standard deviation, got {0}")]
    TooFewRows(usize),
    #[error("dataset shape does not match: {0}")]
    ShapeMismatch(String),
    #[error("invalid cell at row {row}, column {col}: {reason}")]
    BadCell { row: usize, col: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// Column metadata. For categorical columns `categories` holds the original
/// labels in code order: level k is written as code k+1 on the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    pub categories: Vec<String>,
}

impl ColumnSchema {
    pub fn numeric(name: impl Into<String>) -> Self {
        ColumnSchema { name: name.into(), kind: ColumnKind::Numeric, categories: Vec::new() }
    }

    pub fn categorical(name: impl Into<String>, categories: Vec<String>) -> Self {
        ColumnSchema { name: name.into(), kind: ColumnKind::Categorical, categories }
    }

    pub fn n_levels(&self) -> usize {
        self.categories.len()
    }
}

/// One table cell. Categorical values are stored as 0-based level indices
/// into the column's category list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Missing,
    Num(f64),
    Cat(u32),
}

impl Cell {
    pub fn is_missing(self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_num(self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_cat(self) -> Option<u32> {
        match self {
            Cell::Cat(v) => Some(v),
            _ => None,
        }
    }
}

/// Row-major table of cells with a fixed column schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Vec<ColumnSchema>,
    cells: Vec<Cell>,
    n_rows: usize,
}

impl Dataset {
    /// Builds a dataset, checking shape and that every cell fits its column.
    pub fn new(schema: Vec<ColumnSchema>, cells: Vec<Cell>) -> Result<Self, DataError> {
        let p = schema.len();
        if p == 0 || cells.is_empty() {
            return Err(DataError::Empty);
        }
        if cells.len() % p != 0 {
            return Err(DataError::ShapeMismatch(format!(
                "{} cells do not fill rows of {} columns",
                cells.len(),
                p
            )));
        }
        let n_rows = cells.len() / p;
        let ds = Dataset { schema, cells, n_rows };
        for r in 0..n_rows {
            for c in 0..p {
                ds.check_cell(r, c, ds.get(r, c))?;
            }
        }
        Ok(ds)
    }

    fn check_cell(&self, row: usize, col: usize, cell: Cell) -> Result<(), DataError> {
        match (self.schema[col].kind, cell) {
            (_, Cell::Missing) => Ok(()),
            (ColumnKind::Numeric, Cell::Num(v)) => {
                if v.is_finite() {
                    Ok(())
                } else {
                    Err(DataError::BadCell { row, col, reason: format!("non-finite value {v}") })
                }
            }
            (ColumnKind::Categorical, Cell::Cat(k)) => {
                if (k as usize) < self.schema[col].n_levels() {
                    Ok(())
                } else {
                    Err(DataError::BadCell {
                        row,
                        col,
                        reason: format!("level index {k} out of range"),
                    })
                }
            }
            (kind, other) => Err(DataError::BadCell {
                row,
                col,
                reason: format!("{other:?} in a {kind:?} column"),
            }),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn column(&self, j: usize) -> &ColumnSchema {
        &self.schema[j]
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.schema.len() + col]
    }

    /// Overwrites one cell; panics if the value does not fit the column.
    pub fn set(&mut self, row: usize, col: usize, cell: Cell) {
        self.check_cell(row, col, cell).expect("cell fits column");
        let p = self.schema.len();
        self.cells[row * p + col] = cell;
    }

    pub fn row(&self, row: usize) -> &[Cell] {
        let p = self.schema.len();
        &self.cells[row * p..(row + 1) * p]
    }

    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.get(row, col).is_missing()
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_missing()).count()
    }

    pub fn is_complete(&self) -> bool {
        !self.cells.iter().any(|c| c.is_missing())
    }

    pub fn has_categorical(&self) -> bool {
        self.schema.iter().any(|c| c.kind == ColumnKind::Categorical)
    }

    /// Row-major missingness mask (true = missing).
    pub fn missing_mask(&self) -> Vec<bool> {
        self.cells.iter().map(|c| c.is_missing()).collect()
    }

    /// Copy with the given cells blanked out (mask is row-major, true = blank).
    pub fn with_masked(&self, mask: &[bool]) -> Result<Dataset, DataError> {
        if mask.len() != self.cells.len() {
            return Err(DataError::ShapeMismatch(format!(
                "mask has {} entries for {} cells",
                mask.len(),
                self.cells.len()
            )));
        }
        let mut out = self.clone();
        for (cell, &m) in out.cells.iter_mut().zip(mask) {
            if m {
                *cell = Cell::Missing;
            }
        }
        Ok(out)
    }

    /// Observed (non-missing) values of one numeric column.
    pub fn observed_numeric(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows).filter_map(|r| self.get(r, col).as_num()).collect()
    }

    /// Observed level indices of one categorical column.
    pub fn observed_levels(&self, col: usize) -> Vec<u32> {
        (0..self.n_rows).filter_map(|r| self.get(r, col).as_cat()).collect()
    }
}

/// Column means and standard deviations of a complete dataset
/// (n−1 denominator). Categorical columns carry no entry.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationStats {
    cols: Vec<Option<(f64, f64)>>,
}

impl StandardizationStats {
    pub fn mean_sd(&self, col: usize) -> Option<(f64, f64)> {
        self.cols[col]
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }
}

/// Per-numeric-column mean and sd of a complete dataset.
pub fn compute_stats(dataset: &Dataset) -> Result<StandardizationStats, DataError> {
    let missing = dataset.missing_count();
    if missing > 0 {
        return Err(DataError::NotComplete(missing));
    }
    if dataset.n_rows() < 2 {
        return Err(DataError::TooFewRows(dataset.n_rows()));
    }
    let mut cols = Vec::with_capacity(dataset.n_cols());
    for j in 0..dataset.n_cols() {
        if dataset.column(j).kind != ColumnKind::Numeric {
            cols.push(None);
            continue;
        }
        let values = dataset.observed_numeric(j);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        if sd == 0.0 {
            return Err(DataError::ZeroVariance(dataset.column(j).name.clone()));
        }
        cols.push(Some((mean, sd)));
    }
    Ok(StandardizationStats { cols })
}

/// Rescales numeric cells to (x − mean) / sd; categorical and missing cells
/// pass through unchanged.
pub fn standardize(dataset: &Dataset, stats: &StandardizationStats) -> Result<Dataset, DataError> {
    if stats.n_cols() != dataset.n_cols() {
        return Err(DataError::ShapeMismatch(format!(
            "stats cover {} columns, dataset has {}",
            stats.n_cols(),
            dataset.n_cols()
        )));
    }
    let mut out = dataset.clone();
    for j in 0..dataset.n_cols() {
        let Some((mean, sd)) = stats.mean_sd(j) else { continue };
        for r in 0..dataset.n_rows() {
            if let Cell::Num(v) = dataset.get(r, j) {
                out.set(r, j, Cell::Num((v - mean) / sd));
            }
        }
    }
    Ok(out)
}

/// Dense row-major numeric matrix produced by one-hot encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix {
    data: Vec<f64>,
    n_rows: usize,
    width: usize,
    spans: Vec<ColumnSpan>,
}

/// Where a source column landed in the encoded matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnSpan {
    pub offset: usize,
    pub width: usize,
}

impl EncodedMatrix {
    /// Wraps a raw row-major buffer; spans become one-to-one columns.
    pub fn from_raw(data: Vec<f64>, n_rows: usize, width: usize) -> Self {
        assert_eq!(data.len(), n_rows * width, "buffer does not fill the shape");
        let spans = (0..width).map(|offset| ColumnSpan { offset, width: 1 }).collect();
        EncodedMatrix { data, n_rows, width, spans }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn spans(&self) -> &[ColumnSpan] {
        &self.spans
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }
}

/// Expands categorical columns into one 0/1 indicator per level; numeric
/// columns pass through as single columns. Requires a complete dataset.
pub fn one_hot_encode(dataset: &Dataset) -> Result<EncodedMatrix, DataError> {
    let missing = dataset.missing_count();
    if missing > 0 {
        return Err(DataError::NotComplete(missing));
    }
    let mut spans = Vec::with_capacity(dataset.n_cols());
    let mut width = 0usize;
    for j in 0..dataset.n_cols() {
        let w = match dataset.column(j).kind {
            ColumnKind::Numeric => 1,
            ColumnKind::Categorical => dataset.column(j).n_levels(),
        };
        spans.push(ColumnSpan { offset: width, width: w });
        width += w;
    }
    let n_rows = dataset.n_rows();
    let mut data = vec![0.0; n_rows * width];
    for r in 0..n_rows {
        let base = r * width;
        for j in 0..dataset.n_cols() {
            let span = spans[j];
            match dataset.get(r, j) {
                Cell::Num(v) => data[base + span.offset] = v,
                Cell::Cat(k) => data[base + span.offset + k as usize] = 1.0,
                Cell::Missing => unreachable!("completeness checked above"),
            }
        }
    }
    Ok(EncodedMatrix { data, n_rows, width, spans })
}
