//! CSV loading and writing against a declared column schema.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Cell, ColumnKind, ColumnSchema, DataError, Dataset};

/// Rows below this carry too little signal for distribution-level scoring.
pub const MIN_CALIBRATED_ROWS: usize = 200;

fn default_missing_token() -> String {
    "NA".to_string()
}

/// Declared column types for a CSV file, usually loaded from a TOML file
/// sitting next to the data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaConfig {
    #[serde(default = "default_missing_token")]
    pub missing_token: String,
    pub columns: Vec<SchemaConfigColumn>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaConfigColumn {
    pub name: String,
    pub kind: ColumnKind,
    /// Label order fixes the level codes. Omitted: inferred from the data,
    /// sorted lexicographically.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
}

impl SchemaConfig {
    /// All columns numeric; the common case for synthetic data.
    pub fn all_numeric(names: &[&str]) -> Self {
        SchemaConfig {
            missing_token: default_missing_token(),
            columns: names
                .iter()
                .map(|n| SchemaConfigColumn {
                    name: n.to_string(),
                    kind: ColumnKind::Numeric,
                    categories: None,
                })
                .collect(),
        }
    }

    /// Schema config matching an in-memory dataset, categories pinned.
    pub fn for_dataset(dataset: &Dataset) -> Self {
        SchemaConfig {
            missing_token: default_missing_token(),
            columns: dataset
                .schema()
                .iter()
                .map(|c| SchemaConfigColumn {
                    name: c.name.clone(),
                    kind: c.kind,
                    categories: if c.kind == ColumnKind::Categorical {
                        Some(c.categories.clone())
                    } else {
                        None
                    },
                })
                .collect(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, DataError> {
        let cfg: SchemaConfig =
            toml::from_str(text).map_err(|e| DataError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("schema config serializes")
    }

    fn validate(&self) -> Result<(), DataError> {
        if self.columns.is_empty() {
            return Err(DataError::Config("schema declares no columns".into()));
        }
        for col in &self.columns {
            match (col.kind, &col.categories) {
                (ColumnKind::Numeric, Some(_)) => {
                    return Err(DataError::Config(format!(
                        "numeric column '{}' must not declare categories",
                        col.name
                    )));
                }
                (ColumnKind::Categorical, Some(cats)) => {
                    if cats.is_empty() {
                        return Err(DataError::Config(format!(
                            "categorical column '{}' declares an empty category list",
                            col.name
                        )));
                    }
                    let mut seen = cats.clone();
                    seen.sort();
                    seen.dedup();
                    if seen.len() != cats.len() {
                        return Err(DataError::Config(format!(
                            "categorical column '{}' declares duplicate labels",
                            col.name
                        )));
                    }
                }
                _ => {}
            }
        }
        let mut names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        names.sort();
        names.dedup();
        if names.len() != self.columns.len() {
            return Err(DataError::Config("duplicate column names in schema".into()));
        }
        Ok(())
    }
}

/// Loads a CSV file with a header row. Column order follows the file; every
/// header name must be declared in the schema config and vice versa.
pub fn load_csv(path: &Path, config: &SchemaConfig) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path)?;
    load_csv_reader(file, config)
}

/// `load_csv` against any reader; the entry point for tests and pipes.
pub fn load_csv_reader<R: Read>(reader: R, config: &SchemaConfig) -> Result<Dataset, DataError> {
    config.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let mut col_specs = Vec::with_capacity(headers.len());
    for h in &headers {
        let spec = config
            .columns
            .iter()
            .find(|c| &c.name == h)
            .ok_or_else(|| DataError::HeaderMismatch(format!("column '{h}' not in schema")))?;
        col_specs.push(spec.clone());
    }
    if col_specs.len() != config.columns.len() {
        let missing: Vec<&str> = config
            .columns
            .iter()
            .filter(|c| !headers.iter().any(|h| h == &c.name))
            .map(|c| c.name.as_str())
            .collect();
        return Err(DataError::HeaderMismatch(format!(
            "schema columns missing from file: {}",
            missing.join(", ")
        )));
    }

    let mut raw_rows: Vec<Vec<String>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        raw_rows.push(record.iter().map(|f| f.trim().to_string()).collect());
    }
    if raw_rows.is_empty() {
        return Err(DataError::Empty);
    }

    // Category label sets: declared order wins; otherwise inferred, sorted.
    let missing_token = &config.missing_token;
    let mut schema = Vec::with_capacity(col_specs.len());
    for (j, spec) in col_specs.iter().enumerate() {
        match spec.kind {
            ColumnKind::Numeric => schema.push(ColumnSchema::numeric(&spec.name)),
            ColumnKind::Categorical => {
                let cats = match &spec.categories {
                    Some(declared) => declared.clone(),
                    None => {
                        let mut seen: Vec<String> = raw_rows
                            .iter()
                            .map(|row| row[j].clone())
                            .filter(|t| t != missing_token)
                            .collect();
                        seen.sort();
                        seen.dedup();
                        seen
                    }
                };
                if cats.is_empty() {
                    return Err(DataError::AllMissingColumn(spec.name.clone()));
                }
                schema.push(ColumnSchema::categorical(&spec.name, cats));
            }
        }
    }

    let mut cells = Vec::with_capacity(raw_rows.len() * schema.len());
    for (i, row) in raw_rows.iter().enumerate() {
        for (j, token) in row.iter().enumerate() {
            let cell = parse_cell(token, &schema[j], missing_token, i, &col_specs[j].name)?;
            cells.push(cell);
        }
    }

    let dataset = Dataset::new(schema, cells)?;
    reject_degenerate_columns(&dataset)?;
    if dataset.n_rows() < MIN_CALIBRATED_ROWS {
        log::warn!(
            "dataset has {} rows, below the {} needed for stable distribution-level scores",
            dataset.n_rows(),
            MIN_CALIBRATED_ROWS
        );
    }
    Ok(dataset)
}

fn parse_cell(
    token: &str,
    schema: &ColumnSchema,
    missing_token: &str,
    row: usize,
    col_name: &str,
) -> Result<Cell, DataError> {
    if token == missing_token {
        return Ok(Cell::Missing);
    }
    match schema.kind {
        ColumnKind::Numeric => {
            let v: f64 = token.parse().map_err(|_| DataError::BadNumeric {
                row,
                col: col_name.to_string(),
                token: token.to_string(),
            })?;
            if !v.is_finite() {
                return Err(DataError::NonFinite {
                    row,
                    col: col_name.to_string(),
                    token: token.to_string(),
                });
            }
            Ok(Cell::Num(v))
        }
        ColumnKind::Categorical => {
            let idx = schema.categories.iter().position(|c| c == token).ok_or_else(|| {
                DataError::UnknownCategory {
                    row,
                    col: col_name.to_string(),
                    token: token.to_string(),
                }
            })?;
            Ok(Cell::Cat(idx as u32))
        }
    }
}

/// Constant and duplicate columns break standardization and inflate
/// dependence structure; refuse them up front.
fn reject_degenerate_columns(dataset: &Dataset) -> Result<(), DataError> {
    for j in 0..dataset.n_cols() {
        let observed: Vec<Cell> =
            (0..dataset.n_rows()).map(|r| dataset.get(r, j)).filter(|c| !c.is_missing()).collect();
        if observed.is_empty() {
            return Err(DataError::AllMissingColumn(dataset.column(j).name.clone()));
        }
        if observed.iter().all(|c| *c == observed[0]) {
            return Err(DataError::ConstantColumn(dataset.column(j).name.clone()));
        }
    }
    for a in 0..dataset.n_cols() {
        for b in (a + 1)..dataset.n_cols() {
            if columns_identical(dataset, a, b) {
                return Err(DataError::DuplicateColumns(
                    dataset.column(a).name.clone(),
                    dataset.column(b).name.clone(),
                ));
            }
        }
    }
    Ok(())
}

fn columns_identical(dataset: &Dataset, a: usize, b: usize) -> bool {
    if dataset.column(a).kind != dataset.column(b).kind {
        return false;
    }
    (0..dataset.n_rows()).all(|r| match (dataset.get(r, a), dataset.get(r, b)) {
        (Cell::Missing, Cell::Missing) => true,
        (Cell::Num(x), Cell::Num(y)) => x == y,
        (Cell::Cat(x), Cell::Cat(y)) => {
            dataset.column(a).categories[x as usize] == dataset.column(b).categories[y as usize]
        }
        _ => false,
    })
}

/// Writes a dataset back to CSV with original labels; loading the result with
/// the same schema config reproduces the dataset bit for bit.
pub fn write_csv(dataset: &Dataset, path: &Path, missing_token: &str) -> Result<(), DataError> {
    let file = std::fs::File::create(path)?;
    write_csv_writer(dataset, file, missing_token)
}

pub fn write_csv_writer<W: Write>(
    dataset: &Dataset,
    writer: W,
    missing_token: &str,
) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let names: Vec<&str> = dataset.schema().iter().map(|c| c.name.as_str()).collect();
    wtr.write_record(&names).map_err(|e| DataError::Csv(e.to_string()))?;
    let mut record = Vec::with_capacity(dataset.n_cols());
    for r in 0..dataset.n_rows() {
        record.clear();
        for j in 0..dataset.n_cols() {
            record.push(match dataset.get(r, j) {
                Cell::Missing => missing_token.to_string(),
                Cell::Num(v) => format!("{v}"),
                Cell::Cat(k) => dataset.column(j).categories[k as usize].clone(),
            });
        }
        wtr.write_record(&record).map_err(|e| DataError::Csv(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}
