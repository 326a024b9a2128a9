//! JSON-lines record store. Append-only, so an interrupted run leaves a
//! loadable prefix and `--resume` picks up where it stopped.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::{OrchestratorError, ScenarioRecord};

#[derive(Debug, Clone)]
pub struct Store {
    path: PathBuf,
}

impl Store {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Store { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn exists(&self) -> bool {
        self.path.exists()
    }

    /// Appends records, one JSON object per line, flushing at the end so a
    /// crash between calls never leaves a partial line.
    pub fn append(&self, records: &[ScenarioRecord]) -> Result<(), OrchestratorError> {
        if records.is_empty() {
            return Ok(());
        }
        if let Some(dir) = self.path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        let file = std::fs::OpenOptions::new().create(true).append(true).open(&self.path)?;
        let mut writer = std::io::BufWriter::new(file);
        for record in records {
            debug_assert!(record.check_invariants().is_ok());
            serde_json::to_writer(&mut writer, record)?;
            writer.write_all(b"\n")?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn load(&self) -> Result<Vec<ScenarioRecord>, OrchestratorError> {
        let file = std::fs::File::open(&self.path)?;
        let reader = BufReader::new(file);
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: ScenarioRecord = serde_json::from_str(&line)
                .map_err(|source| OrchestratorError::StoreParse { line: i + 1, source })?;
            records.push(record);
        }
        Ok(records)
    }

    /// Work keys already present; missing file means nothing is done.
    pub fn completed_work(&self) -> Result<HashSet<String>, OrchestratorError> {
        if !self.exists() {
            return Ok(HashSet::new());
        }
        Ok(self.load()?.iter().map(|r| r.work_key()).collect())
    }
}
