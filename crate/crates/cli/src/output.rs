//! Table and summary emission.

use std::io::Write;
use std::path::{Path, PathBuf};

use platoon_core::format::fmt_sig;
use platoon_core::Scenario;
use serde::Serialize;

use crate::error::CliError;

/// `x` rounded to the significant digits of the CSV tables, so that JSON
/// summaries and tables print the same values. Non-finite values become
/// `null`.
pub fn rounded(x: f64) -> Option<f64> {
    if x.is_finite() {
        fmt_sig(x).parse().ok()
    } else {
        None
    }
}

/// File name `{command}_{scenario}_{label}.csv`.
pub fn table_path(dir: &Path, command: &str, scenario: Scenario, label: &str) -> PathBuf {
    dir.join(format!("{command}_{}_{label}.csv", scenario.label()))
}

/// Where tables go: standard output, or one file per table in a directory.
pub struct Sink {
    dir: Option<PathBuf>,
    stdout: std::io::StdoutLock<'static>,
}

impl Sink {
    pub fn new(dir: Option<&Path>) -> Result<Self, CliError> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Self {
            dir: dir.map(Path::to_path_buf),
            stdout: std::io::stdout().lock(),
        })
    }

    /// Writes a CSV table to its file, or to standard output.
    pub fn table(&mut self, command: &str, scenario: Scenario, label: &str, csv: &str) -> Result<(), CliError> {
        match &self.dir {
            Some(d) => std::fs::write(table_path(d, command, scenario, label), csv)?,
            None => self.stdout.write_all(csv.as_bytes())?,
        }
        Ok(())
    }

    /// Prints a one-line JSON summary to standard output.
    pub fn summary<S: Serialize>(&mut self, value: &S) -> Result<(), CliError> {
        let line = serde_json::to_string(value).map_err(|e| CliError::numerical(e.to_string()))?;
        writeln!(self.stdout, "{line}")?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), CliError> {
        self.stdout.flush()?;
        Ok(())
    }
}
