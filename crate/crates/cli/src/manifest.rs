use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// What produced a set of output files; every CSV names it in its first line.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub fingerprint: String,
    pub seeds: Vec<u64>,
    pub policies: Vec<String>,
    pub overrides: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, fingerprint: String) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            fingerprint,
            seeds: Vec::new(),
            policies: Vec::new(),
            overrides: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}.manifest.json", self.command)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.overrides.insert(key.to_string(), value.to_string());
    }

    pub fn output(&mut self, dir: &Path, path: &Path) {
        let shown = path.strip_prefix(dir).unwrap_or(path);
        self.outputs.push(shown.display().to_string());
    }

    /// Opens a CSV file whose first line cites this manifest.
    pub fn csv(&mut self, dir: &Path, name: &str) -> Result<csv::Writer<File>, CliError> {
        let path = dir.join(name);
        let mut f = File::create(&path).map_err(CliError::io(&path))?;
        writeln!(f, "#manifest={}", self.file_name()).map_err(CliError::io(&path))?;
        self.output(dir, &path);
        Ok(csv::Writer::from_writer(f))
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(self.file_name());
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(CliError::io(&path))?;
        Ok(path)
    }
}
