//! Stamped, atomic output files.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};

/// Provenance written into every output.
#[derive(Debug, Clone, Serialize)]
pub struct Stamp {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    #[serde(flatten)]
    stamp: &'a Stamp,
    #[serde(flatten)]
    body: &'a T,
}

pub struct OutputDir {
    dir: PathBuf,
    stamp: Stamp,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: &Path, stamp: Stamp) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_owned(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_owned(),
            stamp,
            written: Vec::new(),
        })
    }

    /// Comment lines for the head of a CSV file.
    pub fn comments(&self) -> Vec<String> {
        vec![
            format!("fluxcoh {}", self.stamp.command),
            format!("config_sha256 {}", self.stamp.config_sha256),
            format!("seed {}", self.stamp.seed),
        ]
    }

    /// Writes through a temporary file in the target directory, then renames.
    pub fn write_with(
        &mut self,
        name: &str,
        fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
    ) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let err = |source| CliError::Write {
            path: path.clone(),
            source,
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(err)?;
        {
            let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
            fill(&mut buf).map_err(err)?;
            buf.flush().map_err(err)?;
        }
        tmp.persist(&path).map_err(|e| err(e.error))?;
        log::info!("wrote {}", path.display());
        self.written.push(path.clone());
        Ok(path)
    }

    /// CSV with the stamp as leading `#` comments; `header` and `rows` are
    /// already formatted lines.
    pub fn write_csv(&mut self, name: &str, header: &str, rows: &[String]) -> Result<PathBuf> {
        let comments = self.comments();
        self.write_with(name, |out| {
            for c in &comments {
                writeln!(out, "# {c}")?;
            }
            writeln!(out, "{header}")?;
            for r in rows {
                writeln!(out, "{r}")?;
            }
            Ok(())
        })
    }

    /// Pretty JSON object with the stamp fields merged into `body`.
    pub fn write_json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<PathBuf> {
        let doc = Stamped {
            stamp: &self.stamp,
            body,
        };
        let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Write {
            path: self.dir.join(name),
            source: e.into(),
        })?;
        self.write_with(name, |out| writeln!(out, "{text}"))
    }

    pub fn into_written(self) -> Vec<PathBuf> {
        self.written
    }
}

/// CSV cell for an optional number; empty when absent.
pub fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}
