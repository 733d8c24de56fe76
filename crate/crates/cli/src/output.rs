//! CSV tables with fixed numeric formatting and the JSON manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// 17 significant digits in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| {
        CliError::Output(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })
}

/// Writes a header plus rows and returns the file's sha256.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let io = |e: &dyn std::fmt::Display| {
        CliError::Output(format!("cannot write {}: {e}", path.display()))
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).map_err(|e| io(&e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io(&e))?;
    }
    let bytes = w.into_inner().map_err(|e| io(&e))?;
    fs::write(path, &bytes).map_err(|e| io(&e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest<C: Serialize, S: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: C,
    pub master_seed: u64,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<FileEntry>,
    pub summary: S,
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub struct OutputSet {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        ensure_dir(dir)?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let sha256 = write_csv(&path, header, rows)?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256,
        });
        Ok(path)
    }

    pub fn finish<C: Serialize, S: Serialize>(
        self,
        command: &str,
        config: C,
        master_seed: u64,
        started_at: String,
        summary: S,
    ) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            tool: "qsearch",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            master_seed,
            started_at,
            finished_at: now(),
            files: self.files,
            summary,
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Output(format!("cannot serialize manifest: {e}")))?;
        fs::write(&path, text + "\n")
            .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}
