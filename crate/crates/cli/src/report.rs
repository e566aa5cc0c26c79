use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use anidil_core::grid::SampledField;
use anidil_core::linalg::Matrix;
use anidil_core::{Error, Result};

use crate::args::TolArgs;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: usize,
}

impl FileDigest {
    fn of(path: &Path, data: &[u8]) -> Self {
        Self {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(data)),
            bytes: data.len(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Inputs {
    /// sha256 over the arguments and every input file.
    pub digest: String,
    pub args: Vec<String>,
    pub files: Vec<FileDigest>,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub command: &'static str,
    pub version: &'static str,
    pub inputs: Inputs,
    pub tolerances: TolArgs,
    pub outputs: Value,
    pub written: Vec<FileDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

#[derive(Debug, serde::Deserialize)]
struct MatrixDocument {
    n: usize,
    rows: Vec<Vec<f64>>,
    #[serde(default)]
    label: Option<String>,
}

/// Tracks every file read or written during a run.
pub struct Context {
    pub seed: u64,
    pub tol: TolArgs,
    args: Vec<String>,
    files: Vec<(FileDigest, Vec<u8>)>,
    written: Vec<FileDigest>,
}

impl Context {
    pub fn new(args: Vec<String>, seed: u64, tol: TolArgs) -> Self {
        Self {
            seed,
            tol,
            args,
            files: Vec::new(),
            written: Vec::new(),
        }
    }

    fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let data = std::fs::read(path)?;
        self.files.push((FileDigest::of(path, &data), data.clone()));
        Ok(data)
    }

    pub fn load_matrix(&mut self, path: &Path) -> Result<(Matrix, Option<String>)> {
        let data = self.read(path)?;
        let doc: MatrixDocument = serde_json::from_slice(&data)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if doc.rows.len() != doc.n || doc.rows.iter().any(|r| r.len() != doc.n) {
            return Err(Error::Format(format!(
                "{}: rows do not form a {n}x{n} array",
                path.display(),
                n = doc.n
            )));
        }
        if doc.n == 0 {
            return Err(Error::Format(format!("{}: n must be positive", path.display())));
        }
        let flat: Vec<f64> = doc.rows.into_iter().flatten().collect();
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok((Matrix::from_row_slice(doc.n, doc.n, &flat), doc.label))
    }

    pub fn load_field(&mut self, path: &Path) -> Result<SampledField> {
        let data = self.read(path)?;
        SampledField::read_from(std::io::Cursor::new(data))
    }

    pub fn write_field(&mut self, field: &SampledField, path: &Path, csv: bool) -> Result<()> {
        let mut data = Vec::new();
        field.write_to(&mut data)?;
        std::fs::write(path, &data)?;
        self.written.push(FileDigest::of(path, &data));
        if csv {
            let mut text = Vec::new();
            field.write_csv(&mut text)?;
            let csv_path = path.with_extension("csv");
            std::fs::write(&csv_path, &text)?;
            self.written.push(FileDigest::of(&csv_path, &text));
        }
        Ok(())
    }

    pub fn finish(self, command: &'static str, outputs: Value, timing: Option<f64>) -> RunReport {
        let mut hasher = Sha256::new();
        for a in &self.args {
            hasher.update(a.as_bytes());
            hasher.update([0u8]);
        }
        for (d, data) in &self.files {
            hasher.update(d.path.to_string_lossy().as_bytes());
            hasher.update([0u8]);
            hasher.update((data.len() as u64).to_le_bytes());
            hasher.update(data);
        }
        RunReport {
            schema: SCHEMA,
            command,
            version: env!("CARGO_PKG_VERSION"),
            inputs: Inputs {
                digest: hex::encode(hasher.finalize()),
                args: self.args,
                files: self.files.into_iter().map(|(d, _)| d).collect(),
                seed: self.seed,
            },
            tolerances: self.tol,
            outputs,
            written: self.written,
            timing: timing.map(|wall_seconds| Timing { wall_seconds }),
        }
    }
}
