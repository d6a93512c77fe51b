//! File formats: JSON inputs with complex numbers as `[re, im]` (or a bare
//! number for a real entry), matrices as row-major nested arrays, and
//! atomic output writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use l1dom::linalg::Matrix;
use l1dom::{CMatrix, CVector, Complex64};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// A complex entry as written in input files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Pair([f64; 2]),
}

impl Entry {
    pub fn value(self) -> Complex64 {
        match self {
            Entry::Real(x) => Complex64::new(x, 0.0),
            Entry::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default)]
    pub schema_version: Option<u32>,
    pub v: Vec<Vec<Entry>>,
    #[serde(default)]
    pub ve: Option<Vec<Vec<Entry>>>,
    #[serde(default)]
    pub sigma2: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataFile {
    #[serde(default)]
    pub schema_version: Option<u32>,
    pub d: Vec<Entry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiFile {
    #[serde(default)]
    pub schema_version: Option<u32>,
    pub xi: Vec<Entry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatiosFile {
    #[serde(default)]
    pub schema_version: Option<u32>,
    pub ratios: Vec<f64>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

pub fn check_schema(path: &Path, version: Option<u32>) -> CliResult<()> {
    match version {
        Some(v) if v != SCHEMA_VERSION => Err(CliError::Parse {
            path: path.to_path_buf(),
            message: format!("unsupported schema_version {v} (expected {SCHEMA_VERSION})"),
        }),
        _ => Ok(()),
    }
}

pub fn to_vector(entries: &[Entry]) -> CVector {
    entries.iter().map(|e| e.value()).collect()
}

pub fn to_matrix(path: &Path, field: &str, rows: &[Vec<Entry>]) -> CliResult<CMatrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(CliError::Parse { path: path.to_path_buf(), message: format!("`{field}` is empty") });
    }
    if let Some(i) = rows.iter().position(|r| r.len() != cols) {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            message: format!("`{field}` row {i} has {} entries, row 0 has {cols}", rows[i].len()),
        });
    }
    let data = rows.iter().flatten().map(|e| e.value()).collect();
    Matrix::from_row_major(rows.len(), cols, data).map_err(CliError::from)
}

/// Row-major nested arrays of `[re, im]` pairs.
pub fn matrix_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    m.to_rows()
}

pub fn is_real(m: &CMatrix) -> bool {
    m.as_slice().iter().all(|z| z.im == 0.0)
}

/// Creates `dir` if needed.
pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp: PathBuf = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable output");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
