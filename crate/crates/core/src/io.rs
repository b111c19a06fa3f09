//! JSON formats: state files, operator files and versioned report envelopes.
//!
//! Complex entries are written as `[re, im]` pairs. `serde_json` prints the
//! shortest decimal that round-trips, so save followed by load reproduces
//! every entry bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{c, ComplexMatrix, DensityMatrix, HermitianOperator};
use crate::states::StateSpec;

pub const STATE_FORMAT: &str = "anonmet-state";
pub const STATE_VERSION: u32 = 1;
pub const REPORT_VERSION: u32 = 1;

pub type MatrixRows = Vec<Vec<[f64; 2]>>;

pub fn matrix_rows(m: &ComplexMatrix) -> MatrixRows {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|k| [m[(r, k)].re, m[(r, k)].im]).collect())
        .collect()
}

pub fn matrix_from_rows(rows: &MatrixRows) -> Result<ComplexMatrix> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != cols) {
        return Err(Error::DimensionMismatch(format!(
            "row {r} has {} entries, expected {cols}",
            row.len()
        )));
    }
    Ok(ComplexMatrix::from_fn(n, cols, |r, k| c(rows[r][k][0], rows[r][k][1])))
}

/// On-disk representation of a density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub format: String,
    pub version: u32,
    pub dims: Vec<usize>,
    pub matrix: MatrixRows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<StateSpec>,
}

impl StateFile {
    pub fn from_state(rho: &DensityMatrix, metadata: Option<&StateSpec>) -> Self {
        Self {
            format: STATE_FORMAT.to_string(),
            version: STATE_VERSION,
            dims: rho.dims().to_vec(),
            matrix: matrix_rows(rho.matrix()),
            metadata: metadata.cloned(),
        }
    }

    pub fn to_state(&self) -> Result<DensityMatrix> {
        if self.format != STATE_FORMAT {
            return Err(Error::InvalidInput(format!(
                "unknown format `{}` (expected `{STATE_FORMAT}`)",
                self.format
            )));
        }
        if self.version != STATE_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported state file version {}",
                self.version
            )));
        }
        DensityMatrix::new(self.dims.clone(), matrix_from_rows(&self.matrix)?)
    }
}

fn parse_error(e: serde_json::Error) -> Error {
    // serde_json's Display appends the position, which `Error::Parse` prints itself
    let full = e.to_string();
    let suffix = format!(" at line {} column {}", e.line(), e.column());
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: full.strip_suffix(&suffix).unwrap_or(&full).to_string(),
    }
}

pub fn state_to_json(rho: &DensityMatrix, metadata: Option<&StateSpec>) -> String {
    serde_json::to_string_pretty(&StateFile::from_state(rho, metadata))
        .expect("state files always serialize")
}

pub fn state_from_json(text: &str) -> Result<(DensityMatrix, Option<StateSpec>)> {
    if text.trim().is_empty() {
        return Err(Error::InvalidInput("state file is empty".into()));
    }
    let file: StateFile = serde_json::from_str(text).map_err(parse_error)?;
    let rho = file.to_state()?;
    Ok((rho, file.metadata))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

pub fn load_state(path: &Path) -> Result<(DensityMatrix, Option<StateSpec>)> {
    state_from_json(&read(path)?)
}

pub fn save_state(path: &Path, rho: &DensityMatrix, metadata: Option<&StateSpec>) -> Result<()> {
    fs::write(path, state_to_json(rho, metadata) + "\n")
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

/// An operator file is either a bare array of rows or `{"matrix": rows}`.
#[derive(Deserialize)]
#[serde(untagged)]
enum OperatorFile {
    Bare(MatrixRows),
    Wrapped { matrix: MatrixRows },
}

pub fn operator_from_json(text: &str) -> Result<HermitianOperator> {
    let file: OperatorFile = serde_json::from_str(text).map_err(parse_error)?;
    let rows = match file {
        OperatorFile::Bare(rows) | OperatorFile::Wrapped { matrix: rows } => rows,
    };
    HermitianOperator::new(matrix_from_rows(&rows)?)
}

pub fn load_operator(path: &Path) -> Result<HermitianOperator> {
    operator_from_json(&read(path)?)
}

/// Versioned envelope around every JSON report.
#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub schema: &'a str,
    pub version: u32,
    #[serde(flatten)]
    pub body: &'a T,
}

pub fn report_json<T: Serialize>(schema: &str, body: &T) -> String {
    serde_json::to_string_pretty(&Report {
        schema,
        version: REPORT_VERSION,
        body,
    })
    .expect("reports always serialize")
}
