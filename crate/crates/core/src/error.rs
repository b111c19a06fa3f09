use std::fmt;

/// Residuals measured when a matrix fails the density-matrix checks.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct InvariantResiduals {
    /// max |ρ − ρ†|
    pub hermiticity: f64,
    /// |Tr ρ − 1|
    pub trace: f64,
    /// Smallest eigenvalue of the Hermitian part.
    pub min_eigenvalue: f64,
}

impl fmt::Display for InvariantResiduals {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "hermiticity residual {:.3e}, trace residual {:.3e}, min eigenvalue {:.3e}",
            self.hermiticity, self.trace, self.min_eigenvalue
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid subsystem index {index} for a system of {count} subsystems")]
    InvalidSubsystem { index: usize, count: usize },

    #[error("matrix is not Hermitian (max |m - m^dagger| = {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("not a valid density matrix: {0}")]
    Invariant(InvariantResiduals),

    #[error("vector is not normalized (|norm - 1| = {residual:.3e})")]
    NotNormalized { residual: f64 },

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    range: &'static str,
) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, range })
    }
}
