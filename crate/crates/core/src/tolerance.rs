//! Numerical tolerances shared by every module.
//!
//! A process-wide copy lives behind a lock so that front ends (the CLI's
//! `--tol` flag) can adjust it once at start-up. Library code reads it through
//! [`tolerances`]; nothing mutates it mid-computation.

use std::sync::RwLock;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Hermiticity check, max |m − m†|.
    pub herm: f64,
    /// |Tr ρ − 1|.
    pub trace: f64,
    /// |‖ψ‖ − 1|.
    pub norm: f64,
    /// Eigenvalues above −psd count as non-negative; below +psd count as zero
    /// when computing ranks.
    pub psd: f64,
    /// Eigendecomposition reconstruction and unitarity.
    pub eig: f64,
    /// Two Bohr frequencies closer than this are the same frequency.
    pub freq: f64,
    /// A residual at or below this means the condition holds.
    pub holds: f64,
    /// A residual at or above this means the condition fails. Residuals
    /// strictly between `holds` and `fails` are reported as inconclusive.
    pub fails: f64,
    /// Pairs with λ_i + λ_j at or below this are dropped from the QFI sum.
    pub qfi_cutoff: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        herm: 1e-10,
        trace: 1e-10,
        norm: 1e-10,
        psd: 1e-9,
        eig: 1e-10,
        freq: 1e-8,
        holds: 1e-9,
        fails: 1e-6,
        qfi_cutoff: 1e-12,
    };

    /// Sets one field by name. Used by configuration front ends.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), String> {
        if !(value.is_finite() && value > 0.0) {
            return Err(format!("tolerance {key} must be positive and finite"));
        }
        let mut next = *self;
        let slot = match key {
            "herm" => &mut next.herm,
            "trace" => &mut next.trace,
            "norm" => &mut next.norm,
            "psd" => &mut next.psd,
            "eig" => &mut next.eig,
            "freq" => &mut next.freq,
            "holds" => &mut next.holds,
            "fails" => &mut next.fails,
            "qfi_cutoff" => &mut next.qfi_cutoff,
            other => return Err(format!("unknown tolerance key `{other}`")),
        };
        *slot = value;
        if next.holds > next.fails {
            return Err("tolerance `holds` must not exceed `fails`".into());
        }
        *self = next;
        Ok(())
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

static GLOBAL: RwLock<Tolerances> = RwLock::new(Tolerances::DEFAULT);

/// The current process-wide tolerances.
pub fn tolerances() -> Tolerances {
    *GLOBAL.read().unwrap_or_else(|e| e.into_inner())
}

/// Replaces the process-wide tolerances.
pub fn set_tolerances(tol: Tolerances) {
    *GLOBAL.write().unwrap_or_else(|e| e.into_inner()) = tol;
}

/// Three-way outcome of a residual test against the hold/fail band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    /// Classifies a residual that should vanish for the condition to hold.
    pub fn from_residual(residual: f64, tol: &Tolerances) -> Verdict {
        if residual <= tol.holds {
            Verdict::Holds
        } else if residual >= tol.fails {
            Verdict::Fails
        } else {
            Verdict::Inconclusive
        }
    }

    /// Classifies a quantity that must be non-zero for the condition to hold.
    pub fn from_nonzero(magnitude: f64, tol: &Tolerances) -> Verdict {
        if magnitude >= tol.fails {
            Verdict::Holds
        } else if magnitude <= tol.holds {
            Verdict::Fails
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fails, _) | (_, Verdict::Fails) => Verdict::Fails,
            (Verdict::Holds, Verdict::Holds) => Verdict::Holds,
            _ => Verdict::Inconclusive,
        }
    }

    pub fn holds(self) -> bool {
        self == Verdict::Holds
    }
}
