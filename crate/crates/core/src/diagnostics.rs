//! Physicality and conservation measures recorded at each trajectory sample.
//!
//! Positivity is only reported, never repaired.

use crate::error::Result;
use crate::generators::{GaussianState, State};
use crate::linalg::{bloch_vector, hermitian_eigenvalues, ComplexMatrix};

/// A 2×2 state counts as non-positive once its Bloch norm exceeds `1 + this`.
pub const BLOCH_VIOLATION_THRESHOLD: f64 = 1e-6;

/// A Gaussian state is physical while `sqq·spp − sqp² ≥ 1/4 − this`.
pub const RS_TOLERANCE: f64 = 1e-9;

/// Per-sample diagnostics; fields that do not apply to the state are `None`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiagnosticsRecord {
    pub trace_error: Option<f64>,
    pub hermiticity_error: Option<f64>,
    pub min_eigenvalue: Option<f64>,
    /// Two-level states only.
    pub bloch_norm: Option<f64>,
    /// Gaussian states only.
    pub rs_value: Option<f64>,
}

impl DiagnosticsRecord {
    /// Fields of `other` fill in the ones missing here.
    pub fn merge(self, other: DiagnosticsRecord) -> DiagnosticsRecord {
        DiagnosticsRecord {
            trace_error: self.trace_error.or(other.trace_error),
            hermiticity_error: self.hermiticity_error.or(other.hermiticity_error),
            min_eigenvalue: self.min_eigenvalue.or(other.min_eigenvalue),
            bloch_norm: self.bloch_norm.or(other.bloch_norm),
            rs_value: self.rs_value.or(other.rs_value),
        }
    }

    /// True when any recorded positivity measure signals a violation.
    pub fn positivity_violated(&self) -> bool {
        let bloch = self.bloch_norm.is_some_and(|b| b > 1.0 + BLOCH_VIOLATION_THRESHOLD);
        let eig = self.bloch_norm.is_none() && self.min_eigenvalue.is_some_and(|e| e < 0.0);
        let rs = self.rs_value.is_some_and(|v| v < 0.25 - RS_TOLERANCE);
        bloch || eig || rs
    }
}

/// Smallest eigenvalue and, for 2×2 states, the Bloch norm.
pub fn positivity_report(r: &ComplexMatrix) -> Result<DiagnosticsRecord> {
    let eig = hermitian_eigenvalues(&r.hermitian_part())?;
    let bloch_norm = if r.dim() == 2 {
        let [x, y, z] = bloch_vector(r)?;
        Some((x * x + y * y + z * z).sqrt())
    } else {
        None
    };
    Ok(DiagnosticsRecord { min_eigenvalue: eig.first().copied(), bloch_norm, ..Default::default() })
}

/// `|Tr r − 1|` and `max |r_ij − conj(r_ji)|`.
pub fn conservation_report(r: &ComplexMatrix) -> DiagnosticsRecord {
    DiagnosticsRecord {
        trace_error: Some((r.trace() - 1.0).norm()),
        hermiticity_error: Some(r.hermiticity_error()),
        ..Default::default()
    }
}

/// Robertson-Schrödinger value `sqq·spp − sqp²`.
pub fn rs_uncertainty(s: &GaussianState) -> f64 {
    s.sqq * s.spp - s.sqp * s.sqp
}

/// Full record for any state.
pub fn diagnose(state: &State) -> Result<DiagnosticsRecord> {
    match state {
        State::Matrix(r) => Ok(conservation_report(r).merge(positivity_report(r)?)),
        State::Gaussian(g) => Ok(DiagnosticsRecord { rs_value: Some(rs_uncertainty(g)), ..Default::default() }),
    }
}
