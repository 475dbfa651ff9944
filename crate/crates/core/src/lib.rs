//! Fisher information of parameterized bipartite quantum states under
//! restricted measurement classes.
//!
//! A one-parameter family of density matrices `ρ_θ` carries a quantum Fisher
//! information (QFI), the supremum of the classical Fisher information of the
//! outcome distribution over all measurements. When the state is shared
//! between two parties, restricting the measurement class produces a hierarchy
//! of values between zero and the QFI:
//!
//! ```text
//! local (one party)  ≤  product  ≤  adaptive (one-way classical
//! communication)  ≤  global
//! ```
//!
//! The crate computes closed-form values where they exist (local and global,
//! via the symmetric logarithmic derivative) and certified lower bounds for
//! the optimized classes (product and adaptive, via multi-start derivative-free
//! search over projective measurements). [`fisher::hierarchy_report`] bundles
//! all six values with chain-inequality verdicts; [`channels`] pushes families
//! through quantum channels to trace how the hierarchy redistributes;
//! [`oracle`] provides an independent dense-grid check for two-qubit states.
//!
//! Matrices are dense, row-major, `Complex64`; dimensions are desk-scale
//! (products of qubits and qutrits), so everything is `O(d³)` direct
//! algorithms with deterministic, seedable randomness.

#![forbid(unsafe_code)]

use thiserror::Error;

pub mod channels;
pub mod fisher;
pub mod json;
pub mod matcore;
pub mod optim;
pub mod oracle;
pub mod povm;
pub mod sample;
pub mod states;

/// Errors reported by every fallible operation in the crate.
#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    /// Matrix expected Hermitian; `residual` is `max |m - m†|`.
    #[error("matrix is not Hermitian (residual {residual:.3e}, tolerance {tol:.3e})")]
    NotHermitian { residual: f64, tol: f64 },

    /// Jacobi eigensolver failed to reach its off-diagonal threshold.
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },

    /// Operand shapes are inconsistent with each other or with declared dims.
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    /// Candidate density matrix failed validation.
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    /// Candidate POVM failed validation.
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    /// Parameter value outside the family's domain.
    #[error("theta {theta} outside the domain of family `{family}`")]
    ThetaOutOfDomain { theta: f64, family: String },

    /// Family has no closed-form derivative; use a finite-difference scheme.
    #[error("analytic derivative unavailable for family `{0}`")]
    AnalyticUnavailable(String),

    /// Name does not identify a builtin family or preset.
    #[error("unknown name `{0}`")]
    UnknownName(String),

    /// Adaptive measurement is missing a conditional stage.
    #[error("adaptive POVM has {got} conditional stages for {want} first-stage outcomes")]
    MissingConditional { got: usize, want: usize },

    /// Derivative input must be traceless.
    #[error("operator is not traceless (|trace| = {0:.3e})")]
    NotTraceless(f64),

    /// State vector must have unit norm.
    #[error("vector is not normalized (norm = {0})")]
    NotNormalized(f64),

    /// An outcome has vanishing probability but non-vanishing sensitivity;
    /// the Fisher sum diverges at this point.
    #[error("singular outcome {outcome}: p = {p:.3e} below {p_tol:.3e} with |dp| = {dp:.3e}")]
    SingularOutcome {
        outcome: usize,
        p: f64,
        dp: f64,
        p_tol: f64,
    },

    /// Kraus operators do not sum to the identity (not trace preserving).
    #[error("channel is not trace preserving (residual {0:.3e})")]
    NotTracePreserving(f64),

    /// Controlled-unitary block is not unitary.
    #[error("conditional block {index} is not unitary (residual {residual:.3e})")]
    NotUnitaryBlock { index: usize, residual: f64 },

    /// Input specification (JSON or CLI config) is malformed.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
