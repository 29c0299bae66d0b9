use thiserror::Error;

/// Errors surfaced by the lattice, propagation, transition, and asymptotic
/// routines. Numeric payloads are reported in `f64` regardless of the working
/// scalar type.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid lattice parameters: {0}")]
    InvalidParams(String),

    #[error("dimer index {dimer} outside [-{half_width}, {half_width}]")]
    DimerOutOfRange { dimer: i64, half_width: i64 },

    #[error("dense eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("winding number undefined: min_k |nu_k| = {min_abs:.3e} below tolerance {tol:.3e}")]
    DegenerateWinding { min_abs: f64, tol: f64 },

    #[error("matrix exponential would overflow: predicted log-norm {log_norm:.3e}")]
    ScaleOverflow { log_norm: f64 },

    #[error("integrator step underflow: required step {step:.3e} below 1e-12")]
    StepUnderflow { step: f64 },

    #[error("absorbed distribution undefined at gamma = 0")]
    GammaZero,

    #[error("Bloch block is not in the broken regime: |nu_k| = {nu_k_abs:.6} >= gamma = {gamma:.6}")]
    NotBroken { nu_k_abs: f64, gamma: f64 },

    #[error("asymptotic parameters require gamma > |nu - nu_prime| (got gamma = {gamma:.6}, threshold = {gamma_pt:.6})")]
    NotAmplifying { gamma: f64, gamma_pt: f64 },

    #[error("profile is identically zero")]
    AllZeroProfile,

    #[error("profile length mismatch: {left} vs {right}")]
    ShapeMismatch { left: usize, right: usize },
}
