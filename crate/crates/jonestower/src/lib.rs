//! Finite-dimensional Jones towers with a verified Fourier calculus.
//!
//! This crate builds basic-construction towers B ⊂ A ⊂ A₁ ⊂ A₂ ⊂ ⋯ for
//! matrix-algebra inclusions, equips them with Markov traces, minimal
//! conditional expectations, Jones projections and quasi-bases, and then
//! implements the harmonic analysis living on the relative commutants:
//! Fourier transforms between box spaces, rotation and reflection operators,
//! convolution, shift operators and the canonical shift, together with the
//! uncertainty-type inequalities (Hausdorff–Young, Donoho–Stark,
//! Hirschman–Beckner, Young) and the entropy/index machinery
//! (inclusion matrices, Perron–Frobenius data, Connes–Størmer quantities).
//!
//! Everything is desk-scale numerics: dense complex `f64` matrices, explicit
//! tolerances, and deterministic seeded sampling. The crate is a library plus
//! a CLI (`jonestower`) that runs the verification suites and emits
//! machine-readable reports.
//!
//! Module map:
//! - [`mmalg`] — multi-matrix *-algebras: block decomposition, commutants,
//!   trace-preserving conditional expectations, p-norms, entropy functionals.
//! - [`tower`] — the tower itself: levels, Jones projections, expectations,
//!   quasi-bases, Jones words, relative commutants, shifted views.
//! - [`fourier`] — Fourier transforms, rotations, reflections, convolutions,
//!   shifts S±ₙ, the canonical shift Γ, and their identity checks.
//! - [`harmonic`] — κ constants and the four inequality suites.
//! - [`entropy`] — inclusion matrices, Perron–Frobenius eigendata, depth
//!   detection, entropy growth, partition relative entropy.
//! - [`cli`] — config-driven orchestration and report emission.

pub mod cli;
pub mod entropy;
pub mod fourier;
pub mod harmonic;
pub mod mmalg;
pub mod tower;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum TowerError {
    /// A model or request would exceed a configured dimension/level cap.
    #[error("dimension cap exceeded: {0}")]
    DimensionCap(String),
    /// The inclusion description is invalid (non-unital, not *-closed, ...).
    #[error("invalid model: {0}")]
    InvalidModel(String),
    /// A numerical routine could not certify its result at tolerance.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Level or parameter out of the valid range.
    #[error("index out of range: {0}")]
    IndexRange(String),
    /// A mandatory built-in verification failed during construction.
    #[error("verification failed: {0}")]
    Verification(String),
    /// Malformed configuration input.
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TowerError>;
