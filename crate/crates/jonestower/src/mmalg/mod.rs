//! Multi-matrix *-algebras with a fixed faithful trace.
//!
//! This layer knows nothing about towers: it provides finite-dimensional
//! C*-algebras represented inside a matrix ambient, block decomposition,
//! commutants, trace-compatible conditional expectations, Lp norms, and
//! seeded random sampling. Everything upstream is built on it.

pub mod algebra;
pub mod blocks;
pub mod commutant;
pub mod functionals;
pub mod linalg;
pub mod random;

pub use algebra::{AlgebraRepr, Element, MultiMatrixAlgebra, TraceState};
pub use blocks::{algebra_from_span, block_decompose, BlockData, BlockDecomposition};
pub use commutant::commutant;
pub use functionals::{
    conditional_expectation, entropy_functional, eta, p_norm, support_size, weighted_spectrum,
};
pub use linalg::{CMat, CVec, C64};
pub use random::{random_element, rng_for};
