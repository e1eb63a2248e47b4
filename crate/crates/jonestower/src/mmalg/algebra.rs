//! Core value types: multi-matrix *-algebras, trace states, elements.

use std::sync::Arc;

use super::linalg::{
    cr, eye, fro_norm, kron, ptrace_mid, weighted_dot, CMat, C64,
};
use crate::{Result, TowerError};

/// A faithful tracial state on a multi-matrix algebra, given by its block
/// weights together with the diagonal density realizing it in the ambient
/// representation: tr(x) = Σᵢ density[i]·x[i,i].
#[derive(Clone, Debug)]
pub struct TraceState {
    /// Trace of a minimal projection in each block, in block order.
    pub weights: Vec<f64>,
    /// Diagonal of the trace density in the ambient representation.
    pub density: Vec<f64>,
}

impl TraceState {
    /// The normalized matrix trace on M_d.
    pub fn uniform(d: usize) -> Self {
        TraceState {
            weights: vec![1.0 / d as f64],
            density: vec![1.0 / d as f64; d],
        }
    }

    pub fn eval(&self, m: &CMat) -> C64 {
        debug_assert_eq!(m.nrows(), self.density.len());
        let mut acc = C64::new(0.0, 0.0);
        for (i, &w) in self.density.iter().enumerate() {
            acc += m[(i, i)] * cr(w);
        }
        acc
    }

    /// tr(1); should be 1 for a state.
    pub fn total(&self) -> f64 {
        self.density.iter().sum()
    }
}

/// How an algebra's linear span is represented. Large box spaces are kept
/// structural; explicit bases are materialized only for small algebras.
#[derive(Clone, Debug)]
pub enum AlgebraRepr {
    /// The full matrix algebra on the ambient space.
    Full,
    /// 1_left ⊗ M_mid ⊗ 1_right inside M_{left·mid·right}. Requires the
    /// ambient trace to be the normalized matrix trace.
    TensorFactor {
        left: usize,
        mid: usize,
        right: usize,
    },
    /// An explicit span, stored both as the caller's basis and as a basis
    /// orthonormal with respect to the ambient trace inner product.
    Explicit { basis: Vec<CMat>, onb: Vec<CMat> },
}

/// A finite-dimensional *-algebra of complex matrices inside an ambient
/// matrix space, with block structure and trace data.
#[derive(Clone, Debug)]
pub struct MultiMatrixAlgebra {
    pub ambient_dim: usize,
    pub repr: AlgebraRepr,
    /// Sizes n_k of the full matrix blocks, in canonical order.
    pub block_dims: Vec<usize>,
    /// Ambient matrix of the algebra's identity (always the ambient identity
    /// for the unital inclusions handled here).
    pub unit: CMat,
    /// The faithful tracial state carried by the algebra.
    pub trace: TraceState,
}

impl MultiMatrixAlgebra {
    /// Full matrix algebra M_d with its normalized trace.
    pub fn full(d: usize) -> Self {
        MultiMatrixAlgebra {
            ambient_dim: d,
            repr: AlgebraRepr::Full,
            block_dims: vec![d],
            unit: eye(d),
            trace: TraceState::uniform(d),
        }
    }

    /// The algebra 1_left ⊗ M_mid ⊗ 1_right inside M_{left·mid·right},
    /// carrying the restriction of the normalized ambient trace.
    pub fn tensor_factor(left: usize, mid: usize, right: usize) -> Self {
        let d = left * mid * right;
        MultiMatrixAlgebra {
            ambient_dim: d,
            repr: AlgebraRepr::TensorFactor { left, mid, right },
            block_dims: vec![mid],
            unit: eye(d),
            trace: TraceState {
                weights: vec![1.0 / mid as f64],
                density: vec![1.0 / d as f64; d],
            },
        }
    }

    /// Linear dimension of the algebra.
    pub fn dimension(&self) -> usize {
        match &self.repr {
            AlgebraRepr::Full => self.ambient_dim * self.ambient_dim,
            AlgebraRepr::TensorFactor { mid, .. } => mid * mid,
            AlgebraRepr::Explicit { onb, .. } => onb.len(),
        }
    }

    /// Trace of an ambient matrix against this algebra's trace state.
    pub fn tr(&self, x: &CMat) -> C64 {
        self.trace.eval(x)
    }

    /// Orthogonal projection of an ambient matrix onto the algebra's span,
    /// with respect to the trace inner product. For the structural
    /// representations this is the trace-preserving conditional expectation
    /// onto the algebra.
    pub fn project(&self, x: &CMat) -> CMat {
        match &self.repr {
            AlgebraRepr::Full => x.clone(),
            AlgebraRepr::TensorFactor { left, mid, right } => {
                let y = ptrace_mid(x, *left, *mid, *right);
                kron(&kron(&eye(*left), &y), &eye(*right))
            }
            AlgebraRepr::Explicit { onb, .. } => {
                let mut out = CMat::zeros(self.ambient_dim, self.ambient_dim);
                for b in onb {
                    let coef = weighted_dot(b, x, &self.trace.density);
                    out += b * coef;
                }
                out
            }
        }
    }

    /// Relative residual of membership: ‖x − P(x)‖ / max(1, ‖x‖).
    pub fn membership_residual(&self, x: &CMat) -> f64 {
        let p = self.project(x);
        let num = fro_norm(&(x - p));
        num / fro_norm(x).max(1.0)
    }

    pub fn contains(&self, x: &CMat, tol: f64) -> bool {
        self.membership_residual(x) <= tol
    }

    /// Materialize a basis of the algebra. Guarded by a memory cap since
    /// high-level box spaces are far too large to store elementwise.
    pub fn basis_matrices(&self) -> Result<Vec<CMat>> {
        let dim = self.dimension();
        let d = self.ambient_dim;
        let bytes = dim
            .saturating_mul(d)
            .saturating_mul(d)
            .saturating_mul(16);
        if bytes > 256 * 1024 * 1024 {
            return Err(TowerError::DimensionCap(format!(
                "basis of dimension {} in M_{} would need {} MB",
                dim,
                d,
                bytes / (1024 * 1024)
            )));
        }
        Ok(match &self.repr {
            AlgebraRepr::Full => {
                let mut out = Vec::with_capacity(dim);
                for i in 0..d {
                    for j in 0..d {
                        out.push(super::linalg::matrix_unit(d, i, j));
                    }
                }
                out
            }
            AlgebraRepr::TensorFactor { left, mid, right } => {
                let mut out = Vec::with_capacity(dim);
                for i in 0..*mid {
                    for j in 0..*mid {
                        let f = super::linalg::matrix_unit(*mid, i, j);
                        out.push(kron(&kron(&eye(*left), &f), &eye(*right)));
                    }
                }
                out
            }
            AlgebraRepr::Explicit { basis, .. } => basis.clone(),
        })
    }

    /// Basis orthonormal with respect to the trace inner product; used for
    /// sampling and subspace projections.
    pub fn orthonormal_basis(&self) -> Result<Vec<CMat>> {
        match &self.repr {
            AlgebraRepr::Explicit { onb, .. } => Ok(onb.clone()),
            AlgebraRepr::Full => {
                let d = self.ambient_dim;
                let scale = (d as f64).sqrt();
                Ok(self
                    .basis_matrices()?
                    .into_iter()
                    .map(|m| m.scale(scale))
                    .collect())
            }
            AlgebraRepr::TensorFactor { mid, .. } => {
                let scale = (*mid as f64).sqrt();
                Ok(self
                    .basis_matrices()?
                    .into_iter()
                    .map(|m| m.scale(scale))
                    .collect())
            }
        }
    }
}

/// A member of a named algebra, stored as its ambient matrix.
#[derive(Clone, Debug)]
pub struct Element {
    pub algebra: Arc<MultiMatrixAlgebra>,
    pub mat: CMat,
}

impl Element {
    /// Wrap a matrix, verifying span membership at the given tolerance.
    pub fn new(algebra: Arc<MultiMatrixAlgebra>, mat: CMat, tol: f64) -> Result<Self> {
        if mat.nrows() != algebra.ambient_dim || mat.ncols() != algebra.ambient_dim {
            return Err(TowerError::InvalidModel(format!(
                "element shape {}x{} does not match ambient dimension {}",
                mat.nrows(),
                mat.ncols(),
                algebra.ambient_dim
            )));
        }
        let res = algebra.membership_residual(&mat);
        if res > tol {
            return Err(TowerError::Verification(format!(
                "element lies outside the algebra span (residual {:.3e})",
                res
            )));
        }
        Ok(Element { algebra, mat })
    }

    /// Wrap without the membership check (for internal hot paths whose
    /// membership is structural).
    pub fn new_unchecked(algebra: Arc<MultiMatrixAlgebra>, mat: CMat) -> Self {
        Element { algebra, mat }
    }

    pub fn trace(&self) -> C64 {
        self.algebra.tr(&self.mat)
    }

    pub fn adjoint(&self) -> Element {
        Element {
            algebra: Arc::clone(&self.algebra),
            mat: self.mat.adjoint(),
        }
    }
}

#[cfg(test)]
mod test {
    use super::*;
    use crate::mmalg::linalg::{matrix_unit, rel_fro_dist};
    use crate::mmalg::random::{random_in, rng_for};

    #[test]
    fn trace_states_are_normalized() {
        assert!((TraceState::uniform(5).total() - 1.0).abs() < 1e-15);
        let alg = MultiMatrixAlgebra::tensor_factor(2, 3, 4);
        assert!((alg.trace.total() - 1.0).abs() < 1e-12);
        assert!((alg.tr(&alg.unit).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_factor_projection_is_idempotent_expectation() {
        let amb = MultiMatrixAlgebra::full(12);
        let sub = MultiMatrixAlgebra::tensor_factor(2, 3, 2);
        let mut rng = rng_for(21, "algebra-proj");
        for _ in 0..8 {
            let x = random_in(&amb, &mut rng);
            let p = sub.project(&x);
            assert!(sub.contains(&p, 1e-10));
            assert!(rel_fro_dist(&sub.project(&p), &p) < 1e-12);
            assert!((amb.tr(&p) - amb.tr(&x)).norm() < 1e-12);
        }
    }

    #[test]
    fn membership_detects_outsiders() {
        let sub = MultiMatrixAlgebra::tensor_factor(2, 2, 1);
        // lives in the left factor, not the right one
        let outsider = kron(&matrix_unit(2, 0, 1), &eye(2));
        assert!(!sub.contains(&outsider, 1e-6));
        let insider = kron(&eye(2), &matrix_unit(2, 0, 1));
        assert!(sub.contains(&insider, 1e-12));
    }

    #[test]
    fn orthonormal_bases_are_orthonormal() {
        for alg in [
            MultiMatrixAlgebra::full(3),
            MultiMatrixAlgebra::tensor_factor(2, 2, 2),
        ] {
            let onb = alg.orthonormal_basis().unwrap();
            assert_eq!(onb.len(), alg.dimension());
            for (i, a) in onb.iter().enumerate() {
                for (j, b) in onb.iter().enumerate() {
                    let g = weighted_dot(a, b, &alg.trace.density);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((g - cr(want)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn element_constructor_enforces_membership() {
        let sub = Arc::new(MultiMatrixAlgebra::tensor_factor(2, 2, 1));
        let bad = kron(&matrix_unit(2, 0, 1), &eye(2));
        assert!(Element::new(sub.clone(), bad, 1e-9).is_err());
        let good = kron(&eye(2), &matrix_unit(2, 1, 0));
        let e = Element::new(sub.clone(), good, 1e-9).unwrap();
        assert!((e.trace()).norm() < 1e-12);
        let unit = Element::new(sub, eye(4), 1e-9).unwrap();
        assert!((unit.trace().re - 1.0).abs() < 1e-12);
    }
}
