//! Trace functionals: conditional expectations, noncommutative Lp norms,
//! spectral support size, and the entropy functional.
//!
//! All of these are taken with respect to a fixed faithful tracial state
//! carried in a `TraceState`. Eigenvalues of x†x are weighted by the trace
//! density expressed in the eigenbasis, which keeps every formula valid for
//! non-uniform block trace weights.

use std::sync::Arc;

use super::algebra::{Element, MultiMatrixAlgebra, TraceState};
use super::linalg::{dagger, hermitian_eig, mat_mul, CMat};
use crate::{Result, TowerError};

/// Eigenvalues of a Hermitian matrix paired with their trace weights: the
/// weight of eigenvector v is ⟨v, ρv⟩ where ρ is the diagonal trace density.
/// Weights sum to tr(1) = 1 and tr(f(h)) = Σ w_i f(λ_i).
pub fn weighted_spectrum(h: &CMat, tr: &TraceState) -> Vec<(f64, f64)> {
    let (vals, vecs) = hermitian_eig(h);
    let d = h.nrows();
    vals.iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut w = 0.0;
            for r in 0..d {
                w += tr.density[r] * vecs[(r, i)].norm_sqr();
            }
            (v, w)
        })
        .collect()
}

/// Trace-orthogonal projection of x onto a subalgebra: the unique
/// conditional expectation compatible with the ambient trace.
pub fn conditional_expectation(
    x: &Element,
    sub: &Arc<MultiMatrixAlgebra>,
    tol: f64,
) -> Result<Element> {
    if sub.ambient_dim != x.algebra.ambient_dim {
        return Err(TowerError::InvalidModel(
            "conditional expectation target lives in a different ambient space".into(),
        ));
    }
    let projected = sub.project(&x.mat);
    Element::new(sub.clone(), projected, tol)
}

/// Noncommutative Lp norm ‖x‖_p = tr(|x|^p)^{1/p}; p = ∞ gives the
/// operator norm. Requires p ≥ 1.
pub fn p_norm(x: &CMat, tr: &TraceState, p: f64) -> f64 {
    let xx = mat_mul(&dagger(x), x);
    let spec = weighted_spectrum(&xx, tr);
    if p.is_infinite() {
        return spec
            .iter()
            .map(|&(v, _)| v.max(0.0).sqrt())
            .fold(0.0, f64::max);
    }
    let s: f64 = spec
        .iter()
        .map(|&(v, w)| w * v.max(0.0).powf(p / 2.0))
        .sum();
    s.max(0.0).powf(1.0 / p)
}

/// Trace of the range projection of x: the weighted count of singular
/// values above tol·σ_max. Zero for x = 0.
pub fn support_size(x: &CMat, tr: &TraceState, tol: f64) -> f64 {
    let xx = mat_mul(x, &dagger(x));
    let spec = weighted_spectrum(&xx, tr);
    let smax = spec.iter().map(|&(v, _)| v.max(0.0)).fold(0.0, f64::max).sqrt();
    if smax == 0.0 {
        return 0.0;
    }
    let cut = tol * smax;
    spec.iter()
        .filter(|&&(v, _)| v.max(0.0).sqrt() > cut)
        .map(|&(_, w)| w)
        .sum()
}

/// η(t) = −t·log t, with η(0) = 0.
pub fn eta(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -t * t.ln()
    }
}

/// Entropy functional tr(η(y)) for positive semidefinite y, using the
/// normalized trace. Negative eigenvalues beyond tolerance are an error;
/// small negative noise is clamped to zero.
pub fn entropy_functional(y: &CMat, tr: &TraceState, tol: f64) -> Result<f64> {
    let spec = weighted_spectrum(y, tr);
    let vmax = spec.iter().map(|&(v, _)| v.abs()).fold(0.0, f64::max);
    let floor = -(tol * vmax.max(1.0)).max(1e-12);
    for &(v, _) in &spec {
        if v < floor {
            return Err(TowerError::Numerical(format!(
                "entropy functional applied to a non-positive matrix (eigenvalue {:.3e})",
                v
            )));
        }
    }
    Ok(spec.iter().map(|&(v, w)| w * eta(v.max(0.0))).sum())
}

#[cfg(test)]
mod test {
    use super::*;
    use crate::mmalg::algebra::MultiMatrixAlgebra;
    use crate::mmalg::linalg::{cr, eye, matrix_unit, rel_fro_dist};
    use crate::mmalg::random::{random_in, rng_for};
    use approx::assert_relative_eq;

    fn full(d: usize) -> Arc<MultiMatrixAlgebra> {
        Arc::new(MultiMatrixAlgebra::full(d))
    }

    #[test]
    fn expectation_onto_scalars_is_the_trace() {
        let m4 = full(4);
        let scalars = Arc::new(MultiMatrixAlgebra::tensor_factor(1, 1, 4));
        let mut rng = rng_for(3, "exp-scalar");
        let x = random_in(&m4, &mut rng);
        let e = scalars.project(&x);
        let expected = eye(4) * m4.tr(&x);
        assert!(rel_fro_dist(&e, &expected) < 1e-12);
    }

    #[test]
    fn expectation_is_idempotent_and_trace_preserving() {
        let m6 = full(6);
        let sub = Arc::new(MultiMatrixAlgebra::tensor_factor(2, 3, 1));
        let mut rng = rng_for(4, "exp-idem");
        for _ in 0..8 {
            let x = random_in(&m6, &mut rng);
            let once = sub.project(&x);
            let twice = sub.project(&once);
            assert!(rel_fro_dist(&twice, &once) < 1e-12);
            assert!((m6.tr(&once) - m6.tr(&x)).norm() < 1e-12);
        }
    }

    #[test]
    fn expectation_bimodule_property_sampled() {
        // E(a x b) = a E(x) b for a, b in the subalgebra
        let m6 = full(6);
        let sub = Arc::new(MultiMatrixAlgebra::tensor_factor(1, 3, 2));
        let mut rng = rng_for(5, "exp-bimodule");
        for _ in 0..8 {
            let x = random_in(&m6, &mut rng);
            let a = random_in(&sub, &mut rng);
            let b = random_in(&sub, &mut rng);
            let lhs = sub.project(&mat_mul(&mat_mul(&a, &x), &b));
            let rhs = mat_mul(&mat_mul(&a, &sub.project(&x)), &b);
            assert!(rel_fro_dist(&lhs, &rhs) < 1e-10);
        }
    }

    #[test]
    fn p_norm_of_unit_and_projection() {
        let m4 = full(4);
        let unit = eye(4);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_relative_eq!(p_norm(&unit, &m4.trace, p), 1.0, max_relative = 1e-12);
        }
        // rank-1 projection in M4 has normalized trace 1/4
        let e11 = matrix_unit(4, 0, 0);
        assert_relative_eq!(p_norm(&e11, &m4.trace, 1.0), 0.25, max_relative = 1e-12);
        assert_relative_eq!(p_norm(&e11, &m4.trace, 2.0), 0.5, max_relative = 1e-12);
        assert_relative_eq!(p_norm(&e11, &m4.trace, f64::INFINITY), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn p_norm_is_monotone_in_p_for_normalized_trace() {
        let m4 = full(4);
        let mut rng = rng_for(6, "lp-monotone");
        for _ in 0..16 {
            let x = random_in(&m4, &mut rng);
            let mut prev = p_norm(&x.clone(), &m4.trace, 1.0);
            for p in [1.5, 2.0, 3.0, 8.0, f64::INFINITY] {
                let cur = p_norm(&x, &m4.trace, p);
                assert!(cur >= prev - 1e-10, "p-norm decreased: {} -> {}", prev, cur);
                prev = cur;
            }
        }
    }

    #[test]
    fn hoelder_two_two_one_sampled() {
        let m4 = full(4);
        let mut rng = rng_for(7, "hoelder");
        for _ in 0..16 {
            let x = random_in(&m4, &mut rng);
            let y = random_in(&m4, &mut rng);
            let lhs = p_norm(&mat_mul(&x, &y), &m4.trace, 1.0);
            let rhs = p_norm(&x, &m4.trace, 2.0) * p_norm(&y, &m4.trace, 2.0);
            assert!(lhs <= rhs + 1e-10);
        }
    }

    #[test]
    fn support_size_of_unit_and_projection() {
        let m4 = full(4);
        assert_relative_eq!(support_size(&eye(4), &m4.trace, 1e-9), 1.0, max_relative = 1e-12);
        let p = matrix_unit(4, 0, 0) + matrix_unit(4, 1, 1);
        assert_relative_eq!(support_size(&p, &m4.trace, 1e-9), 0.5, max_relative = 1e-12);
        assert_eq!(support_size(&CMat::zeros(4, 4), &m4.trace, 1e-9), 0.0);
    }

    #[test]
    fn entropy_functional_values() {
        let m2 = full(2);
        // unit: eigenvalues 1, η(1) = 0
        assert_relative_eq!(
            entropy_functional(&eye(2), &m2.trace, 1e-9).unwrap(),
            0.0,
            epsilon = 1e-14
        );
        // (1/2)·1 in M2 under the normalized trace: tr η((1/2)1) = η(1/2) = (1/2)log 2
        let half = eye(2) * cr(0.5);
        assert_relative_eq!(
            entropy_functional(&half, &m2.trace, 1e-9).unwrap(),
            0.5 * 2.0_f64.ln(),
            max_relative = 1e-12
        );
        // scaling by the dimension recovers the von Neumann entropy of the
        // corresponding density matrix: 2 · (1/2)log 2 = log 2
        assert_relative_eq!(
            2.0 * entropy_functional(&half, &m2.trace, 1e-9).unwrap(),
            2.0_f64.ln(),
            max_relative = 1e-12
        );
        // projections contribute η(1) = η(0) = 0
        let p = matrix_unit(2, 0, 0);
        assert_relative_eq!(
            entropy_functional(&p, &m2.trace, 1e-9).unwrap(),
            0.0,
            epsilon = 1e-14
        );
        // a genuinely negative matrix is rejected
        let neg = eye(2) * cr(-1.0);
        assert!(entropy_functional(&neg, &m2.trace, 1e-9).is_err());
    }

    #[test]
    fn weighted_spectrum_respects_block_weights() {
        // trace density for M2 ⊕ M1 inside diag(M3): weights (3/8, 1/4),
        // tr(1) = 2·(3/8) + 1/4 = 1
        let density = vec![3.0 / 8.0, 3.0 / 8.0, 0.25];
        let tr = TraceState {
            weights: vec![3.0 / 8.0, 0.25],
            density,
        };
        let p = matrix_unit(3, 2, 2);
        let spec = weighted_spectrum(&p, &tr);
        let total: f64 = spec.iter().map(|&(_, w)| w).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-12);
        let tr_p: f64 = spec.iter().map(|&(v, w)| v * w).sum();
        assert_relative_eq!(tr_p, 0.25, max_relative = 1e-12);
    }
}
