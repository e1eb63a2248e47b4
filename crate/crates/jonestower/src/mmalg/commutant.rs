//! Relative commutants inside an ambient multi-matrix algebra.
//!
//! The commutant of a generator set is computed as an intersection of
//! nullspaces of commutator maps, expressed in coordinates of the ambient
//! algebra. Generators are augmented with their adjoints so the result is
//! always a *-subalgebra.

use super::algebra::MultiMatrixAlgebra;
use super::blocks::algebra_from_span;
use super::linalg::{dagger, fro_norm, mat_mul, nullspace_scaled, weighted_dot, CMat};
use crate::{Result, TowerError};

/// Commutant coordinates: columns of the returned matrix are coordinate
/// vectors (in `onb`) of a basis of {x ∈ span : [g, x] = 0 ∀g}.
fn commutant_coords(
    gens: &[CMat],
    onb: &[CMat],
    density: &[f64],
    tol: f64,
) -> CMat {
    let dim = onb.len();
    let mut v: Option<CMat> = None;
    for g in gens {
        let mut k = CMat::zeros(dim, dim);
        for (j, b) in onb.iter().enumerate() {
            let comm = mat_mul(g, b) - mat_mul(b, g);
            for (i, bi) in onb.iter().enumerate() {
                k[(i, j)] = weighted_dot(bi, &comm, density);
            }
        }
        // threshold scale: the size the map would have without the
        // cancellation in [g, x], so an (almost) centrally commuting g
        // yields a full nullspace instead of amplified roundoff
        let scale = 2.0 * fro_norm(g) * (dim as f64).sqrt();
        let kv = match &v {
            None => k,
            Some(v) => mat_mul(&k, v),
        };
        let ns = nullspace_scaled(&kv, tol, scale);
        v = Some(match v {
            None => ns,
            Some(v) => mat_mul(&v, &ns),
        });
        if v.as_ref().unwrap().ncols() == 0 {
            break;
        }
    }
    v.unwrap_or_else(|| CMat::identity(dim, dim))
}

/// Relative commutant {x ∈ ambient : xg = gx for all generators g},
/// returned as an algebra with block data and the restricted trace.
///
/// The ambient algebra must either expose an explicit basis or be small
/// enough (ambient dimension ≤ cap) to materialize one.
pub fn commutant(
    generators: &[CMat],
    ambient: &MultiMatrixAlgebra,
    tol: f64,
) -> Result<MultiMatrixAlgebra> {
    let d = ambient.ambient_dim;
    for g in generators {
        if g.nrows() != d || g.ncols() != d {
            return Err(TowerError::InvalidModel(
                "generator shape does not match the ambient algebra".into(),
            ));
        }
        if !ambient.contains(g, (tol * 1e3).max(1e-8)) {
            return Err(TowerError::InvalidModel(
                "generator does not lie in the ambient algebra".into(),
            ));
        }
    }
    // close the generator set under adjoints so the commutant is *-closed
    let mut gens: Vec<CMat> = Vec::with_capacity(generators.len() * 2);
    for g in generators {
        gens.push(g.clone());
        let gd = dagger(g);
        if fro_norm(&(&gd - g)) > tol * fro_norm(g).max(1.0) {
            gens.push(gd);
        }
    }
    let onb = ambient.orthonormal_basis()?;
    let density = &ambient.trace.density;
    let coords = commutant_coords(&gens, &onb, density, tol);
    let mut span: Vec<CMat> = Vec::with_capacity(coords.ncols());
    for c in 0..coords.ncols() {
        let mut x = CMat::zeros(d, d);
        for (i, b) in onb.iter().enumerate() {
            x += b * coords[(i, c)];
        }
        span.push(x);
    }
    if span.is_empty() {
        return Err(TowerError::Numerical(
            "commutant computation produced an empty span".into(),
        ));
    }
    algebra_from_span(&span, density.clone(), tol)
}

#[cfg(test)]
mod test {
    use super::*;
    use crate::mmalg::linalg::{eye, kron, matrix_unit};
    use crate::mmalg::random::{random_in, rng_for};

    #[test]
    fn commutant_of_full_algebra_is_scalars() {
        let m3 = MultiMatrixAlgebra::full(3);
        let gens: Vec<CMat> = vec![matrix_unit(3, 0, 1), matrix_unit(3, 1, 2)];
        let c = commutant(&gens, &m3, 1e-9).unwrap();
        assert_eq!(c.dimension(), 1);
        assert_eq!(c.block_dims, vec![1]);
    }

    #[test]
    fn commutant_of_scalars_is_everything() {
        let m3 = MultiMatrixAlgebra::full(3);
        let gens = vec![eye(3)];
        let c = commutant(&gens, &m3, 1e-9).unwrap();
        assert_eq!(c.dimension(), 9);
        assert_eq!(c.block_dims, vec![3]);
    }

    #[test]
    fn commutant_of_left_factor_is_right_factor() {
        // (M2 ⊗ 1)' ∩ M4 = 1 ⊗ M2
        let m4 = MultiMatrixAlgebra::full(4);
        let mut gens = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                gens.push(kron(&matrix_unit(2, i, j), &eye(2)));
            }
        }
        let c = commutant(&gens, &m4, 1e-9).unwrap();
        assert_eq!(c.dimension(), 4);
        assert_eq!(c.block_dims, vec![2]);
        // structural oracle: the right tensor factor
        let oracle = MultiMatrixAlgebra::tensor_factor(2, 2, 1);
        let mut rng = rng_for(11, "commutant-oracle");
        for _ in 0..8 {
            let x = random_in(&oracle, &mut rng);
            assert!(c.contains(&x, 1e-8));
            let y = random_in(&c, &mut rng);
            assert!(oracle.contains(&y, 1e-8));
        }
    }

    #[test]
    fn commutant_of_diagonal_is_diagonal() {
        let m3 = MultiMatrixAlgebra::full(3);
        let diag = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            crate::mmalg::linalg::cr(1.0),
            crate::mmalg::linalg::cr(2.0),
            crate::mmalg::linalg::cr(5.0),
        ]));
        let c = commutant(&[diag], &m3, 1e-9).unwrap();
        assert_eq!(c.dimension(), 3);
        assert_eq!(c.block_dims, vec![1, 1, 1]);
        assert_eq!(c.trace.weights.len(), 3);
        for w in &c.trace.weights {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn commutant_elements_commute_with_generators() {
        let m4 = MultiMatrixAlgebra::full(4);
        let g = kron(&matrix_unit(2, 0, 1), &eye(2));
        let c = commutant(&[g.clone()], &m4, 1e-9).unwrap();
        let mut rng = rng_for(12, "commutant-check");
        for _ in 0..8 {
            let x = random_in(&c, &mut rng);
            let comm = mat_mul(&g, &x) - mat_mul(&x, &g);
            assert!(fro_norm(&comm) < 1e-8 * fro_norm(&x).max(1.0));
        }
    }
}
