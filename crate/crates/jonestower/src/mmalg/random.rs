//! Seeded random elements.
//!
//! Sampling is deterministic: a master seed plus a string tag yields a
//! dedicated stream, so independent suites can draw without coupling and a
//! rerun with the same configuration reproduces every sample.

use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::algebra::{AlgebraRepr, Element, MultiMatrixAlgebra};
use super::linalg::{kron, CMat, C64};

/// Stream for `tag` derived from the master seed (FNV-1a fold of the tag).
pub fn rng_for(master: u64, tag: &str) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in tag.as_bytes() {
        h ^= *byte as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(master ^ h)
}

/// One standard complex Gaussian: real and imaginary parts N(0, 1/2).
pub fn complex_gaussian<R: rand::Rng>(rng: &mut R) -> C64 {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * scale, im * scale)
}

/// Vector of independent standard complex Gaussians.
pub fn gaussian_coeffs<R: rand::Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| complex_gaussian(rng)).collect()
}

/// Matrix with independent standard complex Gaussian entries.
pub fn gaussian_matrix<R: rand::Rng>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Random element of the algebra: standard complex Gaussian coordinates in
/// a trace-orthonormal basis, so E‖x‖₂² equals the linear dimension.
pub fn random_in<R: rand::Rng>(alg: &MultiMatrixAlgebra, rng: &mut R) -> CMat {
    match &alg.repr {
        AlgebraRepr::Full => {
            let d = alg.ambient_dim;
            gaussian_matrix(rng, d, d) * C64::new((d as f64).sqrt(), 0.0)
        }
        AlgebraRepr::TensorFactor { left, mid, right } => {
            let g = gaussian_matrix(rng, *mid, *mid) * C64::new((*mid as f64).sqrt(), 0.0);
            kron(&kron(&CMat::identity(*left, *left), &g), &CMat::identity(*right, *right))
        }
        AlgebraRepr::Explicit { onb, .. } => {
            let d = alg.ambient_dim;
            let mut x = CMat::zeros(d, d);
            for b in onb {
                x += b * complex_gaussian(rng);
            }
            x
        }
    }
}

/// Random self-adjoint element (hermitized Gaussian sample).
pub fn random_selfadjoint_in<R: rand::Rng>(alg: &MultiMatrixAlgebra, rng: &mut R) -> CMat {
    let x = random_in(alg, rng);
    let xd = super::linalg::dagger(&x);
    (x + xd) * C64::new(0.5, 0.0)
}

/// Seeded random element as an `Element`, drawn from the stream
/// `rng_for(seed, "random_element")`.
pub fn random_element(alg: &Arc<MultiMatrixAlgebra>, seed: u64) -> Element {
    let mut rng = rng_for(seed, "random_element");
    let mat = random_in(alg, &mut rng);
    Element::new_unchecked(alg.clone(), mat)
}

/// Uniform f64 in [0, 1) from the stream (convenience for parameter picks).
pub fn unit_uniform<R: rand::Rng>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

#[cfg(test)]
mod test {
    use super::*;
    use crate::mmalg::linalg::mat_trace;

    #[test]
    fn streams_are_deterministic_and_tag_separated() {
        let mut a1 = rng_for(7, "suite-a");
        let mut a2 = rng_for(7, "suite-a");
        let mut b = rng_for(7, "suite-b");
        let x1 = gaussian_coeffs(&mut a1, 4);
        let x2 = gaussian_coeffs(&mut a2, 4);
        let y = gaussian_coeffs(&mut b, 4);
        assert_eq!(x1, x2);
        assert_ne!(x1, y);
    }

    #[test]
    fn gaussian_second_moment_matches_dimension() {
        // E tr(x†x) with the normalized trace equals the span dimension
        let alg = Arc::new(MultiMatrixAlgebra::full(3));
        let mut rng = rng_for(0, "moment");
        let n = 2000;
        let mut acc = 0.0;
        for _ in 0..n {
            let x = random_in(&alg, &mut rng);
            let xx = super::super::linalg::mat_mul(&super::super::linalg::dagger(&x), &x);
            acc += (mat_trace(&xx) / C64::new(3.0, 0.0)).re;
        }
        let mean = acc / n as f64;
        assert!((mean - 9.0).abs() < 0.5, "mean = {}", mean);
    }

    #[test]
    fn tensor_factor_samples_live_in_the_factor() {
        let alg = MultiMatrixAlgebra::tensor_factor(2, 3, 2);
        let mut rng = rng_for(1, "factor");
        let x = random_in(&alg, &mut rng);
        assert!(alg.contains(&x, 1e-9));
    }
}
