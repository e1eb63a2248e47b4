//! Fourier calculus on the two n-box spaces of a Jones tower: the transform
//! pair F / F⁻¹, rotations and reflections, convolution products, the shift
//! operators S±, and the canonical shift Γ, together with residual checks
//! for the identities tying them together.
//!
//! A box element carries its own level: x ∈ B'∩Aₙ is stored at level n,
//! w ∈ A'∩Aₙ₊₁ at level n+1. Operators take the tower as an explicit
//! argument and are generic over [`TowerLike`], so every formula also runs
//! on a shifted view; that is how the A ⊂ A₁ variants are evaluated.

use rand::Rng;

use crate::mmalg::algebra::Element;
use crate::mmalg::blocks::block_decompose;
use crate::mmalg::functionals::p_norm;
use crate::mmalg::linalg::{
    cr, mat_mul, mat_mul3, mat_trace, rel_fro_dist, span_orthonormalize, weighted_dot, C64, CMat,
};
use crate::mmalg::random::{random_in, rng_for};
use crate::tower::{
    ascending_word_mat, composite_family, expectation_chain_mat, multi_step_jones_mat, v_word_mat,
    Tower, TowerLike,
};
use crate::{Result, TowerError};

/// Which of the two box spaces at index n an element inhabits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxSign {
    /// x ∈ B'∩Aₙ, stored at level n.
    Plus,
    /// w ∈ A'∩Aₙ₊₁, stored at level n+1.
    Minus,
}

/// An element of an n-box space, tagged with its sign and index.
#[derive(Clone, Debug)]
pub struct BoxElement {
    pub sign: BoxSign,
    pub n: usize,
    pub elem: Element,
}

/// Membership tolerance for wrapping operator outputs back into a box space.
fn box_tol<T: TowerLike + ?Sized>(t: &T) -> f64 {
    (t.tol() * 100.0).max(1e-7)
}

impl BoxElement {
    /// Wrap x ∈ B'∩Aₙ, checking membership.
    pub fn plus<T: TowerLike + ?Sized>(t: &T, n: usize, mat: CMat) -> Result<Self> {
        let alg = t.box_space(-1, n as isize)?;
        let elem = Element::new(alg, mat, box_tol(t))?;
        Ok(BoxElement {
            sign: BoxSign::Plus,
            n,
            elem,
        })
    }

    /// Wrap w ∈ A'∩Aₙ₊₁, checking membership.
    pub fn minus<T: TowerLike + ?Sized>(t: &T, n: usize, mat: CMat) -> Result<Self> {
        let alg = t.box_space(0, n as isize + 1)?;
        let elem = Element::new(alg, mat, box_tol(t))?;
        Ok(BoxElement {
            sign: BoxSign::Minus,
            n,
            elem,
        })
    }

    /// The unit of B'∩Aₙ.
    pub fn unit_plus<T: TowerLike + ?Sized>(t: &T, n: usize) -> Result<Self> {
        let unit = t.level_algebra(n as isize)?.unit.clone();
        BoxElement::plus(t, n, unit)
    }

    /// The unit of A'∩Aₙ₊₁.
    pub fn unit_minus<T: TowerLike + ?Sized>(t: &T, n: usize) -> Result<Self> {
        let unit = t.level_algebra(n as isize + 1)?.unit.clone();
        BoxElement::minus(t, n, unit)
    }

    /// Random element of B'∩Aₙ.
    pub fn random_plus<T: TowerLike + ?Sized, R: Rng>(
        t: &T,
        n: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let alg = t.box_space(-1, n as isize)?;
        let mat = random_in(&alg, rng);
        Ok(BoxElement {
            sign: BoxSign::Plus,
            n,
            elem: Element::new_unchecked(alg, mat),
        })
    }

    /// Random element of A'∩Aₙ₊₁.
    pub fn random_minus<T: TowerLike + ?Sized, R: Rng>(
        t: &T,
        n: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let alg = t.box_space(0, n as isize + 1)?;
        let mat = random_in(&alg, rng);
        Ok(BoxElement {
            sign: BoxSign::Minus,
            n,
            elem: Element::new_unchecked(alg, mat),
        })
    }

    /// The tower level the stored matrix lives at.
    pub fn level(&self) -> isize {
        match self.sign {
            BoxSign::Plus => self.n as isize,
            BoxSign::Minus => self.n as isize + 1,
        }
    }

    pub fn mat(&self) -> &CMat {
        &self.elem.mat
    }

    /// Adjoint inside the same box space.
    pub fn adjoint(&self) -> BoxElement {
        BoxElement {
            sign: self.sign,
            n: self.n,
            elem: Element::new_unchecked(self.elem.algebra.clone(), self.elem.mat.adjoint()),
        }
    }

    /// Scalar multiple inside the same box space.
    pub fn scale(&self, s: C64) -> BoxElement {
        BoxElement {
            sign: self.sign,
            n: self.n,
            elem: Element::new_unchecked(self.elem.algebra.clone(), &self.elem.mat * s),
        }
    }

    /// Product with another element of the same box space.
    pub fn mul(&self, other: &BoxElement) -> Result<BoxElement> {
        if self.sign != other.sign || self.n != other.n {
            return Err(TowerError::IndexRange(
                "product needs two elements of the same box space".into(),
            ));
        }
        Ok(BoxElement {
            sign: self.sign,
            n: self.n,
            elem: Element::new_unchecked(
                self.elem.algebra.clone(),
                mat_mul(&self.elem.mat, &other.elem.mat),
            ),
        })
    }

    /// Normalized trace at the element's level.
    pub fn trace(&self) -> C64 {
        self.elem.trace()
    }

    /// Trace p-norm at the element's level.
    pub fn norm_p(&self, p: f64) -> f64 {
        p_norm(&self.elem.mat, &self.elem.algebra.trace, p)
    }

    /// Trace 2-norm at the element's level.
    pub fn norm2(&self) -> f64 {
        self.norm_p(2.0)
    }

    /// Rescale to unit trace 2-norm; leaves near-zero elements alone.
    pub fn normalized(&self) -> BoxElement {
        let s = self.norm2();
        if s <= 1e-300 {
            return self.clone();
        }
        self.scale(cr(1.0 / s))
    }
}

fn expect_sign(x: &BoxElement, want: BoxSign, op: &str) -> Result<()> {
    if x.sign != want {
        let tag = match want {
            BoxSign::Plus => "B'∩Aₙ",
            BoxSign::Minus => "A'∩Aₙ₊₁",
        };
        return Err(TowerError::IndexRange(format!(
            "{} expects an element of {}",
            op, tag
        )));
    }
    Ok(())
}

fn same_box(a: &BoxElement, b: &BoxElement, op: &str) -> Result<()> {
    if a.sign != b.sign || a.n != b.n {
        return Err(TowerError::IndexRange(format!(
            "{} needs two elements of the same box space",
            op
        )));
    }
    Ok(())
}

/// Cap on the number of terms in a closed-form multi-index sum.
fn multi_index_guard(count: usize, k: usize) -> Result<()> {
    let total = count.checked_pow(k as u32).unwrap_or(usize::MAX);
    if total > 1 << 20 {
        return Err(TowerError::DimensionCap(format!(
            "closed-form sum would have {} terms",
            total
        )));
    }
    Ok(())
}

fn quasi_basis_at<T: TowerLike + ?Sized>(t: &T, at: isize) -> Result<Vec<CMat>> {
    t.quasi_basis_mats()
        .iter()
        .map(|l| t.embed_to(l, 0, at))
        .collect()
}

/// Move a level-`from` matrix to level `to`, embedding upward or applying
/// the expectation chain downward. The downward direction is exact only on
/// matrices that already lie in the lower level.
fn carry_to_level<T: TowerLike + ?Sized>(t: &T, x: &CMat, from: isize, to: isize) -> Result<CMat> {
    if from <= to {
        t.embed_to(x, from, to)
    } else {
        expectation_chain_mat(t, to + 1, from, x)
    }
}

/// Gram matrix of two families in the weighted inner product.
fn gram(a: &[CMat], b: &[CMat], weights: &[f64]) -> CMat {
    let mut g = CMat::zeros(a.len(), b.len());
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            g[(i, j)] = weighted_dot(ai, bj, weights);
        }
    }
    g
}

/// Fourier transform F_n: B'∩Aₙ → A'∩Aₙ₊₁,
/// F_n(x) = τ^{−(n+2)/2}·E^{B'∩Aₙ₊₁}_{A'∩Aₙ₊₁}(x·vₙ₊₁).
pub fn fourier<T: TowerLike + ?Sized>(t: &T, x: &BoxElement) -> Result<BoxElement> {
    expect_sign(x, BoxSign::Plus, "fourier")?;
    let n = x.n;
    let at = n as isize + 1;
    let xe = t.embed_to(x.mat(), n as isize, at)?;
    let v = v_word_mat(t, n + 1, 1, at)?;
    let proj = t.box_project(0, at, &mat_mul(&xe, &v))?;
    let scale = cr(t.scalars().tau.powf(-((n + 2) as f64) / 2.0));
    BoxElement::minus(t, n, &proj * scale)
}

/// Inverse transform F_n⁻¹: A'∩Aₙ₊₁ → B'∩Aₙ,
/// F_n⁻¹(w) = τ^{−(n+2)/2}·Eₙ₊₁(w·v*ₙ₊₁).
pub fn inv_fourier<T: TowerLike + ?Sized>(t: &T, w: &BoxElement) -> Result<BoxElement> {
    expect_sign(w, BoxSign::Minus, "inv_fourier")?;
    let n = w.n;
    let at = n as isize + 1;
    let vstar = ascending_word_mat(t, n + 1, at)?;
    let down = t.expect_step(&mat_mul(w.mat(), &vstar), at)?;
    let scale = cr(t.scalars().tau.powf(-((n + 2) as f64) / 2.0));
    BoxElement::plus(t, n, &down * scale)
}

/// Rotation ρ⁺ₙ(x) = (F_n⁻¹(F_n(x)*))* on B'∩Aₙ.
pub fn rho_plus<T: TowerLike + ?Sized>(t: &T, x: &BoxElement) -> Result<BoxElement> {
    expect_sign(x, BoxSign::Plus, "rho_plus")?;
    Ok(inv_fourier(t, &fourier(t, x)?.adjoint())?.adjoint())
}

/// Rotation ρ⁻ₙ(w) = (F_n(F_n⁻¹(w)*))* on A'∩Aₙ₊₁.
pub fn rho_minus<T: TowerLike + ?Sized>(t: &T, w: &BoxElement) -> Result<BoxElement> {
    expect_sign(w, BoxSign::Minus, "rho_minus")?;
    Ok(fourier(t, &inv_fourier(t, w)?.adjoint())?.adjoint())
}

/// k-fold iterate of ρ⁺ₙ.
pub fn rho_plus_power<T: TowerLike + ?Sized>(
    t: &T,
    x: &BoxElement,
    k: usize,
) -> Result<BoxElement> {
    let mut cur = x.clone();
    for _ in 0..k {
        cur = rho_plus(t, &cur)?;
    }
    Ok(cur)
}

/// k-fold iterate of ρ⁻ₙ.
pub fn rho_minus_power<T: TowerLike + ?Sized>(
    t: &T,
    w: &BoxElement,
    k: usize,
) -> Result<BoxElement> {
    let mut cur = w.clone();
    for _ in 0..k {
        cur = rho_minus(t, &cur)?;
    }
    Ok(cur)
}

/// Closed form of (ρ⁺ₙ)ᵏ for 1 ≤ k ≤ n: the quasi-basis multi-index sum
/// cᵏₙ Σ E^n_{n−k+1}(v_{n−k+1}λ_{i₁} ⋯ vₙλ_{i_k}·x)·v_{n−k+1}λ*_{i_k} ⋯ vₙλ*_{i₁}.
pub fn rho_plus_power_closed<T: TowerLike + ?Sized>(
    t: &T,
    x: &BoxElement,
    k: usize,
) -> Result<BoxElement> {
    expect_sign(x, BoxSign::Plus, "rho_plus_power_closed")?;
    let n = x.n;
    if k == 0 {
        return Ok(x.clone());
    }
    if k > n {
        return Err(TowerError::IndexRange(format!(
            "closed rotation power needs k ≤ n, got k={} n={}",
            k, n
        )));
    }
    let at = n as isize;
    let lam = quasi_basis_at(t, at)?;
    multi_index_guard(lam.len(), k)?;
    // slot j of the multi-index pairs v_{n−k+j}λ_{i_j} inside the
    // expectation and v_{n+1−j}λ*_{i_j} outside, in reversed index order
    let mut inside: Vec<Vec<CMat>> = Vec::with_capacity(k);
    let mut outside: Vec<Vec<CMat>> = Vec::with_capacity(k);
    for j in 1..=k {
        let vi = v_word_mat(t, n - k + j, 1, at)?;
        let vo = v_word_mat(t, n + 1 - j, 1, at)?;
        inside.push(lam.iter().map(|l| mat_mul(&vi, l)).collect());
        outside.push(lam.iter().map(|l| mat_mul(&vo, &l.adjoint())).collect());
    }
    let alg = t.level_algebra(at)?;
    let mut acc = CMat::zeros(alg.ambient_dim, alg.ambient_dim);
    let mut stack: Vec<(usize, CMat, CMat)> = vec![(0, alg.unit.clone(), alg.unit.clone())];
    while let Some((j, pre, suf)) = stack.pop() {
        if j == k {
            let down =
                expectation_chain_mat(t, (n - k + 1) as isize, at, &mat_mul(&pre, x.mat()))?;
            let up = t.embed_to(&down, (n - k) as isize, at)?;
            acc += mat_mul(&up, &suf);
            continue;
        }
        for i in 0..lam.len() {
            stack.push((
                j + 1,
                mat_mul(&pre, &inside[j][i]),
                mat_mul(&outside[j][i], &suf),
            ));
        }
    }
    BoxElement::plus(t, n, &acc * cr(t.scalars().c(k, n)))
}

/// Single-sum form of ρ⁻ₙ: τ^{−(n+1)} Σᵢ λᵢv*ₙ₊₁·Eₙ₊₁(w·v*ₙ₊₁λᵢ*).
pub fn rho_minus_closed<T: TowerLike + ?Sized>(t: &T, w: &BoxElement) -> Result<BoxElement> {
    expect_sign(w, BoxSign::Minus, "rho_minus_closed")?;
    let n = w.n;
    let at = n as isize + 1;
    let vstar = ascending_word_mat(t, n + 1, at)?;
    let alg = t.level_algebra(at)?;
    let mut acc = CMat::zeros(alg.ambient_dim, alg.ambient_dim);
    for l in quasi_basis_at(t, at)? {
        let down = t.expect_step(&mat_mul3(w.mat(), &vstar, &l.adjoint()), at)?;
        let up = t.embed_to(&down, at - 1, at)?;
        acc += mat_mul3(&l, &vstar, &up);
    }
    let scale = cr(t.scalars().tau.powi(-(n as i32 + 1)));
    BoxElement::minus(t, n, &acc * scale)
}

/// Closed form of (ρ⁻ₙ)ᵏ for 1 ≤ k ≤ n: the quasi-basis multi-index sum
/// cᵏₙ₊₁ Σ λ_{i₁}v*ₙ₊₁ ⋯ λ_{i_k}v*_{n−k+2}·E^{n+1}_{n−k+2}(w·v*ₙ₊₁λ*_{i_k} ⋯ v*_{n−k+2}λ*_{i₁}).
pub fn rho_minus_power_closed<T: TowerLike + ?Sized>(
    t: &T,
    w: &BoxElement,
    k: usize,
) -> Result<BoxElement> {
    expect_sign(w, BoxSign::Minus, "rho_minus_power_closed")?;
    let n = w.n;
    if k == 0 {
        return Ok(w.clone());
    }
    if k > n {
        return Err(TowerError::IndexRange(format!(
            "closed rotation power needs k ≤ n, got k={} n={}",
            k, n
        )));
    }
    let at = n as isize + 1;
    let lam = quasi_basis_at(t, at)?;
    multi_index_guard(lam.len(), k)?;
    // slot j pairs λ_{i_j}v*_{n+2−j} on the left with v*_{n+1−k+j}λ*_{i_j}
    // inside the expectation, in reversed index order
    let mut left: Vec<Vec<CMat>> = Vec::with_capacity(k);
    let mut right: Vec<Vec<CMat>> = Vec::with_capacity(k);
    for j in 1..=k {
        let vl = ascending_word_mat(t, n + 2 - j, at)?;
        let vr = ascending_word_mat(t, n + 1 - k + j, at)?;
        left.push(lam.iter().map(|l| mat_mul(l, &vl)).collect());
        right.push(lam.iter().map(|l| mat_mul(&vr, &l.adjoint())).collect());
    }
    let alg = t.level_algebra(at)?;
    let mut acc = CMat::zeros(alg.ambient_dim, alg.ambient_dim);
    let mut stack: Vec<(usize, CMat, CMat)> = vec![(0, alg.unit.clone(), alg.unit.clone())];
    while let Some((j, pre, suf)) = stack.pop() {
        if j == k {
            let down =
                expectation_chain_mat(t, (n - k + 2) as isize, at, &mat_mul(w.mat(), &suf))?;
            let up = t.embed_to(&down, (n - k + 1) as isize, at)?;
            acc += mat_mul(&pre, &up);
            continue;
        }
        for i in 0..lam.len() {
            stack.push((
                j + 1,
                mat_mul(&pre, &left[j][i]),
                mat_mul(&right[j][i], &suf),
            ));
        }
    }
    BoxElement::minus(t, n, &acc * cr(t.scalars().c(k, n + 1)))
}

fn expect_odd(n: usize, op: &str) -> Result<()> {
    if n % 2 == 0 {
        return Err(TowerError::IndexRange(format!(
            "{} needs an odd box index, got {}",
            op, n
        )));
    }
    Ok(())
}

/// Reflection r⁺ = (ρ⁺₂ₘ₊₁)^{m+1} on B'∩A₂ₘ₊₁, by the closed rotation power.
pub fn reflection_plus<T: TowerLike + ?Sized>(t: &T, x: &BoxElement) -> Result<BoxElement> {
    expect_sign(x, BoxSign::Plus, "reflection_plus")?;
    expect_odd(x.n, "reflection_plus")?;
    rho_plus_power_closed(t, x, (x.n + 1) / 2)
}

/// Reflection r⁻ = (ρ⁻₂ₘ₊₁)^{m+1} on A'∩A₂ₘ₊₂, by the closed rotation power.
pub fn reflection_minus<T: TowerLike + ?Sized>(t: &T, w: &BoxElement) -> Result<BoxElement> {
    expect_sign(w, BoxSign::Minus, "reflection_minus")?;
    expect_odd(w.n, "reflection_minus")?;
    rho_minus_power_closed(t, w, (w.n + 1) / 2)
}

/// r⁺ on B'∩A₂ₘ₊₁ written as the two-box reflection of B ⊂ Aₘ:
/// τ^{−(m+1)} Σᵢ E^{2m+1}_{m+1}(ẽ·μ̃ᵢ·x)·ẽ·μ̃ᵢ*, where ẽ is the multi-step
/// Jones projection and {μ̃ᵢ} the composite quasi-basis family of B ⊂ Aₘ.
pub fn reflection_plus_coarse<T: TowerLike + ?Sized>(t: &T, x: &BoxElement) -> Result<BoxElement> {
    expect_sign(x, BoxSign::Plus, "reflection_plus_coarse")?;
    expect_odd(x.n, "reflection_plus_coarse")?;
    let m = (x.n - 1) / 2;
    let at = x.n as isize;
    let e = multi_step_jones_mat(t, m)?;
    let fam = composite_family(t, m)?;
    let alg = t.level_algebra(at)?;
    let mut acc = CMat::zeros(alg.ambient_dim, alg.ambient_dim);
    for mu in &fam {
        let mu_up = t.embed_to(mu, m as isize, at)?;
        let head = mat_mul3(&e, &mu_up, x.mat());
        let down = expectation_chain_mat(t, m as isize + 1, at, &head)?;
        let up = t.embed_to(&down, m as isize, at)?;
        acc += mat_mul3(&up, &e, &mu_up.adjoint());
    }
    let scale = cr(t.scalars().tau.powi(-(m as i32 + 1)));
    BoxElement::plus(t, x.n, &acc * scale)
}

/// Convolution on B'∩Aₙ: x*y = F_n⁻¹(F_n(y)·F_n(x)).
pub fn convolve_pos<T: TowerLike + ?Sized>(
    t: &T,
    x: &BoxElement,
    y: &BoxElement,
) -> Result<BoxElement> {
    expect_sign(x, BoxSign::Plus, "convolve_pos")?;
    same_box(x, y, "convolve_pos")?;
    let fx = fourier(t, x)?;
    let fy = fourier(t, y)?;
    let prod = BoxElement::minus(t, x.n, mat_mul(fy.mat(), fx.mat()))?;
    inv_fourier(t, &prod)
}

/// Convolution on A'∩Aₙ₊₁: w*z = F_n(F_n⁻¹(z)·F_n⁻¹(w)).
pub fn convolve_neg<T: TowerLike + ?Sized>(
    t: &T,
    w: &BoxElement,
    z: &BoxElement,
) -> Result<BoxElement> {
    expect_sign(w, BoxSign::Minus, "convolve_neg")?;
    same_box(w, z, "convolve_neg")?;
    let fw = inv_fourier(t, w)?;
    let fz = inv_fourier(t, z)?;
    let prod = BoxElement::plus(t, w.n, mat_mul(fz.mat(), fw.mat()))?;
    fourier(t, &prod)
}

/// Closed-form shift on B'∩Aₘ (either parity of m):
/// τ^{−(m+1)} Σᵢ λᵢv*ₘ₊₁·x·vₘ₊₂λᵢ*, landing in A'₁∩Aₘ₊₂.
pub fn shift_closed<T: TowerLike + ?Sized>(t: &T, x: &BoxElement) -> Result<BoxElement> {
    expect_sign(x, BoxSign::Plus, "shift_closed")?;
    let m = x.n;
    let at = m as isize + 2;
    let xe = t.embed_to(x.mat(), m as isize, at)?;
    let vstar = ascending_word_mat(t, m + 1, at)?;
    let v = v_word_mat(t, m + 2, 1, at)?;
    let alg = t.level_algebra(at)?;
    let mut acc = CMat::zeros(alg.ambient_dim, alg.ambient_dim);
    for l in quasi_basis_at(t, at)? {
        let head = mat_mul3(&l, &vstar, &xe);
        acc += mat_mul3(&head, &v, &l.adjoint());
    }
    let scale = cr(t.scalars().tau.powi(-(m as i32 + 1)));
    BoxElement::minus(t, m + 1, &acc * scale)
}

/// S⁺ₙ as the reflection composition r⁺₂ₙ₊₃ ∘ r⁺₂ₙ₊₁ (odd box index).
pub fn shift_plus_composed<T: TowerLike + ?Sized>(t: &T, x: &BoxElement) -> Result<BoxElement> {
    expect_sign(x, BoxSign::Plus, "shift_plus_composed")?;
    expect_odd(x.n, "shift_plus_composed")?;
    let m = x.n;
    let r1 = reflection_plus(t, x)?;
    let up = BoxElement::plus(t, m + 2, t.embed_to(r1.mat(), m as isize, m as isize + 2)?)?;
    let r2 = reflection_plus(t, &up)?;
    BoxElement::minus(t, m + 1, r2.elem.mat)
}

/// S⁻ₙ as the reflection composition r⁻₂ₙ₊₃ ∘ r⁻₂ₙ₊₁ (odd box index).
pub fn shift_minus_composed<T: TowerLike + ?Sized>(t: &T, w: &BoxElement) -> Result<BoxElement> {
    expect_sign(w, BoxSign::Minus, "shift_minus_composed")?;
    expect_odd(w.n, "shift_minus_composed")?;
    let m = w.n;
    let r1 = reflection_minus(t, w)?;
    let up = BoxElement::minus(
        t,
        m + 2,
        t.embed_to(r1.mat(), m as isize + 1, m as isize + 3)?,
    )?;
    reflection_minus(t, &up)
}

/// Relative distance between two box elements after embedding to a common
/// level.
pub fn box_distance<T: TowerLike + ?Sized>(
    t: &T,
    a: &BoxElement,
    b: &BoxElement,
) -> Result<f64> {
    let at = a.level().max(b.level());
    let ma = t.embed_to(a.mat(), a.level(), at)?;
    let mb = t.embed_to(b.mat(), b.level(), at)?;
    Ok(rel_fro_dist(&ma, &mb))
}

/// Residual of a level-`at` matrix lying in A'ⱼ∩Aₘ for m ≤ `at`: the box
/// membership defect after stepping down, combined with the loss incurred
/// by the stepping itself.
pub fn box_residual_at<T: TowerLike + ?Sized>(
    t: &T,
    j: isize,
    m: isize,
    at: isize,
    x: &CMat,
) -> Result<f64> {
    if m > at {
        return Err(TowerError::IndexRange(format!(
            "box A'_{}∩A_{} cannot be checked at level {}",
            j, m, at
        )));
    }
    let down = carry_to_level(t, x, at, m)?;
    let alg = t.box_space(j, m)?;
    let back = t.embed_to(&down, m, at)?;
    Ok(alg.membership_residual(&down).max(rel_fro_dist(&back, x)))
}

/// ‖P_A − P_B‖ for the span projections of two families at a common level,
/// in the Hilbert–Schmidt operator norm; zero exactly when the spans agree.
pub fn span_equality_residual(fam_a: &[CMat], fam_b: &[CMat], weights: &[f64], tol: f64) -> f64 {
    let oa = span_orthonormalize(fam_a, weights, tol);
    let ob = span_orthonormalize(fam_b, weights, tol);
    let g = gram(&oa, &ob, weights);
    let overlap: f64 = g.iter().map(|z| z.norm_sqr()).sum();
    let v = oa.len() as f64 + ob.len() as f64 - 2.0 * overlap;
    v.max(0.0).sqrt()
}

/// Closed form of S⁻ₙ, evaluated as the generic closed shift on the
/// once-shifted view.
pub fn shift_minus_closed(t: &Tower, w: &BoxElement) -> Result<BoxElement> {
    expect_sign(w, BoxSign::Minus, "shift_minus_closed")?;
    let view = t.shifted_view(1)?;
    let xv = BoxElement::plus(&view, w.n, w.mat().clone())?;
    let sv = shift_closed(&view, &xv)?;
    BoxElement::minus(t, w.n + 2, sv.elem.mat)
}

/// Shift operator S±ₙ on an odd-index box element: evaluates both the
/// closed form and the reflection composition, verifies they agree, and
/// returns the closed form.
pub fn shift_s(t: &Tower, x: &BoxElement) -> Result<BoxElement> {
    let (closed, composed) = match x.sign {
        BoxSign::Plus => (shift_closed(t, x)?, shift_plus_composed(t, x)?),
        BoxSign::Minus => (shift_minus_closed(t, x)?, shift_minus_composed(t, x)?),
    };
    let dev = box_distance(t, &closed, &composed)?;
    if dev > box_tol(t) {
        return Err(TowerError::Verification(format!(
            "shift closed form and reflection composition disagree (residual {:.3e})",
            dev
        )));
    }
    Ok(closed)
}

/// Canonical shift Γ: A'∩Aⱼ → A'₂∩Aⱼ₊₂, evaluated through S⁻ at the
/// smallest even level containing the argument.
pub fn canonical_shift(t: &Tower, w: &BoxElement) -> Result<BoxElement> {
    expect_sign(w, BoxSign::Minus, "canonical_shift")?;
    let level = w.n as isize + 1;
    let even = if level % 2 == 0 {
        w.clone()
    } else {
        BoxElement::minus(t, w.n + 1, t.embed_to(w.mat(), level, level + 1)?)?
    };
    shift_minus_closed(t, &even)
}

/// m-fold iterate of the canonical shift.
pub fn canonical_shift_power(t: &Tower, w: &BoxElement, m: usize) -> Result<BoxElement> {
    let mut cur = w.clone();
    for _ in 0..m {
        cur = canonical_shift(t, &cur)?;
    }
    Ok(cur)
}

/// ρ⁻ evaluated as i ∘ ρ⁺ ∘ i through the once-shifted view, with i the
/// adjoint map.
pub fn rho_minus_via_view(t: &Tower, w: &BoxElement) -> Result<BoxElement> {
    expect_sign(w, BoxSign::Minus, "rho_minus_via_view")?;
    let view = t.shifted_view(1)?;
    let xv = BoxElement::plus(&view, w.n, w.mat().adjoint())?;
    let r = rho_plus(&view, &xv)?;
    BoxElement::minus(t, w.n, r.elem.mat.adjoint())
}

/// r⁻ evaluated as the r⁺ of the once-shifted inclusion.
pub fn reflection_minus_via_view(t: &Tower, w: &BoxElement) -> Result<BoxElement> {
    expect_sign(w, BoxSign::Minus, "reflection_minus_via_view")?;
    expect_odd(w.n, "reflection_minus_via_view")?;
    let view = t.shifted_view(1)?;
    let xv = BoxElement::plus(&view, w.n, w.mat().clone())?;
    let r = reflection_plus(&view, &xv)?;
    BoxElement::minus(t, w.n, r.elem.mat)
}

/// The A ⊂ A₁ convolution w *₁ z on A'∩Aₙ₊₁, through the shifted view.
pub fn convolve_shifted(t: &Tower, w: &BoxElement, z: &BoxElement) -> Result<BoxElement> {
    expect_sign(w, BoxSign::Minus, "convolve_shifted")?;
    same_box(w, z, "convolve_shifted")?;
    let view = t.shifted_view(1)?;
    let wv = BoxElement::plus(&view, w.n, w.mat().clone())?;
    let zv = BoxElement::plus(&view, z.n, z.mat().clone())?;
    let c = convolve_pos(&view, &wv, &zv)?;
    BoxElement::minus(t, w.n, c.elem.mat)
}

/// ‖S(F_n⁻¹(w)) − (F_n^{A⊂A₁}(w*))*‖₂ at level n+2, the defect of the
/// identity relating the shift to the two Fourier transforms.
pub fn shift_odd_check(t: &Tower, w: &BoxElement) -> Result<f64> {
    expect_sign(w, BoxSign::Minus, "shift_odd_check")?;
    let lhs = shift_closed(t, &inv_fourier(t, w)?)?;
    let view = t.shifted_view(1)?;
    let rhs = fourier(&view, &BoxElement::plus(&view, w.n, w.mat().adjoint())?)?;
    let diff = lhs.mat() - rhs.elem.mat.adjoint();
    Ok(p_norm(&diff, &lhs.elem.algebra.trace, 2.0))
}

/// Γ of a trace-orthonormal basis of A'∩Aₘ, carried to level `at`.
/// For m = 0 the basis is the center of A, read off its block structure.
fn gamma_span(t: &Tower, m: usize, at: isize) -> Result<Vec<CMat>> {
    let basis: Vec<CMat> = if m == 0 {
        let a0 = t.level_algebra(0)?;
        block_decompose(a0.as_ref(), t.tol())?.data.projections
    } else {
        t.box_space(0, m as isize)?.orthonormal_basis()?
    };
    let mut out = Vec::with_capacity(basis.len());
    for b in &basis {
        let be = if m == 0 {
            BoxElement::minus(t, 0, t.embed_to(b, 0, 1)?)?
        } else {
            BoxElement::minus(t, m - 1, b.clone())?
        };
        let g = canonical_shift(t, &be)?;
        out.push(carry_to_level(t, g.mat(), g.level(), at)?);
    }
    Ok(out)
}

/// Defect of the commuting square E_{A'∩Aⱼ} ∘ E_{Γ(A'∩Aⱼ)} = E_{Γ(A'∩Aⱼ₋₂)}
/// inside A'∩Aⱼ₊₂, as the Hilbert–Schmidt operator norm of the difference
/// of the composed expectations.
pub fn commuting_square_check(t: &Tower, j: usize) -> Result<f64> {
    if j < 2 {
        return Err(TowerError::IndexRange(
            "commuting square needs j ≥ 2".into(),
        ));
    }
    let at = j as isize + 2;
    let weights = t.level_algebra(at)?.trace.density.clone();
    let tol = t.tol();
    let mid: Vec<CMat> = t
        .box_space(0, j as isize)?
        .orthonormal_basis()?
        .iter()
        .map(|b| t.embed_to(b, j as isize, at))
        .collect::<Result<_>>()?;
    let s1 = span_orthonormalize(&mid, &weights, tol);
    let s2 = span_orthonormalize(&gamma_span(t, j, at)?, &weights, tol);
    let s3 = span_orthonormalize(&gamma_span(t, j - 2, at)?, &weights, tol);
    // with orthonormal spans, ‖P₁P₂ − P₃‖²_HS expands into Gram data:
    // ‖G₁₂‖² − 2·Re tr(G₁₂†G₁₃G₃₂) + dim₃
    let g12 = gram(&s1, &s2, &weights);
    let g13 = gram(&s1, &s3, &weights);
    let g32 = gram(&s3, &s2, &weights);
    let overlap: f64 = g12.iter().map(|z| z.norm_sqr()).sum();
    let cross = mat_trace(&mat_mul3(&g12.adjoint(), &g13, &g32)).re;
    let val = overlap - 2.0 * cross + s3.len() as f64;
    Ok(val.max(0.0).sqrt())
}

/// Finite-level report on the canonical shift acting as a 2-shift on A'∩Aⱼ.
#[derive(Clone, Debug)]
pub struct TwoShiftReport {
    pub j: usize,
    pub m: usize,
    pub l: usize,
    /// Commutation step k_j = ⌊j/2⌋ + 1.
    pub step: usize,
    /// Max membership residual of Γᵖ(basis of A'∩Aⱼ) in A'∩Aⱼ₊₂ₚ, 1 ≤ p ≤ m.
    pub containment: f64,
    /// Max ‖w₁Γᵐ(w₂) − Γᵐ(w₂)w₁‖₂ over unit-norm sample pairs; present only
    /// when m is a positive multiple of the step.
    pub commutation: Option<f64>,
    /// Max |tr(w₃·Γ^{l·kⱼ}(w₁)) − tr(w₃)tr(w₁)| over unit-norm sample pairs.
    pub trace_factorization: f64,
}

impl TwoShiftReport {
    /// Largest defect across the populated checks.
    pub fn worst(&self) -> f64 {
        self.containment
            .max(self.commutation.unwrap_or(0.0))
            .max(self.trace_factorization)
    }
}

/// Checks the 2-shift behavior of Γ on A'∩Aⱼ at finite level: containment
/// of the Γ-iterates, commutation at multiples of the step, and trace
/// factorization after l·kⱼ applications.
pub fn two_shift_check(
    t: &Tower,
    j: usize,
    m: usize,
    l: usize,
    samples: usize,
    seed: u64,
) -> Result<TwoShiftReport> {
    if j == 0 {
        return Err(TowerError::IndexRange("two-shift check needs j ≥ 1".into()));
    }
    let step = j / 2 + 1;
    let basis = t.box_space(0, j as isize)?.orthonormal_basis()?;
    let mut containment = 0.0f64;
    for b in &basis {
        let mut cur = BoxElement::minus(t, j - 1, b.clone())?;
        for p in 1..=m {
            cur = canonical_shift(t, &cur)?;
            let r = box_residual_at(t, 0, (j + 2 * p) as isize, cur.level(), cur.mat())?;
            containment = containment.max(r);
        }
    }
    let mut rng = rng_for(seed, &format!("two-shift-{}-{}-{}", j, m, l));
    let commutation = if m > 0 && m % step == 0 {
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let w1 = BoxElement::random_minus(t, j - 1, &mut rng)?.normalized();
            let w2 = BoxElement::random_minus(t, j - 1, &mut rng)?.normalized();
            let g = canonical_shift_power(t, &w2, m)?;
            let at = g.level();
            let w1e = t.embed_to(w1.mat(), w1.level(), at)?;
            let comm = mat_mul(&w1e, g.mat()) - mat_mul(g.mat(), &w1e);
            worst = worst.max(p_norm(&comm, &t.level_algebra(at)?.trace, 2.0));
        }
        Some(worst)
    } else {
        None
    };
    let mut trace_factorization = 0.0f64;
    for _ in 0..samples {
        let w1 = BoxElement::random_minus(t, j - 1, &mut rng)?.normalized();
        let w3 = BoxElement::random_minus(t, j - 1, &mut rng)?.normalized();
        let g = canonical_shift_power(t, &w1, l * step)?;
        let at = g.level();
        let w3e = t.embed_to(w3.mat(), w3.level(), at)?;
        let lhs = t.tr_level(at, &mat_mul(&w3e, g.mat()))?;
        let rhs = w3.trace() * w1.trace();
        trace_factorization = trace_factorization.max((lhs - rhs).norm());
    }
    Ok(TwoShiftReport {
        j,
        m,
        l,
        step,
        containment,
        commutation,
        trace_factorization,
    })
}
