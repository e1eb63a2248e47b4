//! Words in the Jones projections and families derived from the
//! quasi-basis. Everything here is generic over `TowerLike`, so the same
//! code serves the base tower and its shifted views.

use crate::mmalg::linalg::{cr, mat_mul, CMat};
use crate::{Result, TowerError};

use super::TowerLike;

/// v^{(k)}_n = e_n e_{n−1} ⋯ e_k, embedded at level `at`.
pub fn v_word_mat<T: TowerLike + ?Sized>(
    t: &T,
    n: usize,
    k: usize,
    at: isize,
) -> Result<CMat> {
    if k == 0 || k > n || (n as isize) > t.max_level() || at < n as isize {
        return Err(TowerError::IndexRange(format!(
            "v-word e_{}⋯e_{} at level {} out of range",
            n, k, at
        )));
    }
    let mut acc = t.jones_at(n, at)?;
    for i in (k..n).rev() {
        acc = mat_mul(&acc, &t.jones_at(i, at)?);
    }
    Ok(acc)
}

/// The ascending word e_1 e_2 ⋯ e_j = (v_j)*, embedded at level `at`;
/// j = 0 gives the identity.
pub fn ascending_word_mat<T: TowerLike + ?Sized>(t: &T, j: usize, at: isize) -> Result<CMat> {
    let alg = t.level_algebra(at)?;
    if j == 0 {
        return Ok(alg.unit.clone());
    }
    Ok(v_word_mat(t, j, 1, at)?.adjoint())
}

/// Multi-step Jones projection for B ⊂ A_n at level 2n+1:
/// τ^{−n(n+1)/2} (e_{n+1}⋯e_1)(e_{n+2}⋯e_2)⋯(e_{2n+1}⋯e_{n+1}).
pub fn multi_step_jones_mat<T: TowerLike + ?Sized>(t: &T, n: usize) -> Result<CMat> {
    let at = (2 * n + 1) as isize;
    if at > t.max_level() {
        return Err(TowerError::IndexRange(format!(
            "multi-step projection needs level {}, tower has {}",
            at,
            t.max_level()
        )));
    }
    let tau = t.scalars().tau;
    let mut acc = v_word_mat(t, n + 1, 1, at)?;
    for r in 1..=n {
        acc = mat_mul(&acc, &v_word_mat(t, n + 1 + r, 1 + r, at)?);
    }
    let scale = tau.powf(-((n * (n + 1)) as f64) / 2.0);
    Ok(&acc * cr(scale))
}

/// E_k ∘ E_{k+1} ∘ ⋯ ∘ E_n applied to a level-n matrix; the result lives
/// at level k−1.
pub fn expectation_chain_mat<T: TowerLike + ?Sized>(
    t: &T,
    k: isize,
    n: isize,
    x: &CMat,
) -> Result<CMat> {
    if k < 0 || k > n {
        return Err(TowerError::IndexRange(format!(
            "expectation chain E_{}, …, E_{} out of range",
            k, n
        )));
    }
    let mut acc = x.clone();
    let mut m = n;
    while m >= k {
        acc = t.expect_step(&acc, m)?;
        m -= 1;
    }
    Ok(acc)
}

/// Composite quasi-basis family for E₀∘⋯∘E_n at level n:
/// τ^{−n(n+1)/4}·λ_{i_{n+1}}(e₁⋯e_n)·λ_{i_n}(e₁⋯e_{n−1})⋯λ_{i_2}(e₁)·λ_{i_1},
/// one element per multi-index; the size is |λ|^{n+1}.
pub fn composite_family<T: TowerLike + ?Sized>(t: &T, n: usize) -> Result<Vec<CMat>> {
    let at = n as isize;
    if at > t.max_level() {
        return Err(TowerError::IndexRange(format!(
            "composite quasi-basis needs level {}, tower has {}",
            n,
            t.max_level()
        )));
    }
    let lam: Vec<CMat> = t
        .quasi_basis_mats()
        .iter()
        .map(|l| t.embed_to(l, 0, at))
        .collect::<Result<_>>()?;
    if n == 0 {
        return Ok(lam);
    }
    let count = lam.len().pow((n + 1) as u32);
    if count > 1 << 20 {
        return Err(TowerError::DimensionCap(format!(
            "composite quasi-basis would have {} elements",
            count
        )));
    }
    let ascending: Vec<CMat> = (1..=n)
        .map(|j| ascending_word_mat(t, j, at))
        .collect::<Result<_>>()?;
    let scale = cr(t.scalars().tau.powf(-((n * (n + 1)) as f64) / 4.0));
    // depth-first over multi-indices, sharing product prefixes:
    // prefix·λ_{i_j}·(e₁⋯e_{j−1}) descending through j = n+1, …, 1
    let mut out = Vec::with_capacity(count);
    let mut stack: Vec<(usize, CMat)> = Vec::new();
    for l in lam.iter().rev() {
        stack.push((n + 1, mat_mul(&(l * scale), &ascending[n - 1])));
    }
    while let Some((depth, prefix)) = stack.pop() {
        let next = depth - 1;
        if next == 1 {
            for l in &lam {
                out.push(mat_mul(&prefix, l));
            }
            continue;
        }
        for l in lam.iter().rev() {
            let ext = mat_mul(&mat_mul(&prefix, l), &ascending[next - 2]);
            stack.push((next, ext));
        }
    }
    Ok(out)
}
