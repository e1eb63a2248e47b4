//! Dense complex linear-algebra kernels shared by every module.
//!
//! All matrices are `nalgebra::DMatrix<Complex64>` in column-major layout.
//! Products go through `matrixmultiply::zgemm`; decompositions (Hermitian
//! eigen, SVD, Cholesky) come from nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Real scalar as a complex number.
#[inline]
pub fn cr(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub const C_ONE: C64 = C64::new(1.0, 0.0);
pub const C_ZERO: C64 = C64::new(0.0, 0.0);

/// Identity matrix.
pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Matrix unit f_{ij} (1 in row i, column j) of size n.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = C_ONE;
    m
}

/// Fast product via zgemm. Falls back to an empty result on zero-sized input.
pub fn mat_mul(a: &CMat, b: &CMat) -> CMat {
    let (m, k) = a.shape();
    let (k2, n) = b.shape();
    assert_eq!(k, k2, "dimension mismatch in mat_mul: {}x{} * {}x{}", m, k, k2, n);
    let mut c = CMat::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    unsafe {
        // Complex64 is repr(C) { re: f64, im: f64 }, layout-compatible with [f64; 2].
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

/// c += alpha * a * b, accumulating in place.
pub fn mat_mul_acc(c: &mut CMat, alpha: C64, a: &CMat, b: &CMat) {
    let (m, k) = a.shape();
    let (k2, n) = b.shape();
    assert_eq!(k, k2, "dimension mismatch in mat_mul_acc");
    assert_eq!(c.shape(), (m, n), "output shape mismatch in mat_mul_acc");
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [alpha.re, alpha.im],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [1.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
}

/// Product of three matrices, associated left to right.
pub fn mat_mul3(a: &CMat, b: &CMat, c: &CMat) -> CMat {
    mat_mul(&mat_mul(a, b), c)
}

/// Conjugate transpose.
pub fn dagger(a: &CMat) -> CMat {
    a.adjoint()
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Unnormalized Hilbert–Schmidt inner product Tr(a† b).
pub fn hs_dot(a: &CMat, b: &CMat) -> C64 {
    debug_assert_eq!(a.shape(), b.shape());
    let mut acc = C_ZERO;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * y;
    }
    acc
}

/// Frobenius norm.
pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius distance ‖a − b‖.
pub fn fro_dist(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Relative Frobenius distance ‖a − b‖ / max(1, ‖b‖).
pub fn rel_fro_dist(a: &CMat, b: &CMat) -> f64 {
    fro_dist(a, b) / fro_norm(b).max(1.0)
}

/// Unnormalized matrix trace.
pub fn mat_trace(a: &CMat) -> C64 {
    a.diagonal().iter().sum()
}

/// Hermitian part (a + a†)/2.
pub fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching unitary of column eigenvectors. The input is symmetrized first so
/// callers may pass data with tiny anti-Hermitian noise.
pub fn hermitian_eig(a: &CMat) -> (Vec<f64>, CMat) {
    let h = hermitize(a);
    let se = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let n = h.nrows();
    let mut vecs = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Apply a real function to a Hermitian matrix by functional calculus.
pub fn funcalc(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, u) = hermitian_eig(a);
    let n = a.nrows();
    let mut d = CMat::zeros(n, n);
    for (i, &v) in vals.iter().enumerate() {
        d[(i, i)] = cr(f(v));
    }
    mat_mul3(&u, &d, &dagger(&u))
}

/// Singular values, descending.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    let svd = a.clone().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Numerical rank with the scale-invariant threshold tol·σ_max.
pub fn rank_at_tol(a: &CMat, tol: f64) -> usize {
    let s = singular_values(a);
    match s.first() {
        None => 0,
        Some(&smax) if smax <= 0.0 => 0,
        Some(&smax) => s.iter().filter(|&&v| v > tol * smax).count(),
    }
}

/// Orthonormal basis (columns) for the nullspace of `a`, using the
/// tol·σ_max threshold. Returns an n×k matrix (k possibly 0).
pub fn nullspace(a: &CMat, tol: f64) -> CMat {
    nullspace_scaled(a, tol, 0.0)
}

/// Nullspace with the singular-value cut anchored to max(σ_max, scale).
/// Pass the scale of the map the matrix was derived from when `a` itself
/// may have collapsed to numerical noise (for instance after restricting a
/// commutator map to a candidate subspace); a plain relative cut would
/// then mistake the noise floor for full rank.
pub fn nullspace_scaled(a: &CMat, tol: f64, scale: f64) -> CMat {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return eye(n);
    }
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.expect("svd with v_t requested");
    let smax = svd
        .singular_values
        .iter()
        .cloned()
        .fold(0.0_f64, f64::max)
        .max(scale);
    let mut null_cols: Vec<usize> = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if smax <= 0.0 || s <= tol * smax {
            null_cols.push(i);
        }
    }
    // Rows of v_t beyond the number of singular values also span the kernel
    // (nalgebra returns min(m,n) singular values; v_t is min(m,n)×n).
    let r = svd.singular_values.len();
    let mut basis = CMat::zeros(n, null_cols.len() + n.saturating_sub(r));
    let mut c = 0;
    for &i in &null_cols {
        basis.set_column(c, &vt.row(i).adjoint());
        c += 1;
    }
    if r < n {
        // Complete the orthonormal system: vectors orthogonal to all rows of v_t.
        let full = complete_orthobasis(&dagger(&vt));
        for col in 0..full.ncols() {
            basis.set_column(c, &full.column(col));
            c += 1;
        }
    }
    basis
}

/// Given an n×r matrix with orthonormal columns (r ≤ n), return n×(n−r)
/// orthonormal columns completing it to a basis.
fn complete_orthobasis(q: &CMat) -> CMat {
    let n = q.nrows();
    let r = q.ncols();
    let mut cols: Vec<CVec> = Vec::with_capacity(n - r);
    let mut have = r;
    let mut trial = 0usize;
    while have < n && trial < 4 * n {
        let mut v = CVec::zeros(n);
        v[trial % n] = C_ONE;
        // project out q and already-found columns
        for j in 0..r {
            let qj = q.column(j);
            let coef: C64 = qj.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            v -= CVec::from_iterator(n, qj.iter().map(|a| a * coef));
        }
        for c in &cols {
            let coef: C64 = c.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            v -= c.scale(1.0) * coef;
        }
        let nv = v.norm();
        if nv > 1e-6 {
            cols.push(v.unscale(nv));
            have += 1;
        }
        trial += 1;
    }
    let mut out = CMat::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// Normalized partial trace over the right factor of M_L ⊗ M_R:
/// returns y with y[i,j] = (1/R)·Σ_a x[iR+a, jR+a].
pub fn ptrace_right(x: &CMat, l: usize, r: usize) -> CMat {
    debug_assert_eq!(x.nrows(), l * r);
    let mut y = CMat::zeros(l, l);
    let scale = 1.0 / r as f64;
    for i in 0..l {
        for j in 0..l {
            let mut acc = C_ZERO;
            for a in 0..r {
                acc += x[(i * r + a, j * r + a)];
            }
            y[(i, j)] = acc * cr(scale);
        }
    }
    y
}

/// Normalized partial trace over the left factor of M_L ⊗ M_R:
/// returns y with y[a,b] = (1/L)·Σ_i x[iR+a, iR+b].
pub fn ptrace_left(x: &CMat, l: usize, r: usize) -> CMat {
    debug_assert_eq!(x.nrows(), l * r);
    let mut y = CMat::zeros(r, r);
    let scale = 1.0 / l as f64;
    for a in 0..r {
        for b in 0..r {
            let mut acc = C_ZERO;
            for i in 0..l {
                acc += x[(i * r + a, i * r + b)];
            }
            y[(a, b)] = acc * cr(scale);
        }
    }
    y
}

/// Normalized partial trace onto the middle factor of M_L ⊗ M_M ⊗ M_R:
/// returns y with y[m1,m2] = (1/(L·R))·Σ_{i,a} x[(i·M+m1)·R+a, (i·M+m2)·R+a].
pub fn ptrace_mid(x: &CMat, l: usize, m: usize, r: usize) -> CMat {
    debug_assert_eq!(x.nrows(), l * m * r);
    let mut y = CMat::zeros(m, m);
    let scale = 1.0 / (l * r) as f64;
    for m1 in 0..m {
        for m2 in 0..m {
            let mut acc = C_ZERO;
            for i in 0..l {
                for a in 0..r {
                    acc += x[((i * m + m1) * r + a, (i * m + m2) * r + a)];
                }
            }
            y[(m1, m2)] = acc * cr(scale);
        }
    }
    y
}

/// Orthonormalize the span of the given matrices with respect to the
/// weighted inner product ⟨a,b⟩ = Tr(ρ a† b), ρ = diag(weights).
/// Returns an orthonormal basis of the span (rank-revealing at `tol`).
pub fn span_orthonormalize(mats: &[CMat], weights: &[f64], tol: f64) -> Vec<CMat> {
    let mut basis: Vec<CMat> = Vec::new();
    for m in mats {
        let mut v = m.clone();
        // two passes of modified Gram–Schmidt for stability
        for _ in 0..2 {
            for b in &basis {
                let coef = weighted_dot(b, &v, weights);
                v -= b * coef;
            }
        }
        let nv = weighted_dot(&v, &v, weights).re.sqrt();
        let scale_ref = weighted_dot(m, m, weights).re.sqrt().max(1e-300);
        if nv > tol.max(1e-14) * scale_ref.max(1.0) {
            basis.push(v.unscale(nv));
        }
    }
    basis
}

/// Weighted Hilbert–Schmidt inner product Tr(ρ a† b) with ρ = diag(weights).
pub fn weighted_dot(a: &CMat, b: &CMat, weights: &[f64]) -> C64 {
    debug_assert_eq!(a.shape(), b.shape());
    debug_assert_eq!(a.nrows(), weights.len());
    let n = a.nrows();
    let mut acc = C_ZERO;
    // Tr(ρ a† b) = Σ_i ρ_i (a† b)_{ii} = Σ_i ρ_i Σ_k conj(a[k,i]) b[k,i]
    for i in 0..n {
        let mut col = C_ZERO;
        for k in 0..n {
            col += a[(k, i)].conj() * b[(k, i)];
        }
        acc += col * cr(weights[i]);
    }
    acc
}
