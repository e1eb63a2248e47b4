//! Backend for explicit inclusions B ⊆ A ⊆ M_D given by spanning sets.
//!
//! The base step classifies the inclusion. When both algebras are single
//! full matrix blocks, a change of basis rotates the pair onto the tensor
//! model M_k ⊗ 1 ⊂ M_k ⊗ M_d and the cheap structural backend takes over.
//! Otherwise the tower is grown step by step: each new level is the
//! *-algebra generated on L²(A_m, tr_m) by left multiplication together
//! with the orthogonal projection onto L²(A_{m−1}), compressed to a
//! minimal faithful representation, with the Markov trace extension
//! recovered by least squares from the restriction and Markov conditions.
//! Multi-block inclusions are flagged: the surrounding theory is stated
//! for simple algebras, so their towers are best-effort and capped.

use std::sync::Arc;

use crate::entropy::{pf_eigen, RMat};
use crate::mmalg::blocks::{pinv_sqrt, range_onb};
use crate::mmalg::linalg::{
    cr, dagger, eye, mat_mul, mat_mul3, rel_fro_dist, span_orthonormalize, weighted_dot, CMat,
    C64,
};
use crate::mmalg::{
    algebra_from_span, block_decompose, commutant, AlgebraRepr, MultiMatrixAlgebra, TraceState,
};
use crate::{Result, TowerError};

use super::tensor::TensorBackend;
use super::{Backend, BuildCheck, Level, TowerScalars};

/// Largest L²(A_m) dimension a basic-construction step will represent.
const REP_CAP: usize = 48;
/// Largest algebra dimension a new level may have.
const ALG_DIM_CAP: usize = 512;
/// Largest ambient on which relative commutants are computed.
const BOX_AMBIENT_CAP: usize = 64;
/// Largest algebra dimension on which relative commutants are computed.
const BOX_DIM_CAP: usize = 256;

/// One stored level: the algebra in its own ambient, a trace-orthonormal
/// basis of it, and the images of the previous level's basis under the
/// inclusion (empty at the bottom).
struct GnsLevel {
    algebra: Arc<MultiMatrixAlgebra>,
    onb: Vec<CMat>,
    prev_img: Vec<CMat>,
}

pub(crate) struct GnsBackend {
    pub scalars: TowerScalars,
    pub quasi_basis: Vec<CMat>,
    /// Index n+1 holds level n; starts with levels −1 and 0.
    levels: Vec<GnsLevel>,
    /// Isometry from the caller's ambient onto the level-0 ambient.
    input_transform: CMat,
}

fn push(
    checks: &mut Vec<BuildCheck>,
    name: &str,
    level: isize,
    residual: f64,
    tol: f64,
) -> Result<()> {
    checks.push(BuildCheck {
        name: name.to_string(),
        level,
        residual,
    });
    let cap = (tol * 100.0).max(1e-6);
    if !residual.is_finite() || residual > cap {
        return Err(TowerError::Verification(format!(
            "build check '{}' failed at level {} (residual {:.3e})",
            name, level, residual
        )));
    }
    Ok(())
}

fn expand(coeffs: &[C64], basis: &[CMat], d: usize) -> CMat {
    let mut out = CMat::zeros(d, d);
    for (c, b) in coeffs.iter().zip(basis) {
        out += b * *c;
    }
    out
}

/// Sum of the diagonal of `x` over `[off, off+len)`: the unnormalized
/// trace of the block cut.
fn block_trace(x: &CMat, off: usize, len: usize) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in off..off + len {
        acc += x[(i, i)];
    }
    acc
}

/// Incremental Gram–Schmidt step; returns true when the candidate added a
/// new direction.
fn grow_onb(basis: &mut Vec<CMat>, cand: &CMat, density: &[f64], tol: f64) -> bool {
    let mut v = cand.clone();
    for _ in 0..2 {
        for b in basis.iter() {
            let coef = weighted_dot(b, &v, density);
            v -= b * coef;
        }
    }
    let nv = weighted_dot(&v, &v, density).re.sqrt();
    let scale = weighted_dot(cand, cand, density).re.sqrt().max(1.0);
    if nv > tol.max(1e-14) * scale {
        basis.push(v.unscale(nv));
        true
    } else {
        false
    }
}

/// Classify an explicit inclusion and produce the backend that will grow
/// its tower. Returns the backend plus the multi-block flag.
pub(crate) fn base_from_explicit(
    ambient_dim: usize,
    a_basis: &[CMat],
    b_basis: &[CMat],
    tol: f64,
    checks: &mut Vec<BuildCheck>,
) -> Result<(Backend, bool)> {
    if ambient_dim == 0 || a_basis.is_empty() || b_basis.is_empty() {
        return Err(TowerError::InvalidModel(
            "explicit model needs a nonempty ambient and spanning sets".into(),
        ));
    }
    for m in a_basis.iter().chain(b_basis.iter()) {
        if m.nrows() != ambient_dim || m.ncols() != ambient_dim {
            return Err(TowerError::InvalidModel(format!(
                "spanning matrix is {}x{}, expected {}x{}",
                m.nrows(),
                m.ncols(),
                ambient_dim,
                ambient_dim
            )));
        }
    }
    let unif_in = vec![1.0 / ambient_dim as f64; ambient_dim];
    let a_in = algebra_from_span(a_basis, unif_in, tol)?;
    let membership_tol = (tol * 1e3).max(1e-8);
    let mut worst = 0.0_f64;
    for b in b_basis {
        worst = worst.max(a_in.membership_residual(b));
    }
    if worst > membership_tol {
        return Err(TowerError::InvalidModel(format!(
            "B spanning set is not contained in A (residual {:.3e})",
            worst
        )));
    }
    checks.push(BuildCheck {
        name: "subalgebra-membership".into(),
        level: -1,
        residual: worst,
    });

    // strip the ambient multiplicity of A
    let dec_a = block_decompose(&a_in, tol)?;
    let v_a = crate::mmalg::blocks::compression_isometry(&dec_a, tol)?;
    let d0 = v_a.ncols();
    let iso_res = rel_fro_dist(&mat_mul(&dagger(&v_a), &v_a), &eye(d0));
    push(checks, "input-compression-isometry", 0, iso_res, tol)?;
    let compress = |x: &CMat| mat_mul3(&dagger(&v_a), x, &v_a);
    let cb_basis: Vec<CMat> = b_basis.iter().map(compress).collect();

    // B's block structure in the compressed ambient
    let unif0 = vec![1.0 / d0 as f64; d0];
    let b_c = algebra_from_span(&cb_basis, unif0, tol)?;
    let dec_b = block_decompose(&b_c, tol)?;

    if dec_a.data.dims.len() == 1 && dec_b.data.dims.len() == 1 {
        // simple-simple: rotate B onto M_k ⊗ 1_d
        let k = dec_b.data.dims[0];
        let d = dec_b.data.mults[0];
        if k * d != d0 {
            return Err(TowerError::Numerical(format!(
                "block data {}·{} does not fill the compressed ambient {}",
                k, d, d0
            )));
        }
        let e00 = &dec_b.units[0].f_i0[0];
        let w_cols = range_onb(e00, tol);
        if w_cols.ncols() != d {
            return Err(TowerError::Numerical(format!(
                "minimal projection rank {} does not match multiplicity {}",
                w_cols.ncols(),
                d
            )));
        }
        let mut u = CMat::zeros(d0, d0);
        for (i, f) in dec_b.units[0].f_i0.iter().enumerate() {
            let cols = mat_mul(f, &w_cols);
            for g in 0..d {
                u.set_column(i * d + g, &cols.column(g));
            }
        }
        let res = rel_fro_dist(&mat_mul(&dagger(&u), &u), &eye(d0));
        push(checks, "block-rotation-unitary", 0, res, tol)?;
        let w = mat_mul(&v_a, &u);
        let target = MultiMatrixAlgebra::tensor_factor(1, k, d);
        let mut worst = 0.0_f64;
        for b in b_basis {
            let rb = mat_mul3(&dagger(&w), b, &w);
            worst = worst.max(target.membership_residual(&rb));
        }
        push(checks, "tensor-alignment", 0, worst, tol)?;
        return Ok((
            Backend::Tensor(TensorBackend::new(k, d, Some(w))),
            false,
        ));
    }

    let backend = gns_base(d0, &dec_a.data.dims, a_basis, &v_a, dec_b, tol, checks)?;
    Ok((Backend::Gns(backend), true))
}

/// Multi-block base: inclusion matrix, Markov trace from the
/// Perron–Frobenius data, compressed representations of B and A, the
/// embedding pairs for E₀, and a Pimsner–Popa quasi-basis.
#[allow(clippy::too_many_arguments)]
fn gns_base(
    d0: usize,
    a_dims: &[usize],
    a_basis: &[CMat],
    v_a: &CMat,
    dec_b: crate::mmalg::BlockDecomposition,
    tol: f64,
    checks: &mut Vec<BuildCheck>,
) -> Result<GnsBackend> {
    let compress = |x: &CMat| mat_mul3(&dagger(v_a), x, v_a);
    let ca_basis: Vec<CMat> = a_basis.iter().map(compress).collect();

    // A-block offsets in the compressed ambient (multiplicity one each)
    let q_count = a_dims.len();
    let mut a_off = Vec::with_capacity(q_count);
    let mut acc = 0usize;
    for &n in a_dims {
        a_off.push(acc);
        acc += n;
    }
    if acc != d0 {
        return Err(TowerError::Numerical(
            "compressed A blocks do not fill the ambient".into(),
        ));
    }

    // inclusion matrix G[r][q] from the ranks of Q_r·P_q
    let r_count = dec_b.data.dims.len();
    let k_dims = dec_b.data.dims.clone();
    let mut g = RMat::zeros(r_count, q_count);
    let mut worst_int = 0.0_f64;
    for (r, qr) in dec_b.data.projections.iter().enumerate() {
        for q in 0..q_count {
            let rank = block_trace(qr, a_off[q], a_dims[q]).re;
            worst_int = worst_int.max((rank - rank.round()).abs());
            let rank = rank.round() as usize;
            if rank % k_dims[r] != 0 {
                return Err(TowerError::Numerical(format!(
                    "projection rank {} is not a multiple of the block dimension {}",
                    rank, k_dims[r]
                )));
            }
            g[(r, q)] = (rank / k_dims[r]) as f64;
        }
    }
    push(checks, "inclusion-integrality", 0, worst_int, tol)?;
    for q in 0..q_count {
        let total: f64 = (0..r_count).map(|r| g[(r, q)] * k_dims[r] as f64).sum();
        if (total - a_dims[q] as f64).abs() > 0.5 {
            return Err(TowerError::Numerical(format!(
                "inclusion matrix column {} sums to {}, expected {}",
                q, total, a_dims[q]
            )));
        }
    }

    // connectivity of the bipartite inclusion graph
    {
        let nodes = r_count + q_count;
        let mut seen = vec![false; nodes];
        let mut queue = vec![0usize];
        seen[0] = true;
        let mut reached = 1usize;
        while let Some(v) = queue.pop() {
            for w in 0..nodes {
                let linked = if v < r_count && w >= r_count {
                    g[(v, w - r_count)] > 0.0
                } else if v >= r_count && w < r_count {
                    g[(w, v - r_count)] > 0.0
                } else {
                    false
                };
                if linked && !seen[w] {
                    seen[w] = true;
                    reached += 1;
                    queue.push(w);
                }
            }
        }
        if reached != nodes {
            return Err(TowerError::InvalidModel(
                "disconnected inclusion matrix; the Markov trace is not unique".into(),
            ));
        }
    }

    // Markov trace: index and weights from the Perron–Frobenius pair
    let gtg = g.transpose() * &g;
    let pf = pf_eigen(&gtg)?;
    push(checks, "pf-residual", 0, pf.residual, tol)?;
    let index = pf.value;
    if index < 1.0 - 1e-9 {
        return Err(TowerError::Numerical(format!(
            "computed index {} below 1",
            index
        )));
    }
    let scale: f64 = a_dims
        .iter()
        .zip(pf.vector.iter())
        .map(|(&n, &t)| n as f64 * t)
        .sum();
    let t_weights: Vec<f64> = pf.vector.iter().map(|&t| t / scale).collect();
    let s_weights: Vec<f64> = (0..r_count)
        .map(|r| (0..q_count).map(|q| g[(r, q)] * t_weights[q]).sum())
        .collect();

    let mut density0 = vec![0.0; d0];
    for q in 0..q_count {
        for i in a_off[q]..a_off[q] + a_dims[q] {
            density0[i] = t_weights[q];
        }
    }
    let a0 = if q_count == 1 {
        MultiMatrixAlgebra::full(d0)
    } else {
        algebra_from_span(&ca_basis, density0.clone(), tol)?
    };

    // B in its own minimal ambient, with the restricted Markov trace
    let v_b = crate::mmalg::blocks::compression_isometry(&dec_b, tol)?;
    let db = v_b.ncols();
    let mut b_off = Vec::with_capacity(r_count);
    let mut acc = 0usize;
    for &k in &k_dims {
        b_off.push(acc);
        acc += k;
    }
    let mut density_b = vec![0.0; db];
    for r in 0..r_count {
        for i in b_off[r]..b_off[r] + k_dims[r] {
            density_b[i] = s_weights[r];
        }
    }
    let b_m1 = if r_count == 1 {
        MultiMatrixAlgebra::full(db)
    } else {
        let cb: Vec<CMat> = dec_b
            .units
            .iter()
            .flat_map(|us| {
                us.f_i0.iter().flat_map(move |fi| {
                    us.f_i0
                        .iter()
                        .map(move |fj| mat_mul(fi, &dagger(fj)))
                })
            })
            .map(|f| mat_mul3(&dagger(&v_b), &f, &v_b))
            .collect();
        algebra_from_span(&cb, density_b.clone(), tol)?
    };
    let b_onb = b_m1.orthonormal_basis()?;

    // embedding ι: ⊕M_{k_r} → B ⊆ A₀ through the matrix units
    let units: Vec<Vec<CMat>> = dec_b
        .units
        .iter()
        .map(|us| {
            let mut fs = Vec::with_capacity(us.f_i0.len() * us.f_i0.len());
            for fi in &us.f_i0 {
                for fj in &us.f_i0 {
                    fs.push(mat_mul(fi, &dagger(fj)));
                }
            }
            fs
        })
        .collect();
    let embed_b = |x: &CMat| -> CMat {
        let mut out = CMat::zeros(d0, d0);
        for r in 0..r_count {
            let k = k_dims[r];
            for i in 0..k {
                for j in 0..k {
                    let coef = x[(b_off[r] + i, b_off[r] + j)];
                    out += &units[r][i * k + j] * coef;
                }
            }
        }
        out
    };
    let b_img: Vec<CMat> = b_onb.iter().map(&embed_b).collect();
    let mut worst = 0.0_f64;
    for (i, bi) in b_img.iter().enumerate() {
        for (j, bj) in b_img.iter().enumerate() {
            let gram = weighted_dot(bi, bj, &density0);
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram - cr(want)).norm());
        }
    }
    push(checks, "embedding-isometry", 0, worst, tol)?;

    let a_onb = a0.orthonormal_basis()?;
    let levels = vec![
        GnsLevel {
            algebra: Arc::new(b_m1),
            onb: b_onb,
            prev_img: Vec::new(),
        },
        GnsLevel {
            algebra: Arc::new(a0),
            onb: a_onb,
            prev_img: b_img,
        },
    ];

    let mut backend = GnsBackend {
        scalars: TowerScalars::new(index),
        quasi_basis: Vec::new(),
        levels,
        input_transform: v_a.clone(),
    };
    backend.quasi_basis = backend.pimsner_popa_basis(tol)?;
    Ok(backend)
}

impl GnsBackend {
    fn idx(&self, n: isize) -> Result<&GnsLevel> {
        let i = n + 1;
        if i < 0 || i as usize >= self.levels.len() {
            return Err(TowerError::IndexRange(format!(
                "level {} not built (have −1..={})",
                n,
                self.levels.len() as isize - 2
            )));
        }
        Ok(&self.levels[i as usize])
    }

    pub fn level_algebra(&self, n: isize) -> Result<Arc<MultiMatrixAlgebra>> {
        Ok(self.idx(n)?.algebra.clone())
    }

    pub fn embed_to(&self, x: &CMat, from: isize, to: isize) -> Result<CMat> {
        let start = self.idx(from)?;
        if x.nrows() != start.algebra.ambient_dim || x.ncols() != start.algebra.ambient_dim {
            return Err(TowerError::InvalidModel(format!(
                "embedding input is {}x{}, level {} ambient is {}",
                x.nrows(),
                x.ncols(),
                from,
                start.algebra.ambient_dim
            )));
        }
        let mut acc = x.clone();
        let mut f = from;
        while f < to {
            let lower = self.idx(f)?;
            let upper = self.idx(f + 1)?;
            let density = &lower.algebra.trace.density;
            let coeffs: Vec<C64> = lower
                .onb
                .iter()
                .map(|b| weighted_dot(b, &acc, density))
                .collect();
            acc = expand(&coeffs, &upper.prev_img, upper.algebra.ambient_dim);
            f += 1;
        }
        Ok(acc)
    }

    pub fn expect_step(&self, x: &CMat, n: isize) -> Result<CMat> {
        let here = self.idx(n)?;
        let below = self.idx(n - 1)?;
        if x.nrows() != here.algebra.ambient_dim || x.ncols() != here.algebra.ambient_dim {
            return Err(TowerError::InvalidModel(format!(
                "expectation input is {}x{}, level {} ambient is {}",
                x.nrows(),
                x.ncols(),
                n,
                here.algebra.ambient_dim
            )));
        }
        let density = &here.algebra.trace.density;
        let coeffs: Vec<C64> = here
            .prev_img
            .iter()
            .map(|img| weighted_dot(img, x, density))
            .collect();
        Ok(expand(&coeffs, &below.onb, below.algebra.ambient_dim))
    }

    pub fn box_space(&self, j: isize, m: isize, tol: f64) -> Result<MultiMatrixAlgebra> {
        let ambient = self.idx(m)?.algebra.clone();
        if ambient.ambient_dim > BOX_AMBIENT_CAP || ambient.dimension() > BOX_DIM_CAP {
            return Err(TowerError::DimensionCap(format!(
                "relative commutant at level {} exceeds the backend caps ({} ambient, {} dim)",
                m,
                ambient.ambient_dim,
                ambient.dimension()
            )));
        }
        let gens: Vec<CMat> = self
            .idx(j)?
            .onb
            .clone()
            .iter()
            .map(|x| self.embed_to(x, j, m))
            .collect::<Result<_>>()?;
        commutant(&gens, &ambient, tol)
    }

    pub fn input_to_internal(&self, x: &CMat) -> Result<CMat> {
        let d_in = self.input_transform.nrows();
        if x.nrows() != d_in || x.ncols() != d_in {
            return Err(TowerError::InvalidModel(format!(
                "input matrix is {}x{}, the declared ambient is {}",
                x.nrows(),
                x.ncols(),
                d_in
            )));
        }
        Ok(mat_mul3(&dagger(&self.input_transform), x, &self.input_transform))
    }

    /// Gram–Schmidt over the level-0 basis relative to E₀: subtract the
    /// part already reproduced, then normalize the remainder by the
    /// inverse square root of E₀(r*r).
    fn pimsner_popa_basis(&self, tol: f64) -> Result<Vec<CMat>> {
        let a0 = self.idx(0)?;
        let skip = ((tol * 100.0).max(1e-10)).powi(2);
        let mut lam: Vec<CMat> = Vec::new();
        for u in &a0.onb {
            let mut r = u.clone();
            for _ in 0..2 {
                for l in &lam {
                    let el = self.expect_step(&mat_mul(&dagger(l), &r), 0)?;
                    let up = self.embed_to(&el, -1, 0)?;
                    r -= mat_mul(l, &up);
                }
            }
            let h = self.expect_step(&mat_mul(&dagger(&r), &r), 0)?;
            let weight = self.idx(-1)?.algebra.tr(&h).re;
            if weight <= skip {
                continue;
            }
            let hs = pinv_sqrt(&h, 1e-10);
            let up = self.embed_to(&hs, -1, 0)?;
            lam.push(mat_mul(&r, &up));
        }
        if lam.is_empty() {
            return Err(TowerError::Numerical(
                "quasi-basis construction produced no elements".into(),
            ));
        }
        Ok(lam)
    }

    /// One basic-construction step on L²(A_m, tr_m): left multiplication
    /// plus the projection onto the lower level, generated span, block
    /// decomposition, compression, and the Markov trace extension.
    pub fn extend_one(&mut self, tol: f64) -> Result<Level> {
        let new_n = self.levels.len() as isize - 1;
        let (top_alg, top_onb, top_prev_img) = {
            let top = self.levels.last().unwrap();
            (top.algebra.clone(), top.onb.clone(), top.prev_img.clone())
        };
        let dim = top_onb.len();
        if dim > REP_CAP {
            return Err(TowerError::DimensionCap(format!(
                "basic construction on a {}-dimensional algebra exceeds the cap {}",
                dim, REP_CAP
            )));
        }
        let density = &top_alg.trace.density;

        // left multiplication in trace coordinates
        let mut pi: Vec<CMat> = Vec::with_capacity(dim);
        for x in &top_onb {
            let mut p = CMat::zeros(dim, dim);
            for (t, bt) in top_onb.iter().enumerate() {
                let xbt = mat_mul(x, bt);
                for (s, bs) in top_onb.iter().enumerate() {
                    p[(s, t)] = weighted_dot(bs, &xbt, density);
                }
            }
            pi.push(p);
        }

        // projection onto the embedded lower level
        let prev_dim = top_prev_img.len();
        let mut u_e = CMat::zeros(dim, prev_dim);
        for (a, img) in top_prev_img.iter().enumerate() {
            for (s, bs) in top_onb.iter().enumerate() {
                u_e[(s, a)] = weighted_dot(bs, img, density);
            }
        }
        let gram = mat_mul(&dagger(&u_e), &u_e);
        let u_e = mat_mul(&u_e, &pinv_sqrt(&gram, 1e-12));
        let e_proj = mat_mul(&u_e, &dagger(&u_e));

        // generated algebra: span of π(A_m) and π(A_m)·e·π(A_m)
        let unif = vec![1.0 / dim as f64; dim];
        let mut onb_u: Vec<CMat> = Vec::new();
        for p in &pi {
            grow_onb(&mut onb_u, p, &unif, tol);
        }
        for p in &pi {
            let pe = mat_mul(p, &e_proj);
            for q in &pi {
                let cand = mat_mul(&pe, q);
                grow_onb(&mut onb_u, &cand, &unif, tol);
                if onb_u.len() > ALG_DIM_CAP {
                    return Err(TowerError::DimensionCap(format!(
                        "level {} dimension exceeds the cap {}",
                        new_n, ALG_DIM_CAP
                    )));
                }
            }
        }

        let temp = MultiMatrixAlgebra {
            ambient_dim: dim,
            repr: AlgebraRepr::Explicit {
                basis: Vec::new(),
                onb: onb_u.clone(),
            },
            block_dims: Vec::new(),
            unit: eye(dim),
            trace: TraceState {
                weights: Vec::new(),
                density: unif.clone(),
            },
        };
        let dec = block_decompose(&temp, tol)?;
        let v = crate::mmalg::blocks::compression_isometry(&dec, tol)?;
        let d_new = v.ncols();
        let dims_new = dec.data.dims.clone();
        let mut offs = Vec::with_capacity(dims_new.len());
        let mut acc = 0usize;
        for &n in &dims_new {
            offs.push(acc);
            acc += n;
        }

        let compress = |x: &CMat| mat_mul3(&dagger(&v), x, &v);
        let pi_c: Vec<CMat> = pi.iter().map(&compress).collect();
        let ehat = compress(&e_proj);

        // Markov extension of the trace: block weights from the
        // restriction rows, the Markov rows, and normalization
        let blocks = dims_new.len();
        let tau = self.scalars.tau;
        let rows = 4 * dim + 1;
        let mut lhs = RMat::zeros(rows, blocks);
        let mut rhs = nalgebra::DVector::<f64>::zeros(rows);
        for (i, x) in pi_c.iter().enumerate() {
            let ti = top_alg.tr(&top_onb[i]);
            let xe = mat_mul(x, &ehat);
            for j in 0..blocks {
                let plain = block_trace(x, offs[j], dims_new[j]);
                let markov = block_trace(&xe, offs[j], dims_new[j]);
                lhs[(4 * i, j)] = plain.re;
                lhs[(4 * i + 1, j)] = plain.im;
                lhs[(4 * i + 2, j)] = markov.re;
                lhs[(4 * i + 3, j)] = markov.im;
            }
            rhs[4 * i] = ti.re;
            rhs[4 * i + 1] = ti.im;
            rhs[4 * i + 2] = tau * ti.re;
            rhs[4 * i + 3] = tau * ti.im;
        }
        for j in 0..blocks {
            lhs[(rows - 1, j)] = dims_new[j] as f64;
        }
        rhs[rows - 1] = 1.0;
        let svd = lhs.clone().svd(true, true);
        let w = svd
            .solve(&rhs, 1e-13)
            .map_err(|e| TowerError::Numerical(format!("trace extension solve failed: {}", e)))?;
        let residual = (&lhs * &w - &rhs).amax();
        if residual > (tol * 100.0).max(1e-8) {
            return Err(TowerError::Numerical(format!(
                "Markov trace extension inconsistent at level {} (residual {:.3e})",
                new_n, residual
            )));
        }
        if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(TowerError::Numerical(format!(
                "non-positive trace weight at level {}",
                new_n
            )));
        }
        let mut density_new = vec![0.0; d_new];
        for j in 0..blocks {
            for i in offs[j]..offs[j] + dims_new[j] {
                density_new[i] = w[j];
            }
        }

        let c_span: Vec<CMat> = onb_u.iter().map(&compress).collect();
        let onb_new = span_orthonormalize(&c_span, &density_new, tol);
        if onb_new.len() != onb_u.len() {
            return Err(TowerError::Numerical(format!(
                "compression changed the algebra dimension ({} → {})",
                onb_u.len(),
                onb_new.len()
            )));
        }
        let algebra = Arc::new(MultiMatrixAlgebra {
            ambient_dim: d_new,
            repr: AlgebraRepr::Explicit {
                basis: c_span,
                onb: onb_new.clone(),
            },
            block_dims: dims_new,
            unit: eye(d_new),
            trace: TraceState {
                weights: w.iter().copied().collect(),
                density: density_new,
            },
        });
        self.levels.push(GnsLevel {
            algebra: algebra.clone(),
            onb: onb_new,
            prev_img: pi_c,
        });
        Ok(Level {
            n: new_n,
            algebra,
            jones: Some(ehat),
        })
    }
}
