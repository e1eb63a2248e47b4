//! Block decomposition of multi-matrix algebras.
//!
//! Finds the center of a span, its minimal central projections, the block
//! sizes and multiplicities, trace weights, and (on demand) a system of
//! matrix units per block. All randomized steps draw from fixed internal
//! seeds so results are reproducible run to run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::algebra::{AlgebraRepr, MultiMatrixAlgebra, TraceState};
use super::linalg::{
    dagger, eye, fro_norm, funcalc, hermitian_eig, hermitize, mat_mul, nullspace_scaled,
    span_orthonormalize, weighted_dot, CMat,
};
use super::random::gaussian_coeffs;
use crate::{Result, TowerError};

/// Structural block data of an algebra span.
#[derive(Clone, Debug)]
pub struct BlockData {
    /// Minimal central projections, canonical order.
    pub projections: Vec<CMat>,
    /// Full matrix block sizes n_k.
    pub dims: Vec<usize>,
    /// Ambient multiplicity of each block (rank of a minimal algebra
    /// projection inside the block).
    pub mults: Vec<usize>,
    /// Trace of a minimal projection per block.
    pub weights: Vec<f64>,
}

/// Matrix-unit data for one block: the partial isometries f_{i,0},
/// i = 0..n, with f_{i,0}†f_{j,0} = δ_{ij}·f_{0,0} and f_{0,0} a minimal
/// projection of the algebra supported in the block.
#[derive(Clone, Debug)]
pub struct BlockUnits {
    pub f_i0: Vec<CMat>,
}

/// Full decomposition result: block data plus per-block matrix units.
#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    pub data: BlockData,
    pub units: Vec<BlockUnits>,
}

fn seeded(extra: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0xB10C_0000_0000 ^ extra)
}

/// Random Hermitian element of the span (deterministic in `extra`).
fn generic_hermitian(onb: &[CMat], extra: u64) -> CMat {
    let mut rng = seeded(extra);
    let coeffs = gaussian_coeffs(&mut rng, onb.len());
    let d = onb[0].nrows();
    let mut h = CMat::zeros(d, d);
    for (c, b) in coeffs.iter().zip(onb.iter()) {
        h += b * *c;
    }
    hermitize(&h)
}

/// Coordinate matrix of x ↦ [g, x] on the span, in the given orthonormal
/// basis: K[i][j] = ⟨onb_i, g·onb_j − onb_j·g⟩.
fn commutator_coord_map(g: &CMat, onb: &[CMat], density: &[f64]) -> CMat {
    let dim = onb.len();
    let mut k = CMat::zeros(dim, dim);
    for (j, b) in onb.iter().enumerate() {
        let comm = mat_mul(g, b) - mat_mul(b, g);
        for (i, bi) in onb.iter().enumerate() {
            k[(i, j)] = weighted_dot(bi, &comm, density);
        }
    }
    k
}

/// Orthonormal basis of the center of the span.
fn center_onb(onb: &[CMat], density: &[f64], tol: f64) -> Result<Vec<CMat>> {
    let dim = onb.len();
    if dim == 0 {
        return Ok(Vec::new());
    }
    let d = onb[0].nrows();
    let mut gens: Vec<CMat> = vec![generic_hermitian(onb, 1), generic_hermitian(onb, 2)];
    for round in 0..(dim + 4) {
        // intersect nullspaces of the commutator maps of the generators
        let mut v: Option<CMat> = None;
        for g in &gens {
            let k = commutator_coord_map(g, onb, density);
            // scale by the size the map would have without the cancellation
            // in [g, x]; a span commuting with g up to roundoff must read as
            // a full nullspace, not as amplified noise
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
        let v = v.unwrap();
        let mut cand: Vec<CMat> = Vec::with_capacity(v.ncols());
        for c in 0..v.ncols() {
            let mut z = CMat::zeros(d, d);
            for (i, b) in onb.iter().enumerate() {
                z += b * v[(i, c)];
            }
            cand.push(z);
        }
        // verify the candidate central elements against every basis element
        let mut worst = (0usize, 0.0_f64);
        for (i, b) in onb.iter().enumerate() {
            for z in &cand {
                let r = fro_norm(&(mat_mul(z, b) - mat_mul(b, z)))
                    / (fro_norm(z) * fro_norm(b)).max(1e-30);
                if r > worst.1 {
                    worst = (i, r);
                }
            }
        }
        if cand.is_empty() || worst.1 <= (tol * 100.0).max(1e-10) {
            return Ok(span_orthonormalize(&cand, density, tol));
        }
        gens.push(onb[worst.0].clone());
        let _ = round;
    }
    Err(TowerError::Numerical(
        "center computation did not stabilize".into(),
    ))
}

/// Cluster sorted eigenvalues by gaps.
fn cluster_indices(vals: &[f64], eps: f64) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if (v - vals[*c.last().unwrap()]).abs() <= eps => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    clusters
}

/// Minimal central projections from a center orthonormal basis.
fn minimal_central_projections(
    center: &[CMat],
    unit: &CMat,
    tol: f64,
) -> Result<Vec<CMat>> {
    let c = center.len();
    let d = unit.nrows();
    if c <= 1 {
        return Ok(vec![unit.clone()]);
    }
    for attempt in 0..8u64 {
        let z = generic_hermitian(center, 100 + attempt);
        let (vals, vecs) = hermitian_eig(&z);
        let range = vals.last().unwrap() - vals.first().unwrap();
        let eps = 1e-6 * range.max(1.0);
        let clusters = cluster_indices(&vals, eps);
        if clusters.len() != c {
            continue;
        }
        let mut projections = Vec::with_capacity(c);
        let mut ok = true;
        for cl in &clusters {
            let mut p = CMat::zeros(d, d);
            for &i in cl {
                let v = vecs.column(i);
                for r in 0..d {
                    for s in 0..d {
                        p[(r, s)] += v[r] * v[s].conj();
                    }
                }
            }
            // p must be an idempotent in the span of the center
            let idem = fro_norm(&(mat_mul(&p, &p) - &p));
            if idem > (tol * 100.0).max(1e-9) * (fro_norm(&p).max(1.0)) {
                ok = false;
                break;
            }
            projections.push(p);
        }
        if !ok {
            continue;
        }
        let sum: CMat = projections
            .iter()
            .fold(CMat::zeros(d, d), |acc, p| acc + p);
        if fro_norm(&(sum - unit)) > (tol * 100.0).max(1e-9) * (d as f64).sqrt() {
            continue;
        }
        return Ok(projections);
    }
    Err(TowerError::Numerical(
        "could not separate central projections (center rank ambiguous at tolerance)"
            .into(),
    ))
}

fn round_key(x: f64) -> i64 {
    (x * 1e6).round() as i64
}

/// Canonical ordering: block dimension ascending, trace weight descending,
/// then lexicographically by the rounded diagonal of the central projection.
fn canonical_order(data: &mut BlockData, units: Option<&mut Vec<BlockUnits>>) {
    let n = data.dims.len();
    let mut idx: Vec<usize> = (0..n).collect();
    let fingerprints: Vec<Vec<i64>> = data
        .projections
        .iter()
        .map(|p| p.diagonal().iter().map(|z| round_key(z.re)).collect())
        .collect();
    idx.sort_by(|&a, &b| {
        data.dims[a]
            .cmp(&data.dims[b])
            .then(round_key(data.weights[b]).cmp(&round_key(data.weights[a])))
            .then(fingerprints[a].cmp(&fingerprints[b]))
    });
    data.projections = idx.iter().map(|&i| data.projections[i].clone()).collect();
    data.dims = idx.iter().map(|&i| data.dims[i]).collect();
    data.mults = idx.iter().map(|&i| data.mults[i]).collect();
    data.weights = idx.iter().map(|&i| data.weights[i]).collect();
    if let Some(units) = units {
        *units = idx.iter().map(|&i| units[i].clone()).collect();
    }
}

/// Block data for a span given by a trace-orthonormal basis.
pub fn span_block_data(onb: &[CMat], density: &[f64], tol: f64) -> Result<BlockData> {
    if onb.is_empty() {
        return Err(TowerError::InvalidModel("empty span".into()));
    }
    let center = center_onb(onb, density, tol)?;
    let d = onb[0].nrows();
    let unit = eye(d);
    let projections = minimal_central_projections(&center, &unit, tol)?;
    let tr = TraceState {
        weights: vec![],
        density: density.to_vec(),
    };
    let mut dims = Vec::new();
    let mut mults = Vec::new();
    let mut weights = Vec::new();
    for p in &projections {
        // dimension of the cut p·span·p equals n_k²
        let cut: Vec<CMat> = onb.iter().map(|b| mat_mul(&mat_mul(p, b), p)).collect();
        let cut_dim = span_orthonormalize(&cut, density, (tol * 10.0).max(1e-10)).len();
        let nk = (cut_dim as f64).sqrt().round() as usize;
        if nk * nk != cut_dim {
            return Err(TowerError::Numerical(format!(
                "block span dimension {} is not a perfect square",
                cut_dim
            )));
        }
        let rank = p.diagonal().iter().map(|z| z.re).sum::<f64>().round() as usize;
        if nk == 0 || rank % nk != 0 {
            return Err(TowerError::Numerical(format!(
                "block rank {} incompatible with block dimension {}",
                rank, nk
            )));
        }
        dims.push(nk);
        mults.push(rank / nk);
        weights.push(tr.eval(p).re / nk as f64);
    }
    let mut data = BlockData {
        projections,
        dims,
        mults,
        weights,
    };
    canonical_order(&mut data, None);
    Ok(data)
}

/// Orthonormal columns spanning the range of a Hermitian projection.
pub(crate) fn range_onb(p: &CMat, _tol: f64) -> CMat {
    let (vals, vecs) = hermitian_eig(p);
    let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 0.5).collect();
    let mut q = CMat::zeros(p.nrows(), cols.len());
    for (c, &i) in cols.iter().enumerate() {
        q.set_column(c, &vecs.column(i));
    }
    q
}

/// Pseudo-inverse square root of a positive semidefinite matrix.
pub(crate) fn pinv_sqrt(h: &CMat, tol: f64) -> CMat {
    let (vals, _) = hermitian_eig(h);
    let vmax = vals.last().copied().unwrap_or(0.0).max(0.0);
    let cut = (tol * vmax).max(1e-300);
    funcalc(h, |t| if t > cut { 1.0 / t.sqrt() } else { 0.0 })
}

/// Matrix units for one block (central projection `p`) of the span.
fn units_for_block(
    onb: &[CMat],
    density: &[f64],
    p: &CMat,
    nk: usize,
    mk: usize,
    tol: f64,
) -> Result<BlockUnits> {
    let membership_tol = (tol * 1e3).max(1e-8);
    for attempt in 0..8u64 {
        // generic self-adjoint element cut to the block
        let a = {
            let h = generic_hermitian(onb, 200 + attempt);
            mat_mul(&mat_mul(p, &h), p)
        };
        let q = range_onb(p, tol);
        let ar = mat_mul(&mat_mul(&dagger(&q), &a), &q);
        let (vals, vecs) = hermitian_eig(&ar);
        let range = (vals.last().unwrap() - vals.first().unwrap()).max(1.0);
        let clusters = cluster_indices(&vals, 1e-6 * range);
        if clusters.len() != nk || clusters.iter().any(|c| c.len() != mk) {
            continue;
        }
        // spectral projections, lifted back to the ambient space
        let lift = |cl: &Vec<usize>| -> CMat {
            let d = p.nrows();
            let mut pr = CMat::zeros(d, d);
            for &i in cl {
                let v = &q * vecs.column(i);
                for r in 0..d {
                    for s in 0..d {
                        pr[(r, s)] += v[r] * v[s].conj();
                    }
                }
            }
            pr
        };
        let spectral: Vec<CMat> = clusters.iter().map(lift).collect();
        let e0 = spectral[0].clone();
        let mut f_i0 = vec![e0.clone()];
        let g = {
            let mut rng = seeded(300 + attempt);
            let coeffs = gaussian_coeffs(&mut rng, onb.len());
            let d = p.nrows();
            let mut m = CMat::zeros(d, d);
            for (c, b) in coeffs.iter().zip(onb.iter()) {
                m += b * *c;
            }
            m
        };
        let mut ok = true;
        for ei in spectral.iter().skip(1) {
            let t = mat_mul(&mat_mul(ei, &g), &e0);
            let u = mat_mul(&t, &pinv_sqrt(&mat_mul(&dagger(&t), &t), 1e-10));
            // u must be a partial isometry from e0 onto ei
            let uu = mat_mul(&dagger(&u), &u);
            if fro_norm(&(&uu - &e0)) > membership_tol * (mk as f64).sqrt().max(1.0) {
                ok = false;
                break;
            }
            f_i0.push(u);
        }
        if !ok {
            continue;
        }
        // all units must lie in the algebra span
        let span_proj = |x: &CMat| -> CMat {
            let mut out = CMat::zeros(x.nrows(), x.ncols());
            for b in onb {
                let coef = weighted_dot(b, x, density);
                out += b * coef;
            }
            out
        };
        let in_span = f_i0
            .iter()
            .all(|f| fro_norm(&(f - span_proj(f))) <= membership_tol * fro_norm(f).max(1.0));
        if !in_span {
            continue;
        }
        return Ok(BlockUnits { f_i0 });
    }
    Err(TowerError::Numerical(
        "matrix-unit construction failed for a block".into(),
    ))
}

/// Decompose an algebra into blocks, returning minimal central projections,
/// block dimensions, and per-block matrix units enabling a minimal faithful
/// re-representation.
pub fn block_decompose(alg: &MultiMatrixAlgebra, tol: f64) -> Result<BlockDecomposition> {
    match &alg.repr {
        AlgebraRepr::Full => {
            let d = alg.ambient_dim;
            let mut f_i0 = Vec::with_capacity(d);
            for i in 0..d {
                f_i0.push(super::linalg::matrix_unit(d, i, 0));
            }
            Ok(BlockDecomposition {
                data: BlockData {
                    projections: vec![eye(d)],
                    dims: vec![d],
                    mults: vec![1],
                    weights: vec![1.0 / d as f64],
                },
                units: vec![BlockUnits { f_i0 }],
            })
        }
        AlgebraRepr::TensorFactor { left, mid, right } => {
            let d = alg.ambient_dim;
            let mut f_i0 = Vec::with_capacity(*mid);
            for i in 0..*mid {
                let f = super::linalg::matrix_unit(*mid, i, 0);
                f_i0.push(super::linalg::kron(
                    &super::linalg::kron(&eye(*left), &f),
                    &eye(*right),
                ));
            }
            Ok(BlockDecomposition {
                data: BlockData {
                    projections: vec![eye(d)],
                    dims: vec![*mid],
                    mults: vec![left * right],
                    weights: vec![1.0 / *mid as f64],
                },
                units: vec![BlockUnits { f_i0 }],
            })
        }
        AlgebraRepr::Explicit { onb, .. } => {
            let density = &alg.trace.density;
            let mut data = span_block_data(onb, density, tol)?;
            let mut units = Vec::with_capacity(data.dims.len());
            for (k, p) in data.projections.iter().enumerate() {
                units.push(units_for_block(
                    onb,
                    density,
                    p,
                    data.dims[k],
                    data.mults[k],
                    tol,
                )?);
            }
            canonical_order(&mut data, Some(&mut units));
            Ok(BlockDecomposition { data, units })
        }
    }
}

/// Build a MultiMatrixAlgebra from a spanning set of matrices, verifying
/// closure under product and adjoint, the unit, and extracting block data.
pub fn algebra_from_span(
    mats: &[CMat],
    density: Vec<f64>,
    tol: f64,
) -> Result<MultiMatrixAlgebra> {
    if mats.is_empty() {
        return Err(TowerError::InvalidModel("empty spanning set".into()));
    }
    let d = mats[0].nrows();
    if density.len() != d {
        return Err(TowerError::InvalidModel(
            "density length does not match ambient dimension".into(),
        ));
    }
    let onb = span_orthonormalize(mats, &density, tol);
    let dim = onb.len();
    let project = |x: &CMat| -> CMat {
        let mut out = CMat::zeros(d, d);
        for b in &onb {
            let coef = weighted_dot(b, x, &density);
            out += b * coef;
        }
        out
    };
    let residual = |x: &CMat| fro_norm(&(x - project(x))) / fro_norm(x).max(1.0);
    let closure_tol = (tol * 1e3).max(1e-8);
    // unit must lie in the span
    let unit = eye(d);
    if residual(&unit) > closure_tol {
        return Err(TowerError::InvalidModel(
            "span does not contain the identity".into(),
        ));
    }
    // closure under adjoint and products (exhaustive for small spans,
    // sampled otherwise)
    let mut worst = 0.0_f64;
    if dim <= 48 {
        for a in &onb {
            worst = worst.max(residual(&dagger(a)));
            for b in &onb {
                worst = worst.max(residual(&mat_mul(a, b)));
            }
        }
    } else {
        let mut rng = seeded(400);
        for _ in 0..32 {
            let x = {
                let c = gaussian_coeffs(&mut rng, dim);
                let mut m = CMat::zeros(d, d);
                for (ci, b) in c.iter().zip(onb.iter()) {
                    m += b * *ci;
                }
                m
            };
            let y = {
                let c = gaussian_coeffs(&mut rng, dim);
                let mut m = CMat::zeros(d, d);
                for (ci, b) in c.iter().zip(onb.iter()) {
                    m += b * *ci;
                }
                m
            };
            worst = worst.max(residual(&dagger(&x)));
            worst = worst.max(residual(&mat_mul(&x, &y)));
        }
    }
    if worst > closure_tol {
        return Err(TowerError::InvalidModel(format!(
            "span is not closed under product/adjoint (residual {:.3e})",
            worst
        )));
    }
    let data = span_block_data(&onb, &density, tol)?;
    Ok(MultiMatrixAlgebra {
        ambient_dim: d,
        repr: AlgebraRepr::Explicit {
            basis: mats.to_vec(),
            onb,
        },
        block_dims: data.dims.clone(),
        unit,
        trace: TraceState {
            weights: data.weights.clone(),
            density,
        },
    })
}

/// Compression isometry from a block decomposition: orthonormal columns V
/// such that x ↦ V†xV is a faithful *-isomorphism of the algebra onto
/// ⊕_k M_{n_k} block-diagonal form.
pub fn compression_isometry(dec: &BlockDecomposition, tol: f64) -> Result<CMat> {
    let d = dec.data.projections[0].nrows();
    let total: usize = dec.data.dims.iter().sum();
    let mut v = CMat::zeros(d, total);
    let mut col = 0;
    for (k, units) in dec.units.iter().enumerate() {
        let e0 = &units.f_i0[0];
        let q = range_onb(e0, tol);
        if q.ncols() == 0 {
            return Err(TowerError::Numerical(
                "empty minimal projection range".into(),
            ));
        }
        let xi = q.column(0).into_owned();
        for f in &units.f_i0 {
            let w = f * &xi;
            let n = w.norm();
            if n < 0.5 {
                return Err(TowerError::Numerical(
                    "degenerate compression column".into(),
                ));
            }
            v.set_column(col, &w.unscale(n));
            col += 1;
        }
        let _ = k;
    }
    Ok(v)
}
