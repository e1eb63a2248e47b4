//! Entropy and index invariants of an inclusion: Perron–Frobenius data of
//! the inclusion matrix, trace entropies, relative entropy between
//! subalgebras, depth detection, and the entropy growth of the tower.

use crate::mmalg::algebra::MultiMatrixAlgebra;
use crate::mmalg::blocks::{block_decompose, BlockData};
use crate::mmalg::functionals::{entropy_functional, eta};
use crate::mmalg::linalg::{
    eye, fro_norm, hermitian_eig, mat_mul, mat_mul3, span_orthonormalize, CMat,
};
use crate::tower::{Tower, TowerLike};
use crate::{Result, TowerError};

/// Real matrices used for inclusion-matrix arithmetic.
pub type RMat = nalgebra::DMatrix<f64>;

/// Perron–Frobenius eigenpair of an irreducible nonnegative matrix.
#[derive(Clone, Debug)]
pub struct PerronFrobenius {
    pub value: f64,
    /// Strictly positive eigenvector, normalized to ℓ¹ norm 1.
    pub vector: Vec<f64>,
    /// ‖Mv − λv‖_∞ / max(1, λ) after convergence.
    pub residual: f64,
    pub iterations: usize,
}

/// Checks that every node is reachable from node 0 and node 0 is reachable
/// from every node in the directed support graph of `m`.
fn strongly_connected(m: &RMat) -> bool {
    let n = m.nrows();
    let reach = |transpose: bool| -> usize {
        let mut seen = vec![false; n];
        let mut queue = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop() {
            for j in 0..n {
                let w = if transpose { m[(j, i)] } else { m[(i, j)] };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push(j);
                }
            }
        }
        count
    };
    reach(false) == n && reach(true) == n
}

/// Perron–Frobenius eigenvalue and eigenvector of an irreducible
/// nonnegative square matrix, by shifted power iteration. Errors on
/// reducible input and on residuals above 1e−10.
pub fn pf_eigen(m: &RMat) -> Result<PerronFrobenius> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(TowerError::InvalidModel(
            "Perron–Frobenius input must be square and nonempty".into(),
        ));
    }
    let mut max_entry = 0.0_f64;
    for &x in m.iter() {
        if x < -1e-14 {
            return Err(TowerError::InvalidModel(
                "Perron–Frobenius input must be entrywise nonnegative".into(),
            ));
        }
        max_entry = max_entry.max(x);
    }
    if n == 1 {
        return Ok(PerronFrobenius {
            value: m[(0, 0)],
            vector: vec![1.0],
            residual: 0.0,
            iterations: 0,
        });
    }
    if !strongly_connected(m) {
        return Err(TowerError::Numerical(
            "inclusion matrix is reducible; no unique Perron–Frobenius pair".into(),
        ));
    }
    // shift to kill oscillation on periodic support graphs
    let alpha = max_entry.max(1.0);
    let shifted = {
        let mut s = m.clone();
        for i in 0..n {
            s[(i, i)] += alpha;
        }
        s
    };
    let mut v = nalgebra::DVector::<f64>::from_element(n, 1.0 / n as f64);
    let mut iterations = 0usize;
    loop {
        let w = &shifted * &v;
        let norm = w.iter().map(|x| x.abs()).sum::<f64>();
        let w = w.unscale(norm);
        let diff = (&w - &v).amax();
        v = w;
        iterations += 1;
        if diff <= 1e-12 || iterations >= 200_000 {
            break;
        }
    }
    let mv = m * &v;
    let value = v.dot(&mv) / v.dot(&v);
    let residual = (&mv - &v * value).amax() / value.abs().max(1.0);
    if residual > 1e-10 {
        return Err(TowerError::Numerical(format!(
            "Perron–Frobenius iteration did not converge (residual {:.3e})",
            residual
        )));
    }
    if v.iter().any(|&x| x <= 0.0) {
        return Err(TowerError::Numerical(
            "Perron–Frobenius vector is not strictly positive".into(),
        ));
    }
    Ok(PerronFrobenius {
        value,
        vector: v.iter().copied().collect(),
        residual,
        iterations,
    })
}

/// Trace entropy of a block datum: −Σ n_k·s_k·log s_k, the von Neumann
/// entropy of the density implementing the trace in the minimal faithful
/// representation, cross-checked against the eigenvalues of that density.
fn block_data_entropy(data: &BlockData) -> Result<f64> {
    let total: f64 = data
        .dims
        .iter()
        .zip(&data.weights)
        .map(|(&n, &s)| n as f64 * s)
        .sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(TowerError::InvalidModel(format!(
            "trace entropy needs a state (tr(1) = {:.6})",
            total
        )));
    }
    let h: f64 = data
        .dims
        .iter()
        .zip(&data.weights)
        .map(|(&n, &s)| n as f64 * eta(s))
        .sum();
    // density in the minimal representation: s_k on n_k diagonal slots
    let dim: usize = data.dims.iter().sum();
    let mut density = CMat::zeros(dim, dim);
    let mut at = 0;
    for (&n, &s) in data.dims.iter().zip(&data.weights) {
        for _ in 0..n {
            density[(at, at)] = crate::mmalg::linalg::cr(s);
            at += 1;
        }
    }
    let (vals, _) = hermitian_eig(&density);
    let h_eig: f64 = vals.iter().map(|&v| eta(v.max(0.0))).sum();
    if (h - h_eig).abs() > 1e-10 * h.abs().max(1.0) {
        return Err(TowerError::Numerical(format!(
            "trace entropy disagrees with its eigenvalue evaluation ({:.3e} vs {:.3e})",
            h, h_eig
        )));
    }
    Ok(h)
}

/// Trace entropy H_tr of a multi-matrix algebra under its tracial state:
/// −Σ n_k·s_k·log s_k over the blocks.
pub fn algebra_entropy(alg: &MultiMatrixAlgebra, tol: f64) -> Result<f64> {
    let dec = block_decompose(alg, tol)?;
    block_data_entropy(&dec.data)
}

/// Trace entropy of the center: −Σ t_k·log t_k with t_k = n_k·s_k the
/// trace of the k-th minimal central projection.
pub fn center_entropy(alg: &MultiMatrixAlgebra, tol: f64) -> Result<f64> {
    let dec = block_decompose(alg, tol)?;
    Ok(dec
        .data
        .dims
        .iter()
        .zip(&dec.data.weights)
        .map(|(&n, &s)| eta(n as f64 * s))
        .sum())
}

/// Multiplicity matrix of a unital inclusion Q ⊆ R of multi-matrix
/// algebras in a common ambient space: entries[q][r] counts the copies of
/// Q-block q inside R-block r.
#[derive(Clone, Debug)]
pub struct InclusionMatrix {
    pub entries: RMat,
    /// Block sizes of Q (one per row).
    pub row_dims: Vec<usize>,
    /// Block sizes of R (one per column).
    pub col_dims: Vec<usize>,
    /// Whether the bipartite inclusion graph is connected.
    pub connected: bool,
}

impl InclusionMatrix {
    pub fn product_with_transpose(&self) -> RMat {
        &self.entries * self.entries.transpose()
    }

    /// Primitivity of GGᵗ: some power is entrywise positive.
    pub fn primitive_product(&self) -> bool {
        is_primitive(&self.product_with_transpose())
    }
}

/// Whether some power of the nonnegative square matrix is entrywise
/// positive (Wielandt exponent bound).
pub fn is_primitive(m: &RMat) -> bool {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return false;
    }
    let bound = (n - 1) * (n - 1) + 1;
    let mut p = m.clone();
    for _ in 0..bound {
        if p.iter().all(|&x| x > 0.0) {
            return true;
        }
        p *= m;
        // keep entries from overflowing on long products
        let scale = p.amax();
        if scale > 1e100 {
            p /= scale;
        }
    }
    p.iter().all(|&x| x > 0.0)
}

fn bipartite_connected(g: &RMat) -> bool {
    let (nq, nr) = (g.nrows(), g.ncols());
    let total = nq + nr;
    if total == 0 {
        return true;
    }
    let mut seen = vec![false; total];
    let mut queue = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = queue.pop() {
        if i < nq {
            for r in 0..nr {
                if g[(i, r)] > 0.0 && !seen[nq + r] {
                    seen[nq + r] = true;
                    count += 1;
                    queue.push(nq + r);
                }
            }
        } else {
            let r = i - nq;
            for q in 0..nq {
                if g[(q, r)] > 0.0 && !seen[q] {
                    seen[q] = true;
                    count += 1;
                    queue.push(q);
                }
            }
        }
    }
    count == total
}

/// Computes the inclusion matrix of Q ⊆ R from the traces of products of
/// their minimal central projections, verifying the entries are integers,
/// the dimension bookkeeping n_r = Σ_q g_{qr}·n_q, and the trace-vector
/// relation s_Q = G·s_R.
pub fn inclusion_matrix(
    sub: &MultiMatrixAlgebra,
    sup: &MultiMatrixAlgebra,
    tol: f64,
) -> Result<InclusionMatrix> {
    if sub.ambient_dim != sup.ambient_dim {
        return Err(TowerError::InvalidModel(
            "inclusion matrix needs both algebras in the same ambient space".into(),
        ));
    }
    let membership_tol = (tol * 1e3).max(1e-8);
    let dq = block_decompose(sub, tol)?;
    let dr = block_decompose(sup, tol)?;
    for zq in &dq.data.projections {
        if sup.membership_residual(zq) > membership_tol {
            return Err(TowerError::InvalidModel(
                "not a subalgebra: a central projection of Q escapes R".into(),
            ));
        }
    }
    let nq = dq.data.dims.len();
    let nr = dr.data.dims.len();
    let mut entries = RMat::zeros(nq, nr);
    for (qi, zq) in dq.data.projections.iter().enumerate() {
        for (ri, zr) in dr.data.projections.iter().enumerate() {
            let overlap = sup.trace.eval(&mat_mul(zq, zr)).re;
            let raw = overlap / (dq.data.dims[qi] as f64 * dr.data.weights[ri]);
            let g = raw.round();
            if (raw - g).abs() > 1e-6 || g < -0.5 {
                return Err(TowerError::Numerical(format!(
                    "non-integer multiplicity {:.6} between blocks {} and {}",
                    raw, qi, ri
                )));
            }
            entries[(qi, ri)] = g.max(0.0);
        }
    }
    for ri in 0..nr {
        let implied: f64 = (0..nq)
            .map(|qi| entries[(qi, ri)] * dq.data.dims[qi] as f64)
            .sum();
        if (implied - dr.data.dims[ri] as f64).abs() > 1e-6 {
            return Err(TowerError::Numerical(format!(
                "dimension bookkeeping fails on block {}: Σ g·n_q = {} vs n_r = {}",
                ri, implied, dr.data.dims[ri]
            )));
        }
    }
    for qi in 0..nq {
        let implied: f64 = (0..nr)
            .map(|ri| entries[(qi, ri)] * dr.data.weights[ri])
            .sum();
        if (implied - dq.data.weights[qi]).abs() > 1e-8 {
            return Err(TowerError::Numerical(format!(
                "trace vector relation fails on block {}: G·s_R = {:.3e} vs s_Q = {:.3e}",
                qi, implied, dq.data.weights[qi]
            )));
        }
    }
    let connected = bipartite_connected(&entries);
    Ok(InclusionMatrix {
        entries,
        row_dims: dq.data.dims.clone(),
        col_dims: dr.data.dims.clone(),
        connected,
    })
}

/// Inclusion matrix of A'∩Aₘ ⊆ A'∩Aₘ₊₁, both realized at level m+1.
pub fn box_inclusion_matrix(t: &Tower, m: usize, tol: f64) -> Result<InclusionMatrix> {
    let at = m as isize + 1;
    let basis = t.box_space(0, m as isize)?.orthonormal_basis()?;
    let embedded: Vec<CMat> = basis
        .iter()
        .map(|b| t.embed_to(b, m as isize, at))
        .collect::<Result<_>>()?;
    let density = t.level_algebra(at)?.trace.density.clone();
    let sub = crate::mmalg::blocks::algebra_from_span(&embedded, density, tol)?;
    let sup = t.box_space(0, at)?;
    inclusion_matrix(&sub, sup.as_ref(), tol)
}

/// Result of scanning for finite depth.
#[derive(Clone, Debug)]
pub struct DepthReport {
    pub finite_depth: bool,
    /// Smallest n with span{x·eₙ·y : x, y ∈ B'∩Aₙ₋₁} = B'∩Aₙ.
    pub depth: Option<usize>,
    /// Largest n the scan could examine.
    pub checked_to: usize,
}

/// Scans n = 1.. for the level where the Jones-word span fills the
/// relative commutant. Hitting the level cap is reported, not thrown.
pub fn depth_detect(t: &Tower, max_n: usize) -> Result<DepthReport> {
    let cap = (t.max_level().max(0) as usize).min(max_n);
    for n in 1..=cap {
        let at = n as isize;
        let small = t.box_space(-1, at - 1)?.orthonormal_basis()?;
        let embedded: Vec<CMat> = small
            .iter()
            .map(|b| t.embed_to(b, at - 1, at))
            .collect::<Result<_>>()?;
        let e = t.jones(n)?;
        let mut products = Vec::with_capacity(embedded.len() * embedded.len());
        for x in &embedded {
            for y in &embedded {
                products.push(mat_mul3(x, &e, y));
            }
        }
        let density = &t.level_algebra(at)?.trace.density;
        let rank = span_orthonormalize(&products, density, t.tol()).len();
        let full = t.box_space(-1, at)?.dimension();
        if rank == full {
            return Ok(DepthReport {
                finite_depth: true,
                depth: Some(n),
                checked_to: n,
            });
        }
    }
    Ok(DepthReport {
        finite_depth: false,
        depth: None,
        checked_to: cap,
    })
}

/// Trace entropies of the even relative commutants and their growth rate.
#[derive(Clone, Debug)]
pub struct EntropyGrowth {
    /// (n, H_tr(A'∩A₂ₙ)) for n = 1..=N.
    pub values: Vec<(usize, f64)>,
    /// Least-squares slope over the last ⌈N/2⌉ points (the slope of the
    /// single point through the origin when only one point remains).
    pub slope: f64,
}

/// Computes H_tr(A'∩A₂ₙ) for n ≤ `nmax` and fits the growth slope on the
/// stabilized tail.
pub fn entropy_growth(t: &Tower, nmax: usize) -> Result<EntropyGrowth> {
    if nmax == 0 {
        return Err(TowerError::IndexRange("entropy growth needs nmax ≥ 1".into()));
    }
    if 2 * nmax as isize > t.max_level() {
        return Err(TowerError::IndexRange(format!(
            "entropy growth to n = {} needs level {} but the tower stops at {}",
            nmax,
            2 * nmax,
            t.max_level()
        )));
    }
    let mut values = Vec::with_capacity(nmax);
    for n in 1..=nmax {
        let alg = t.box_space(0, 2 * n as isize)?;
        values.push((n, algebra_entropy(alg.as_ref(), t.tol())?));
    }
    let window = nmax.div_ceil(2);
    let tail = &values[nmax - window..];
    let slope = if tail.len() == 1 {
        tail[0].1 / tail[0].0 as f64
    } else {
        let xbar = tail.iter().map(|&(n, _)| n as f64).sum::<f64>() / tail.len() as f64;
        let ybar = tail.iter().map(|&(_, h)| h).sum::<f64>() / tail.len() as f64;
        let num: f64 = tail
            .iter()
            .map(|&(n, h)| (n as f64 - xbar) * (h - ybar))
            .sum();
        let den: f64 = tail
            .iter()
            .map(|&(n, _)| (n as f64 - xbar).powi(2))
            .sum();
        num / den
    };
    Ok(EntropyGrowth { values, slope })
}

/// The entropy of the canonical shift, computed two ways, plus the step
/// relative entropy the shift theorem implies.
#[derive(Clone, Debug)]
pub struct ShiftEntropy {
    pub depth: usize,
    /// H_tr(Γ) = log β from the Perron–Frobenius eigenvalue of GGᵗ at the
    /// stabilized level.
    pub h_shift: f64,
    pub beta: f64,
    pub pf_residual: f64,
    /// ‖GGᵗ·s − [A:B]₀·s‖_∞ / ‖s‖_∞ on the stabilized trace vector.
    pub trace_vector_residual: f64,
    /// Growth slope of H_tr(A'∩A₂ₙ).
    pub growth_slope: f64,
    /// |h_shift − growth_slope|.
    pub agreement: f64,
    /// 2·log[A:B]₀, the value ½H_tr(P|Γ(P)) = H_tr(Γ) forces for the step
    /// relative entropy. Derived from the index, not independently
    /// computed.
    pub implied_step_relative_entropy: f64,
}

/// Computes H_tr(Γ) as log β(GGᵗ) at the stabilized level, cross-checked
/// against the entropy growth slope. Errors when finite depth cannot be
/// established below the level cap.
pub fn shift_entropy(t: &Tower) -> Result<ShiftEntropy> {
    let scan_cap = ((t.max_level() - 1).max(0) / 2) as usize;
    let report = depth_detect(t, scan_cap)?;
    let depth = match (report.finite_depth, report.depth) {
        (true, Some(n)) => n,
        _ => {
            return Err(TowerError::Verification(format!(
                "finite depth not established up to n = {}",
                report.checked_to
            )))
        }
    };
    let level = 2 * depth;
    let g = box_inclusion_matrix(t, level, t.tol())?;
    let ggt = g.product_with_transpose();
    let pf = pf_eigen(&ggt)?;
    let beta = pf.value;
    let s = block_decompose(t.box_space(0, level as isize)?.as_ref(), t.tol())?
        .data
        .weights;
    let sv = RMat::from_column_slice(s.len(), 1, &s);
    let dev = &ggt * &sv - &sv * t.scalars().index;
    let smax = s.iter().cloned().fold(0.0_f64, f64::max).max(1e-300);
    let trace_vector_residual = dev.amax() / smax;
    let nmax = (t.max_level() / 2) as usize;
    let growth = entropy_growth(t, nmax)?;
    let h_shift = beta.ln();
    Ok(ShiftEntropy {
        depth,
        h_shift,
        beta,
        pf_residual: pf.residual,
        trace_vector_residual,
        growth_slope: growth.slope,
        agreement: (h_shift - growth.slope).abs(),
        implied_step_relative_entropy: 2.0 * t.scalars().index.ln(),
    })
}

/// A finite family of positive elements summing to the unit.
#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    pub elements: Vec<CMat>,
}

impl PartitionOfUnity {
    /// Validates Hermitianness, positivity up to tol, and Σwⱼ = 1.
    pub fn new(elements: Vec<CMat>, tol: f64) -> Result<Self> {
        if elements.is_empty() {
            return Err(TowerError::InvalidModel("empty partition of unity".into()));
        }
        let d = elements[0].nrows();
        let floor = tol.max(1e-12);
        let mut sum = CMat::zeros(d, d);
        for w in &elements {
            if w.nrows() != d || w.ncols() != d {
                return Err(TowerError::InvalidModel(
                    "partition elements live in different spaces".into(),
                ));
            }
            let herm = fro_norm(&(w - w.adjoint()));
            if herm > floor * fro_norm(w).max(1.0) {
                return Err(TowerError::InvalidModel(
                    "partition element is not self-adjoint".into(),
                ));
            }
            let (vals, _) = hermitian_eig(w);
            let vmax = vals.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
            if vals.first().copied().unwrap_or(0.0) < -floor * vmax.max(1.0) {
                return Err(TowerError::InvalidModel(
                    "partition element is not positive".into(),
                ));
            }
            sum += w;
        }
        if fro_norm(&(&sum - &eye(d))) > floor * (d as f64).sqrt() {
            return Err(TowerError::InvalidModel(
                "partition does not sum to the unit".into(),
            ));
        }
        Ok(PartitionOfUnity { elements })
    }
}

/// H_γ(M|N) = Σⱼ [tr η(E_N(wⱼ)) − tr η(E_M(wⱼ))] for subalgebras N ⊆ M of
/// a common ambient trace. The definition of H(M|N) takes a supremum over
/// partitions, so any single γ yields a certified lower bound.
pub fn partition_relative_entropy(
    m_alg: &MultiMatrixAlgebra,
    n_alg: &MultiMatrixAlgebra,
    gamma: &PartitionOfUnity,
    tol: f64,
) -> Result<f64> {
    let d = m_alg.ambient_dim;
    if n_alg.ambient_dim != d || gamma.elements[0].nrows() != d {
        return Err(TowerError::InvalidModel(
            "relative entropy needs algebras and partition in one ambient space".into(),
        ));
    }
    let density_gap = m_alg
        .trace
        .density
        .iter()
        .zip(&n_alg.trace.density)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    if density_gap > 1e-12 {
        return Err(TowerError::InvalidModel(
            "the two algebras carry different ambient traces".into(),
        ));
    }
    let membership_tol = (tol * 1e3).max(1e-8);
    for b in n_alg.orthonormal_basis()? {
        if m_alg.membership_residual(&b) > membership_tol {
            return Err(TowerError::InvalidModel(
                "N is not contained in M".into(),
            ));
        }
    }
    let eta_tol = (tol * 100.0).max(1e-9);
    let mut h = 0.0;
    for w in &gamma.elements {
        let en = n_alg.project(w);
        let em = m_alg.project(w);
        h += entropy_functional(&en, &m_alg.trace, eta_tol)?
            - entropy_functional(&em, &m_alg.trace, eta_tol)?;
    }
    Ok(h)
}

#[cfg(test)]
mod test {
    use super::*;
    use crate::mmalg::blocks::algebra_from_span;
    use crate::mmalg::linalg::{cr, matrix_unit};
    use crate::tower::{InclusionSpec, Tower};

    fn tower(k: usize, d: usize, n: isize) -> Tower {
        Tower::build(InclusionSpec::Tensor { k, d }, n, 1e-9).expect("tower builds")
    }

    /// M2 ⊕ M3 block-diagonal in M5 under the normalized ambient trace.
    fn m2_plus_m3() -> MultiMatrixAlgebra {
        let mut span = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                span.push(matrix_unit(5, i, j));
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                span.push(matrix_unit(5, 2 + i, 2 + j));
            }
        }
        algebra_from_span(&span, vec![0.2; 5], 1e-9).unwrap()
    }

    #[test]
    fn scalar_and_known_eigenpairs() {
        let pf = pf_eigen(&RMat::from_row_slice(1, 1, &[3.0])).unwrap();
        assert!((pf.value - 3.0).abs() < 1e-12);
        // [[2,1],[1,2]] has top eigenvalue 3 with vector (1,1)/2
        let pf = pf_eigen(&RMat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert!((pf.value - 3.0).abs() < 1e-10);
        assert!((pf.vector[0] - 0.5).abs() < 1e-10);
        assert!(pf.residual <= 1e-10);
    }

    #[test]
    fn periodic_support_converges() {
        // bipartite adjacency [[0,1],[1,0]] needs the diagonal shift
        let pf = pf_eigen(&RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert!((pf.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reducible_and_negative_inputs_error() {
        assert!(pf_eigen(&RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0])).is_err());
        assert!(pf_eigen(&RMat::from_row_slice(2, 2, &[1.0, -0.5, 1.0, 1.0])).is_err());
    }

    #[test]
    fn trace_entropy_closed_forms() {
        // full factors: H = log d, the maximum log(Σ n_k)
        for d in [2usize, 3, 4] {
            let h = algebra_entropy(&MultiMatrixAlgebra::full(d), 1e-9).unwrap();
            assert!((h - (d as f64).ln()).abs() < 1e-12);
        }
        // scalars: H = 0
        let h = algebra_entropy(&MultiMatrixAlgebra::tensor_factor(1, 1, 3), 1e-9).unwrap();
        assert!(h.abs() < 1e-12);
        // ℂ⊕ℂ with weights (1/2, 1/2): H = log 2
        let span = vec![matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)];
        let alg = algebra_from_span(&span, vec![0.5; 2], 1e-9).unwrap();
        assert!((algebra_entropy(&alg, 1e-9).unwrap() - 2.0_f64.ln()).abs() < 1e-12);
        // M2 ⊕ M3 with uniform density 1/5: H = −Σ n_k s_k log s_k = log 5
        let h = algebra_entropy(&m2_plus_m3(), 1e-9).unwrap();
        assert!((h - 5.0_f64.ln()).abs() < 1e-12);
        // bound H ≤ log(Σ n_k), equality only for equal weights
        let total: usize = m2_plus_m3().block_dims.iter().sum();
        assert!(h <= (total as f64).ln() + 1e-12);
    }

    #[test]
    fn center_entropy_values() {
        // a factor has trivial center
        assert!(center_entropy(&MultiMatrixAlgebra::full(3), 1e-9).unwrap() < 1e-12);
        // M2 ⊕ M3 center weights (0.4, 0.6)
        let h = center_entropy(&m2_plus_m3(), 1e-9).unwrap();
        let want = eta(0.4) + eta(0.6);
        assert!((h - want).abs() < 1e-12);
        // the even box spaces of the depth-one tensor models are factors
        let t = tower(1, 2, 4);
        let alg = t.box_space(0, 2).unwrap();
        assert!(center_entropy(alg.as_ref(), 1e-9).unwrap() < 1e-12);
    }

    #[test]
    fn inclusion_matrix_examples() {
        // scalars in a factor: G = [d]
        let scalars = MultiMatrixAlgebra::tensor_factor(1, 1, 4);
        let full = MultiMatrixAlgebra::full(4);
        let g = inclusion_matrix(&scalars, &full, 1e-9).unwrap();
        assert_eq!(g.entries.nrows(), 1);
        assert!((g.entries[(0, 0)] - 4.0).abs() < 1e-12);
        assert!(g.connected);
        assert!(g.primitive_product());
        // Q = R gives the identity matrix
        let alg = m2_plus_m3();
        let g = inclusion_matrix(&alg, &alg, 1e-9).unwrap();
        assert_eq!(g.entries, RMat::identity(2, 2));
        // center ⊆ M2⊕M3: G = diag(2, 3), disconnected bipartite graph
        let center_span = vec![
            matrix_unit(5, 0, 0) + matrix_unit(5, 1, 1),
            matrix_unit(5, 2, 2) + matrix_unit(5, 3, 3) + matrix_unit(5, 4, 4),
        ];
        let center = algebra_from_span(&center_span, vec![0.2; 5], 1e-9).unwrap();
        let g2 = inclusion_matrix(&center, &alg, 1e-9).unwrap();
        // one copy of each central summand in its own block, whatever the
        // canonical block order: each row meets one column, with
        // multiplicity equal to that column's block size
        for q in 0..2 {
            let hits: Vec<usize> = (0..2).filter(|&r| g2.entries[(q, r)] > 0.0).collect();
            assert_eq!(hits.len(), 1);
            let r = hits[0];
            assert!((g2.entries[(q, r)] - g2.col_dims[r] as f64).abs() < 1e-12);
        }
        assert!(!g2.connected);
        assert!(pf_eigen(&g2.product_with_transpose()).is_err());
        // chain coherence: G(scalars ⊆ center)·G(center ⊆ alg) = G(scalars ⊆ alg)
        let scal5 = MultiMatrixAlgebra::tensor_factor(1, 1, 5);
        let g1 = inclusion_matrix(&scal5, &center, 1e-9).unwrap();
        let g_direct = inclusion_matrix(&scal5, &alg, 1e-9).unwrap();
        assert_eq!(&g1.entries * &g2.entries, g_direct.entries);
        // non-subalgebra input is rejected
        assert!(inclusion_matrix(&full, &MultiMatrixAlgebra::tensor_factor(1, 1, 4), 1e-9).is_err());
    }

    #[test]
    fn box_chain_inclusion_matrices() {
        // every box step of the index-4 tensor models doubles: G = [2]
        let t = tower(1, 2, 4);
        for m in 1..=2usize {
            let g = box_inclusion_matrix(&t, m, 1e-9).unwrap();
            assert_eq!(g.entries.nrows(), 1);
            assert!((g.entries[(0, 0)] - 2.0).abs() < 1e-12, "step at m={}", m);
        }
        let ggt = box_inclusion_matrix(&t, 2, 1e-9)
            .unwrap()
            .product_with_transpose();
        assert!((ggt[(0, 0)] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn depth_and_entropy_growth_oracles() {
        for (k, d) in [(1usize, 2usize), (2, 2)] {
            let t = tower(k, d, 6);
            let report = depth_detect(&t, 3).unwrap();
            assert!(report.finite_depth, "finite depth for k={} d={}", k, d);
            assert!(report.depth.unwrap() <= 2);
            let growth = entropy_growth(&t, 3).unwrap();
            for &(n, h) in &growth.values {
                let want = 2.0 * n as f64 * (d as f64).ln();
                assert!(
                    (h - want).abs() < 1e-9,
                    "H_tr(A'∩A_{}) = {} for k={} d={}",
                    2 * n,
                    h,
                    k,
                    d
                );
            }
            assert!((growth.slope - (d as f64 * d as f64).ln()).abs() < 1e-6);
        }
        // degenerate B = A: depth 1 and flat entropies
        let t = tower(2, 1, 6);
        let report = depth_detect(&t, 3).unwrap();
        assert_eq!(report.depth, Some(1));
        let growth = entropy_growth(&t, 3).unwrap();
        assert!(growth.values.iter().all(|&(_, h)| h.abs() < 1e-12));
        assert!(growth.slope.abs() < 1e-12);
    }

    #[test]
    fn shift_entropy_reports_log_index() {
        for (k, d) in [(1usize, 2usize), (2, 2)] {
            let t = tower(k, d, 6);
            let se = shift_entropy(&t).unwrap();
            let index = (d * d) as f64;
            assert!((se.beta - index).abs() < 1e-10, "β for k={} d={}", k, d);
            assert!(se.pf_residual <= 1e-10);
            assert!(se.trace_vector_residual <= 1e-10);
            assert!((se.h_shift - index.ln()).abs() < 1e-10);
            assert!(se.agreement <= 1e-6);
            assert!((se.implied_step_relative_entropy - 2.0 * index.ln()).abs() < 1e-12);
        }
        let t = tower(2, 1, 6);
        let se = shift_entropy(&t).unwrap();
        assert!(se.h_shift.abs() < 1e-12);
        assert!(se.agreement < 1e-12);
    }

    #[test]
    fn partition_entropy_values() {
        let m2 = MultiMatrixAlgebra::full(2);
        let scalars = MultiMatrixAlgebra::tensor_factor(1, 1, 2);
        // γ = {e₁₁, e₂₂} certifies H(M₂|ℂ) ≥ log 2
        let gamma = PartitionOfUnity::new(
            vec![matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)],
            1e-9,
        )
        .unwrap();
        let h = partition_relative_entropy(&m2, &scalars, &gamma, 1e-9).unwrap();
        assert!((h - 2.0_f64.ln()).abs() < 1e-10);
        // γ = {1} gives zero
        let unit = PartitionOfUnity::new(vec![eye(2)], 1e-9).unwrap();
        let h0 = partition_relative_entropy(&m2, &scalars, &unit, 1e-9).unwrap();
        assert!(h0.abs() < 1e-12);
        // N = M gives zero for any γ
        let hm = partition_relative_entropy(&m2, &m2, &gamma, 1e-9).unwrap();
        assert!(hm.abs() < 1e-12);
        // γ refinement by scalar splitting never decreases the value
        let half = matrix_unit(2, 1, 1) * cr(0.5);
        let refined = PartitionOfUnity::new(
            vec![matrix_unit(2, 0, 0), half.clone(), half],
            1e-9,
        )
        .unwrap();
        let hr = partition_relative_entropy(&m2, &scalars, &refined, 1e-9).unwrap();
        assert!(hr >= h - 1e-12);
        assert!(hr >= h0 - 1e-12);
    }

    #[test]
    fn partition_invariants_are_enforced() {
        // non-positive element
        assert!(PartitionOfUnity::new(
            vec![eye(2) * cr(2.0), eye(2) * cr(-1.0)],
            1e-9
        )
        .is_err());
        // does not sum to the unit
        assert!(PartitionOfUnity::new(vec![eye(2) * cr(0.5)], 1e-9).is_err());
        // not self-adjoint
        assert!(PartitionOfUnity::new(
            vec![matrix_unit(2, 0, 1), eye(2) - matrix_unit(2, 0, 1)],
            1e-9
        )
        .is_err());
        // mismatched traces are rejected
        let m2 = MultiMatrixAlgebra::full(2);
        let gamma = PartitionOfUnity::new(vec![eye(2)], 1e-9).unwrap();
        let skew = MultiMatrixAlgebra {
            trace: crate::mmalg::algebra::TraceState {
                weights: vec![],
                density: vec![0.75, 0.25],
            },
            ..MultiMatrixAlgebra::full(2)
        };
        assert!(partition_relative_entropy(&m2, &skew, &gamma, 1e-9).is_err());
    }
}
