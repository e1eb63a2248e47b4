//! Closed-form tower levels for M_k ⊗ 1 ⊂ M_k ⊗ M_d.
//!
//! Level m is M_k ⊗ M_d^{⊗(m+1)} with the normalized matrix trace. The
//! Jones projection e_m is supported on the last two tensor sites, the
//! expectation E_m is the normalized partial trace over the last site, and
//! every relative commutant A'_j ∩ A_m is the tensor factor spanned by the
//! sites strictly above j. Nothing here is iterative, which is what makes
//! level 7 a few milliseconds instead of a few gigabytes.

use std::sync::Arc;

use crate::mmalg::linalg::{cr, eye, kron, matrix_unit, ptrace_right, CMat};
use crate::mmalg::MultiMatrixAlgebra;
use crate::{Result, TowerError};

use super::{Level, TowerScalars};

/// Hard cap on a level's ambient dimension, keeping dense matrices
/// desk-sized (a 2048² complex matrix is 67 MB).
const AMBIENT_CAP: usize = 2048;

pub(crate) struct TensorBackend {
    k: usize,
    d: usize,
    max_level: isize,
    /// The projection onto the maximally entangled vector of M_d ⊗ M_d.
    ehat: CMat,
    /// For explicit inclusions rotated into tensor form: isometry W with
    /// internal = W†·input·W.
    input_transform: Option<CMat>,
}

impl TensorBackend {
    pub fn new(k: usize, d: usize, input_transform: Option<CMat>) -> Self {
        let mut ehat = CMat::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                ehat[(a * d + a, b * d + b)] = cr(1.0 / d as f64);
            }
        }
        TensorBackend {
            k,
            d,
            max_level: 0,
            ehat,
            input_transform,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn input_transform(&self) -> Option<&CMat> {
        self.input_transform.as_ref()
    }

    pub fn scalars(&self) -> TowerScalars {
        TowerScalars::new((self.d * self.d) as f64)
    }

    /// Ambient dimension of level n (n = −1 gives B).
    pub fn dim(&self, n: isize) -> usize {
        if n < 0 {
            self.k
        } else {
            self.k * self.d.pow((n + 1) as u32)
        }
    }

    pub fn level_algebra(&self, n: isize) -> Arc<MultiMatrixAlgebra> {
        Arc::new(MultiMatrixAlgebra::full(self.dim(n)))
    }

    /// Errors before any allocation if level n would blow the ambient cap.
    pub fn feasible_to(&self, n: isize) -> Result<()> {
        let dim = self
            .k
            .checked_mul(self.d.checked_pow((n + 1) as u32).unwrap_or(usize::MAX))
            .unwrap_or(usize::MAX);
        if dim > AMBIENT_CAP {
            return Err(TowerError::DimensionCap(format!(
                "level {} would need ambient dimension {} (cap {})",
                n, dim, AMBIENT_CAP
            )));
        }
        Ok(())
    }

    pub fn extend_one(&mut self) -> Result<Level> {
        let m = self.max_level + 1;
        self.feasible_to(m)?;
        self.max_level = m;
        Ok(Level {
            n: m,
            algebra: self.level_algebra(m),
            jones: Some(self.jones(m as usize)?),
        })
    }

    /// e_i in the ambient of level i: identity on everything but the two
    /// top sites, the entangled-vector projection there.
    pub fn jones(&self, i: usize) -> Result<CMat> {
        if i == 0 || (i as isize) > self.max_level {
            return Err(TowerError::IndexRange(format!(
                "jones projection e_{} out of range",
                i
            )));
        }
        let left = self.k * self.d.pow((i - 1) as u32);
        Ok(kron(&eye(left), &self.ehat))
    }

    pub fn embed_to(&self, x: &CMat, from: isize, to: isize) -> Result<CMat> {
        let d_from = self.dim(from);
        if x.nrows() != d_from || x.ncols() != d_from {
            return Err(TowerError::InvalidModel(format!(
                "embedding source has shape {}x{}, level {} needs {}",
                x.nrows(),
                x.ncols(),
                from,
                d_from
            )));
        }
        let factor = self.dim(to) / d_from;
        if factor == 1 {
            return Ok(x.clone());
        }
        Ok(kron(x, &eye(factor)))
    }

    /// E_n = id ⊗ (normalized trace over the last site).
    pub fn expect_step(&self, x: &CMat, n: isize) -> Result<CMat> {
        let d_n = self.dim(n);
        if x.nrows() != d_n || x.ncols() != d_n {
            return Err(TowerError::InvalidModel(format!(
                "expectation input has shape {}x{}, level {} needs {}",
                x.nrows(),
                x.ncols(),
                n,
                d_n
            )));
        }
        Ok(ptrace_right(x, self.dim(n - 1), self.d))
    }

    /// A'_j ∩ A_m = 1 ⊗ M_{d^{m−j}} on the sites above level j.
    pub fn box_space(&self, j: isize, m: isize) -> MultiMatrixAlgebra {
        let left = self.dim(j);
        let mid = self.dim(m) / left;
        MultiMatrixAlgebra::tensor_factor(left, mid, 1)
    }

    /// Quasi-basis of E₀: {√d · 1_k ⊗ f_uv}, d² elements.
    pub fn quasi_basis(&self) -> Vec<CMat> {
        let scale = cr((self.d as f64).sqrt());
        let mut out = Vec::with_capacity(self.d * self.d);
        for u in 0..self.d {
            for v in 0..self.d {
                out.push(&kron(&eye(self.k), &matrix_unit(self.d, u, v)) * scale);
            }
        }
        out
    }
}
