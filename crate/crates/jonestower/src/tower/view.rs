//! Shifted views: the inclusion A_{j−1} ⊂ A_j of a built tower, exposed
//! through the same `TowerLike` surface as the tower itself, with the
//! quasi-basis transported to the shifted position.

use std::sync::Arc;

use crate::mmalg::linalg::{cr, mat_mul, rel_fro_dist, CMat, C64};
use crate::mmalg::random::{random_in, rng_for};
use crate::mmalg::MultiMatrixAlgebra;
use crate::{Result, TowerError};

use super::words::ascending_word_mat;
use super::{Tower, TowerLike};

/// The tower of A_{j−1} ⊂ A_j, reusing the base tower's levels with all
/// indices shifted by j. Level n of the view is level n+j of the base, so
/// the view's e_i is the base's e_{i+j} and the view's quasi-basis is
/// {τ^{−j/2} λᵢ e₁e₂⋯e_j} in the level-j ambient.
pub struct TowerView<'a> {
    base: &'a Tower,
    offset: isize,
    lam: Vec<CMat>,
}

impl<'a> TowerView<'a> {
    pub fn new(base: &'a Tower, j: usize) -> Result<TowerView<'a>> {
        let offset = j as isize;
        if offset > base.max_level() {
            return Err(TowerError::IndexRange(format!(
                "view shift {} exceeds built level {}",
                j,
                base.max_level()
            )));
        }
        let lam = if j == 0 {
            base.quasi_basis.elements.clone()
        } else {
            let asc = ascending_word_mat(base, j, offset)?;
            let scale = cr(base.scalars.tau.powf(-(j as f64) / 2.0));
            base.quasi_basis
                .elements
                .iter()
                .map(|l| Ok(mat_mul(&(&base.embed_to(l, 0, offset)? * scale), &asc)))
                .collect::<Result<_>>()?
        };
        let view = TowerView { base, offset, lam };
        view.verify_quasi_basis()?;
        Ok(view)
    }

    /// How far this view is shifted from the base tower.
    pub fn offset(&self) -> isize {
        self.offset
    }

    /// Reproducing identity Σᵢ λᵢ·E₀(λᵢ* x) = x for the transported
    /// family, checked on the view's level 0.
    fn verify_quasi_basis(&self) -> Result<()> {
        let a0 = self.level_algebra(0)?;
        let d = a0.ambient_dim;
        let samples: Vec<CMat> = if d <= 16 {
            a0.orthonormal_basis()?
        } else {
            let mut rng = rng_for(super::BUILD_SEED, &format!("view-qb-{}", self.offset));
            (0..8).map(|_| random_in(&a0, &mut rng)).collect()
        };
        let mut worst = 0.0_f64;
        for x in &samples {
            let mut rebuilt = CMat::zeros(d, d);
            for l in &self.lam {
                let down = self.expect_step(&mat_mul(&l.adjoint(), x), 0)?;
                let up = self.embed_to(&down, -1, 0)?;
                rebuilt += mat_mul(l, &up);
            }
            worst = worst.max(rel_fro_dist(&rebuilt, x));
        }
        if worst > (self.tol() * 100.0).max(1e-6) {
            return Err(TowerError::Verification(format!(
                "transported quasi-basis identity failed at shift {} (residual {:.3e})",
                self.offset, worst
            )));
        }
        Ok(())
    }
}

impl TowerLike for TowerView<'_> {
    fn scalars(&self) -> &super::TowerScalars {
        self.base.scalars()
    }

    fn max_level(&self) -> isize {
        self.base.max_level() - self.offset
    }

    fn level_algebra(&self, n: isize) -> Result<Arc<MultiMatrixAlgebra>> {
        self.base.level_algebra(n + self.offset)
    }

    fn embed_to(&self, x: &CMat, from: isize, to: isize) -> Result<CMat> {
        self.base.embed_to(x, from + self.offset, to + self.offset)
    }

    fn expect_step(&self, x: &CMat, n: isize) -> Result<CMat> {
        self.base.expect_step(x, n + self.offset)
    }

    fn jones(&self, i: usize) -> Result<CMat> {
        if i == 0 {
            return Err(TowerError::IndexRange(
                "jones projection e_0 does not exist".into(),
            ));
        }
        self.base.jones(i + self.offset as usize)
    }

    fn tr_level(&self, n: isize, x: &CMat) -> Result<C64> {
        self.base.tr_level(n + self.offset, x)
    }

    fn quasi_basis_mats(&self) -> &[CMat] {
        &self.lam
    }

    fn box_space(&self, j: isize, m: isize) -> Result<Arc<MultiMatrixAlgebra>> {
        if j < -1 || j >= m {
            return Err(TowerError::IndexRange(format!(
                "relative commutant A'_{} ∩ A_{} out of range",
                j, m
            )));
        }
        self.base.box_space(j + self.offset, m + self.offset)
    }

    fn outside_hypotheses(&self) -> bool {
        self.base.outside_hypotheses()
    }

    fn tol(&self) -> f64 {
        self.base.tol()
    }
}
