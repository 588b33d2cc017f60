use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result, C64};

/// Expansion coefficients of all partial waves.
///
/// Block `l` occupies `coeffs[l * n_basis .. (l + 1) * n_basis]`, ordered as
/// the radial basis: inner coefficients, the bridge coefficient `a_l`, then
/// the outer coefficients `b`. The stored bridge value is `a_l`, so the
/// Euclidean norm of `coeffs` is the physical norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub coeffs: Vec<C64>,
    pub n_basis: usize,
    pub t: f64,
}

impl StateVector {
    pub fn zeros(n_blocks: usize, n_basis: usize) -> Self {
        StateVector {
            coeffs: vec![C64::new(0.0, 0.0); n_blocks * n_basis],
            n_basis,
            t: 0.0,
        }
    }

    pub fn from_coeffs(coeffs: Vec<C64>, n_basis: usize, t: f64) -> Result<Self> {
        if n_basis == 0 || coeffs.len() % n_basis != 0 {
            return Err(Error::DimensionMismatch {
                expected: n_basis,
                found: coeffs.len(),
            });
        }
        Ok(StateVector { coeffs, n_basis, t })
    }

    pub fn n_blocks(&self) -> usize {
        self.coeffs.len() / self.n_basis
    }

    pub fn block(&self, l: usize) -> &[C64] {
        &self.coeffs[l * self.n_basis..(l + 1) * self.n_basis]
    }

    pub fn block_mut(&mut self, l: usize) -> &mut [C64] {
        let n = self.n_basis;
        &mut self.coeffs[l * n..(l + 1) * n]
    }

    pub fn norm_sqr(&self) -> f64 {
        crate::linalg::norm_sqr(&self.coeffs)
    }

    pub fn block_norms_sqr(&self) -> Vec<f64> {
        (0..self.n_blocks())
            .map(|l| crate::linalg::norm_sqr(self.block(l)))
            .collect()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = libm::sqrt(self.norm_sqr());
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Numerical(alloc::format!(
                "cannot normalize a vector of norm {n}"
            )));
        }
        for c in &mut self.coeffs {
            *c /= n;
        }
        Ok(())
    }

    /// Outer-side bridge amplitude `b_l = sqrt(2R / (1 + R)) a_l`.
    pub fn bridge_outer(&self, l: usize, bridge: usize, r: f64) -> C64 {
        self.block(l)[bridge] * libm::sqrt(2.0 * r / (1.0 + r))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}
