//! Spectral filtering of the field-free blocks around the nucleus.
//!
//! The first `n_filter = (n_dvr - 1) * n_fe_filter - 1` inner functions of
//! every partial wave span a small box with hard walls. The field-free
//! Hamiltonian `h_l` restricted to that box is diagonalized and every
//! eigenvector with energy above `e_cut` is projected out, both from `h_l`
//! and from the dipole couplings that touch the box. What is left is a dense
//! corner with a bounded spectrum; the rest of the Hamiltonian is unchanged.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::angular::AngularCoupling;
use crate::grid::RadialGrid;
use crate::hamiltonian::potential;
use crate::linalg::sym_eigen;
use crate::pulse::Gauge;
use crate::{Error, Result};

/// Removed eigenvectors may keep at most this fraction of their norm in the
/// last element of the filter box.
pub const LOCALIZATION_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub n_fe_filter: usize,
    pub e_cut: f64,
}

impl FilterSpec {
    pub fn n_filter(&self, n_dvr: usize) -> usize {
        ((n_dvr - 1) * self.n_fe_filter).saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizationEntry {
    pub ell: usize,
    pub index: usize,
    pub energy: f64,
    pub edge_fraction: f64,
}

#[derive(Debug, Clone)]
struct BlockFilter {
    eigenvalues: Vec<f64>,
    // column-major in the sense of sym_eigen: vecs[i * n + k] is component i of vector k
    eigenvectors: Vec<f64>,
    n_keep: usize,
    h_tilde: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct StiffnessFilter {
    pub spec: FilterSpec,
    pub n_filter: usize,
    pub gauge: Gauge,
    pub l_max: usize,
    blocks: Vec<BlockFilter>,
    // w~_{l, l+1}, None when neither side is filtered
    pairs: Vec<Option<Vec<f64>>>,
    pub report: Vec<LocalizationEntry>,
    n_dvr: usize,
}

fn check_window(grid: &RadialGrid, n_fe_filter: usize) -> Result<usize> {
    let spec = grid.spec;
    if spec.n_fe_inner == 0 {
        return Err(Error::Configuration(
            "spectral filtering needs an unscaled inner region (not available with global scaling)"
                .into(),
        ));
    }
    if n_fe_filter == 0 || n_fe_filter > spec.n_fe_inner {
        return Err(Error::InvalidSpec(alloc::format!(
            "filter element count {n_fe_filter} must lie in 1..={}",
            spec.n_fe_inner
        )));
    }
    let n = (spec.n_dvr - 1) * n_fe_filter - 1;
    if n == 0 {
        return Err(Error::InvalidSpec(
            "the filter window holds no basis function".into(),
        ));
    }
    Ok(n)
}

/// Field-free blocks `h_l = T/2 + V_l` on the first `n_filter` functions
/// (row-major `n_filter x n_filter`), for `l = 0..=l_max`.
pub fn inner_blocks(grid: &RadialGrid, l_max: usize, n_fe_filter: usize) -> Result<Vec<Vec<f64>>> {
    let n = check_window(grid, n_fe_filter)?;
    let mut kin = vec![0.0; n * n];
    for i in 0..n {
        for (j, v) in grid.kinetic.row(i) {
            if j < n {
                kin[i * n + j] = 0.5 * v;
            }
        }
    }
    Ok((0..=l_max)
        .map(|l| {
            let mut h = kin.clone();
            for i in 0..n {
                h[i * n + i] += potential(l, grid.nodes[i]);
            }
            h
        })
        .collect())
}

/// Dipole couplings `w_{l, l+1}` on the filter window with the time factor
/// removed: `g x` in the length gauge, `g (D + [(l+1)(l+2) - l(l+1)] / x)`
/// in the velocity gauge (to be multiplied by `-i A / 2`).
pub fn interaction_blocks(
    grid: &RadialGrid,
    angular: &AngularCoupling,
    gauge: Gauge,
    n_fe_filter: usize,
) -> Result<Vec<Vec<f64>>> {
    let n = check_window(grid, n_fe_filter)?;
    Ok((0..angular.l_max)
        .map(|l| {
            let g = angular.g(l, l + 1);
            let mut w = vec![0.0; n * n];
            match gauge {
                Gauge::Length => {
                    for i in 0..n {
                        w[i * n + i] = g * grid.nodes[i];
                    }
                }
                Gauge::Velocity => {
                    let delta = (2 * (l + 1)) as f64;
                    for i in 0..n {
                        for (j, v) in grid.antisym.row(i) {
                            if j < n {
                                w[i * n + j] = g * v;
                            }
                        }
                        w[i * n + i] += g * delta / grid.nodes[i];
                    }
                }
            }
            w
        })
        .collect())
}

/// Diagonalizes the blocks, truncates above `e_cut` and builds the filtered
/// corners. The localization report is filled but not enforced; see
/// [`StiffnessFilter::check_localization`].
pub fn build_filter(
    blocks: &[Vec<f64>],
    e_cut: f64,
    w_blocks: &[Vec<f64>],
    n_dvr: usize,
    n_fe_filter: usize,
    gauge: Gauge,
) -> Result<StiffnessFilter> {
    let spec = FilterSpec { n_fe_filter, e_cut };
    let n = spec.n_filter(n_dvr);
    if blocks.is_empty() || w_blocks.len() + 1 != blocks.len() {
        return Err(Error::DimensionMismatch {
            expected: blocks.len().saturating_sub(1),
            found: w_blocks.len(),
        });
    }
    for b in blocks.iter().chain(w_blocks) {
        if b.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: b.len(),
            });
        }
    }
    let filtered: Vec<Result<BlockFilter>> =
        map_indexed(blocks.len(), |l| filter_block(&blocks[l], n, e_cut));
    let filtered: Vec<BlockFilter> = filtered.into_iter().collect::<Result<_>>()?;

    let pairs = (0..w_blocks.len())
        .map(|l| {
            let (a, b) = (&filtered[l], &filtered[l + 1]);
            if a.h_tilde.is_none() && b.h_tilde.is_none() {
                None
            } else {
                let pw = project_left(a, &w_blocks[l], n);
                Some(project_right(&pw, b, n))
            }
        })
        .collect();

    // nodes of the last element inside the window, counted from its left boundary
    let edge_start = (n_dvr - 1) * (n_fe_filter - 1);
    let edge_start = edge_start.saturating_sub(1);
    let mut report = Vec::new();
    for (l, bf) in filtered.iter().enumerate() {
        for k in bf.n_keep..n {
            let frac: f64 = (edge_start..n)
                .map(|i| {
                    let u = bf.eigenvectors[i * n + k];
                    u * u
                })
                .sum();
            report.push(LocalizationEntry {
                ell: l,
                index: k,
                energy: bf.eigenvalues[k],
                edge_fraction: frac,
            });
        }
    }

    Ok(StiffnessFilter {
        spec,
        n_filter: n,
        gauge,
        l_max: blocks.len() - 1,
        blocks: filtered,
        pairs,
        report,
        n_dvr,
    })
}

fn filter_block(h: &[f64], n: usize, e_cut: f64) -> Result<BlockFilter> {
    let (vals, vecs) = sym_eigen(h, n)?;
    let n_keep = vals.iter().take_while(|&&e| e <= e_cut).count();
    let h_tilde = if n_keep == n {
        None
    } else {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = 0.0;
                for k in 0..n_keep {
                    s += vecs[i * n + k] * vals[k] * vecs[j * n + k];
                }
                m[i * n + j] = s;
                m[j * n + i] = s;
            }
        }
        Some(m)
    };
    Ok(BlockFilter {
        eigenvalues: vals,
        eigenvectors: vecs,
        n_keep,
        h_tilde,
    })
}

// P_l w, with P_l the projector on the retained eigenvectors
fn project_left(bf: &BlockFilter, w: &[f64], n: usize) -> Vec<f64> {
    if bf.h_tilde.is_none() {
        return w.to_vec();
    }
    let u = &bf.eigenvectors;
    let m = bf.n_keep;
    // c = U_r^T w  (m x n)
    let mut c = vec![0.0; m * n];
    for k in 0..m {
        for i in 0..n {
            let uik = u[i * n + k];
            if uik != 0.0 {
                for j in 0..n {
                    c[k * n + j] += uik * w[i * n + j];
                }
            }
        }
    }
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..m {
            let uik = u[i * n + k];
            for j in 0..n {
                out[i * n + j] += uik * c[k * n + j];
            }
        }
    }
    out
}

// w P_l
fn project_right(w: &[f64], bf: &BlockFilter, n: usize) -> Vec<f64> {
    if bf.h_tilde.is_none() {
        return w.to_vec();
    }
    let u = &bf.eigenvectors;
    let m = bf.n_keep;
    // c = w U_r  (n x m)
    let mut c = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..n {
            let wij = w[i * n + j];
            if wij != 0.0 {
                for k in 0..m {
                    c[i * m + k] += wij * u[j * n + k];
                }
            }
        }
    }
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..m {
                s += c[i * m + k] * u[j * n + k];
            }
            out[i * n + j] = s;
        }
    }
    out
}

#[cfg(feature = "parallel")]
fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_indexed<T>(n: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..n).map(f).collect()
}

impl StiffnessFilter {
    /// Builds and checks the filter for a grid; fails if a removed
    /// eigenvector leaks into the last element of the window.
    pub fn build(
        grid: &RadialGrid,
        angular: &AngularCoupling,
        gauge: Gauge,
        spec: FilterSpec,
    ) -> Result<Self> {
        let f = Self::build_unchecked(grid, angular, gauge, spec)?;
        f.check_localization()?;
        Ok(f)
    }

    pub fn build_unchecked(
        grid: &RadialGrid,
        angular: &AngularCoupling,
        gauge: Gauge,
        spec: FilterSpec,
    ) -> Result<Self> {
        let blocks = inner_blocks(grid, angular.l_max, spec.n_fe_filter)?;
        let w = interaction_blocks(grid, angular, gauge, spec.n_fe_filter)?;
        build_filter(
            &blocks,
            spec.e_cut,
            &w,
            grid.spec.n_dvr,
            spec.n_fe_filter,
            gauge,
        )
    }

    pub fn check_localization(&self) -> Result<()> {
        let worst = self
            .report
            .iter()
            .filter(|e| e.edge_fraction > LOCALIZATION_THRESHOLD)
            .max_by(|a, b| a.edge_fraction.total_cmp(&b.edge_fraction));
        match worst {
            Some(e) => Err(Error::FilterLocalization {
                ell: e.ell,
                index: e.index,
                energy: e.energy,
                edge_fraction: e.edge_fraction,
            }),
            None => Ok(()),
        }
    }

    pub fn n_dvr(&self) -> usize {
        self.n_dvr
    }

    pub fn eigenvalues(&self, l: usize) -> &[f64] {
        &self.blocks[l].eigenvalues
    }

    /// Eigenvector `k` of `h_l`.
    pub fn eigenvector(&self, l: usize, k: usize) -> Vec<f64> {
        let n = self.n_filter;
        (0..n)
            .map(|i| self.blocks[l].eigenvectors[i * n + k])
            .collect()
    }

    pub fn n_kept(&self, l: usize) -> usize {
        self.blocks[l].n_keep
    }

    /// `true` when no eigenvector of `h_l` lies above the cutoff.
    pub fn is_identity(&self, l: usize) -> bool {
        self.blocks[l].h_tilde.is_none()
    }

    /// Filtered corner `h~_l` (row-major), `None` if the block is untouched.
    pub fn h_tilde(&self, l: usize) -> Option<&[f64]> {
        self.blocks[l].h_tilde.as_deref()
    }

    /// Filtered coupling `w~_{l, l+1}` (row-major), `None` if untouched.
    pub fn w_tilde(&self, l: usize) -> Option<&[f64]> {
        self.pairs.get(l).and_then(|p| p.as_deref())
    }

    /// Plain-text table of the removed states.
    pub fn report_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# filter window: {} functions, e_cut = {}, threshold = {}",
            self.n_filter, self.spec.e_cut, LOCALIZATION_THRESHOLD
        );
        let _ = writeln!(
            s,
            "{:>5} {:>5} {:>16} {:>14}",
            "l", "n", "energy", "edge_fraction"
        );
        for e in &self.report {
            let flag = if e.edge_fraction > LOCALIZATION_THRESHOLD {
                "  <-- not localized"
            } else {
                ""
            };
            let _ = writeln!(
                s,
                "{:>5} {:>5} {:>16.6} {:>14.6e}{}",
                e.ell,
                e.index + 1,
                e.energy,
                e.edge_fraction,
                flag
            );
        }
        s
    }
}
