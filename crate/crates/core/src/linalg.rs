//! Small dense and sparse linear-algebra kernels.
//!
//! Everything here works on plain slices so the crate stays `no_std`. The
//! dense symmetric eigen-solver is Householder tridiagonalization followed by
//! the implicit QL algorithm; it is used for the Lanczos tridiagonal matrices,
//! the field-free inner blocks of the stiffness filter and small diagnostics.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result, C64};

/// Compressed sparse row matrix with real values.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds an `n x n` matrix from triplets, summing duplicates. Explicit
    /// zeros produced by the summation are kept so the pattern is structural.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            debug_assert!(i < n && j < n);
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            cols.push(j);
            vals.push(v);
            row_ptr[i + 1] += 1;
            last = Some((i, j));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Csr {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Entry `(i, j)`, zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(p) => self.vals[self.row_ptr[i] + p],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    /// Half bandwidth `max |i - j|` over stored entries.
    pub fn half_bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }
}

/// Dense real symmetric eigen-decomposition of a row-major `n x n` matrix.
///
/// Returns eigenvalues in ascending order and the eigenvectors as the
/// columns of a row-major `n x n` matrix (`vecs[i * n + k]` is component
/// `i` of eigenvector `k`).
pub fn sym_eigen(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: a.len(),
        });
    }
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut v = a.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e, n);
    tql2(&mut v, &mut d, &mut e, n)?;
    Ok((d, v))
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off[k]` couples `k` and `k + 1`).
/// Output layout as in [`sym_eigen`].
pub fn tridiag_eigen(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    if off.len() + 1 < n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            found: off.len(),
        });
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[1..n].copy_from_slice(&off[..(n - 1)]);
    tql2(&mut v, &mut d, &mut e, n)?;
    Ok((d, v))
}

// Householder reduction to tridiagonal form (EISPACK tred2 as laid out in JAMA).
fn tred2(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) {
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j * n + i] = f;
                g = e[j] + v[j * n + j] * f;
                for k in (j + 1)..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..(n - 1) {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = 0.0;
    }
    v[(n - 1) * n + (n - 1)] = 1.0;
    e[0] = 0.0;
}

// Implicit QL on the tridiagonal (d, e), accumulating rotations into v.
fn tql2(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::NonConvergence(alloc::format!(
                        "implicit QL stalled at eigenvalue {l} of {n}"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[k * n + i + 1];
                        v[k * n + i + 1] = s * v[k * n + i] + c * h;
                        v[k * n + i] = c * v[k * n + i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    // selection sort keeps the column swaps cheap to reason about
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for row in 0..n {
                v.swap(row * n + i, row * n + k);
            }
        }
    }
    Ok(())
}

/// Symmetric positive-definite band matrix stored by rows of its lower band.
///
/// `band[i * (bw + 1) + k]` holds entry `(i, i + k - bw)`.
#[derive(Debug, Clone)]
pub struct BandSym {
    pub n: usize,
    pub bw: usize,
    pub band: Vec<f64>,
}

impl BandSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandSym {
            n,
            bw,
            band: vec![0.0; n * (bw + 1)],
        }
    }

    /// Sets the lower-triangle entry `(i, j)` with `j <= i`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(j <= i && i - j <= self.bw);
        self.band[i * (self.bw + 1) + j + self.bw - i] = value;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bw {
            return 0.0;
        }
        self.band[i * (self.bw + 1) + j + self.bw - i]
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.get(i, j) * x[j];
            }
            y[i] = acc;
        }
    }

    /// In-place Cholesky factorization of `self - shift * I`. Returns `None`
    /// when the shifted matrix is not positive definite.
    pub fn cholesky_shifted(&self, shift: f64) -> Option<BandCholesky> {
        let n = self.n;
        let bw = self.bw;
        let w = bw + 1;
        let mut l = self.band.clone();
        for i in 0..n {
            l[i * w + bw] -= shift;
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut sum = l[i * w + j + bw - i];
                let klo = lo.max(j.saturating_sub(bw));
                for k in klo..j {
                    sum -= l[i * w + k + bw - i] * l[j * w + k + bw - j];
                }
                if j == i {
                    if sum <= 0.0 || !sum.is_finite() {
                        return None;
                    }
                    l[i * w + bw] = libm::sqrt(sum);
                } else {
                    l[i * w + j + bw - i] = sum / l[j * w + bw];
                }
            }
        }
        Some(BandCholesky { n, bw, l })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        for i in 0..n {
            let mut sum = x[i];
            for k in i.saturating_sub(bw)..i {
                sum -= self.l[i * w + k + bw - i] * x[k];
            }
            x[i] = sum / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut sum = x[i];
            for k in (i + 1)..(i + bw + 1).min(n) {
                sum -= self.l[k * w + i + bw - k] * x[k];
            }
            x[i] = sum / self.l[i * w + bw];
        }
    }
}

/// `sum conj(a_i) b_i`
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    C64::new(re, im)
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.re * z.re + z.im * z.im).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    libm::sqrt(norm_sqr(a))
}

/// `y += alpha * x`
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `exp(i * theta)`
pub fn cis(theta: f64) -> C64 {
    let (s, c) = libm::sincos(theta);
    C64::new(c, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn random_sym(n: usize, seed: u64) -> Vec<f64> {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let x = next();
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        a
    }

    #[test]
    fn sym_eigen_matches_nalgebra() {
        for &n in &[1usize, 2, 3, 7, 40] {
            let a = random_sym(n, n as u64);
            let (vals, vecs) = sym_eigen(&a, n).unwrap();
            let m = DMatrix::from_row_slice(n, n, &a);
            let mut reference: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
            reference.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (x, y) in vals.iter().zip(&reference) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
            // A V = V diag(vals), V orthogonal
            for k in 0..n {
                for i in 0..n {
                    let av: f64 = (0..n).map(|j| a[i * n + j] * vecs[j * n + k]).sum();
                    assert!((av - vals[k] * vecs[i * n + k]).abs() < 1e-12);
                }
                for k2 in 0..n {
                    let ip: f64 = (0..n).map(|i| vecs[i * n + k] * vecs[i * n + k2]).sum();
                    let expect = if k == k2 { 1.0 } else { 0.0 };
                    assert!((ip - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn tridiagonal_eigen_of_discrete_laplacian() {
        // eigenvalues of tridiag(-1, 2, -1) are 2 - 2 cos(k pi / (n + 1))
        let n = 12;
        let (vals, _) = tridiag_eigen(&vec![2.0; n], &vec![-1.0; n - 1]).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let exact =
                2.0 - 2.0 * libm::cos((k + 1) as f64 * core::f64::consts::PI / (n + 1) as f64);
            assert!((v - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn band_cholesky_solves_and_detects_indefinite() {
        let n = 30;
        let mut m = BandSym::zeros(n, 2);
        for i in 0..n {
            m.set(i, i, 4.0);
            if i >= 1 {
                m.set(i, i - 1, -1.0);
            }
            if i >= 2 {
                m.set(i, i - 2, 0.5);
            }
        }
        let chol = m.cholesky_shifted(0.0).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        m.matvec(&x_true, &mut b);
        chol.solve_in_place(&mut b);
        for (x, y) in b.iter().zip(&x_true) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(m.cholesky_shifted(10.0).is_none());
    }

    #[test]
    fn csr_merges_duplicates() {
        let m = Csr::from_triplets(3, vec![(0, 1, 1.0), (2, 2, 3.0), (0, 1, 2.0), (1, 0, -1.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.half_bandwidth(), 1);
    }

    proptest! {
        #[test]
        fn eigen_reconstructs_matrix(seed in 0u64..1000, n in 1usize..12) {
            let a = random_sym(n, seed);
            let (vals, vecs) = sym_eigen(&a, n).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let r: f64 = (0..n).map(|k| vecs[i * n + k] * vals[k] * vecs[j * n + k]).sum();
                    prop_assert!((r - a[i * n + j]).abs() < 1e-12);
                }
            }
            prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
