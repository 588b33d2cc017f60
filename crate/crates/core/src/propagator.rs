//! Short-time Lanczos propagation with an adaptive Krylov dimension.
//!
//! For a step of length `dt` the Krylov space is grown until
//! `|beta_1 ... beta_{K-1} dt^{K-1} / (K-1)!|^2 < eps`; the reduced
//! propagator `exp(-i T dt)` of the `K x K` tridiagonal matrix is evaluated
//! through its eigen-decomposition.

use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::hamiltonian::HermitianOperator;
use crate::linalg::{axpy, cis, dot, norm, tridiag_eigen};
use crate::{Error, Result, C64};

pub const DEFAULT_EPS: f64 = 1e-15;
pub const DEFAULT_MAX_K: usize = 1000;
/// Estimated loss of orthogonality that triggers full re-orthogonalization.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub k_used: usize,
    pub error_estimate: f64,
    pub norm_after: f64,
    pub reorthogonalized: bool,
}

/// `ln(prod beta_i dt^j / j!)^2` accumulated one factor at a time.
#[derive(Debug, Clone, Copy)]
struct ErrorProduct {
    log: f64,
    log_dt: f64,
    j: usize,
}

impl ErrorProduct {
    fn new(dt: f64) -> Self {
        ErrorProduct {
            log: 0.0,
            log_dt: libm::log(dt.abs()),
            j: 0,
        }
    }

    /// Adds `beta_{j+1}` and returns `ln` of the squared estimate.
    fn push(&mut self, beta: f64) -> f64 {
        self.j += 1;
        self.log += libm::log(beta) + self.log_dt - libm::log(self.j as f64);
        2.0 * self.log
    }
}

/// Lanczos workspace; vectors are allocated on demand and reused.
#[derive(Debug, Clone)]
pub struct LanczosPropagator {
    pub eps: f64,
    pub max_k: usize,
    basis: Vec<Vec<C64>>,
    work: Vec<C64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl Default for LanczosPropagator {
    fn default() -> Self {
        Self::new(DEFAULT_EPS, DEFAULT_MAX_K)
    }
}

impl LanczosPropagator {
    pub fn new(eps: f64, max_k: usize) -> Self {
        LanczosPropagator {
            eps,
            max_k: max_k.max(2),
            basis: Vec::new(),
            work: Vec::new(),
            alpha: Vec::new(),
            beta: Vec::new(),
        }
    }

    fn vector(&mut self, k: usize, dim: usize) {
        while self.basis.len() <= k {
            self.basis.push(Vec::new());
        }
        if self.basis[k].len() != dim {
            self.basis[k] = vec![C64::new(0.0, 0.0); dim];
        }
    }

    /// Advances `v` by `exp(-i H dt)` in place.
    pub fn step<H: HermitianOperator + ?Sized>(
        &mut self,
        op: &H,
        v: &mut [C64],
        dt: f64,
    ) -> Result<StepReport> {
        let dim = op.dim();
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        let nu = norm(v);
        if !nu.is_finite() {
            return Err(Error::Numerical(
                "non-finite state before Lanczos step".into(),
            ));
        }
        if nu == 0.0 {
            return Ok(StepReport {
                k_used: 1,
                error_estimate: 0.0,
                norm_after: 0.0,
                reorthogonalized: false,
            });
        }
        let ln_eps = libm::log(self.eps);
        self.alpha.clear();
        self.beta.clear();
        self.work.resize(dim, C64::new(0.0, 0.0));
        self.vector(0, dim);
        for (q, x) in self.basis[0].iter_mut().zip(v.iter()) {
            *q = x / nu;
        }

        // omega[k] ~ <q_j, q_k>, omega_prev[k] ~ <q_{j-1}, q_k>
        let unit = f64::EPSILON * libm::sqrt(dim as f64);
        let mut omega: Vec<f64> = vec![1.0];
        let mut omega_prev: Vec<f64> = Vec::new();
        let mut product = ErrorProduct::new(dt);
        let mut error_estimate = f64::INFINITY;
        let mut reorth = false;
        let mut k_used = 0;

        let mut j = 0;
        loop {
            // w = H q_j - beta_{j-1} q_{j-1} - alpha_j q_j
            op.apply(&self.basis[j], &mut self.work);
            let a = dot(&self.basis[j], &self.work).re;
            self.alpha.push(a);
            if !a.is_finite() {
                return Err(Error::Numerical("non-finite Lanczos coefficient".into()));
            }
            if k_used == j + 1 {
                break;
            }
            axpy(C64::new(-a, 0.0), &self.basis[j], &mut self.work);
            if j > 0 {
                let b = self.beta[j - 1];
                axpy(C64::new(-b, 0.0), &self.basis[j - 1], &mut self.work);
            }
            let mut b = norm(&self.work);
            if b == 0.0 {
                // exact invariant subspace
                error_estimate = 0.0;
                break;
            }
            // orthogonality estimate for the new vector
            let mut next = vec![0.0; j + 2];
            for k in 0..j {
                let mut w = self.beta[k] * omega.get(k + 1).copied().unwrap_or(0.0)
                    + (self.alpha[k] - a) * omega[k]
                    - if j > 0 {
                        self.beta[j - 1] * omega_prev.get(k).copied().unwrap_or(0.0)
                    } else {
                        0.0
                    };
                if k > 0 {
                    w += self.beta[k - 1] * omega[k - 1];
                }
                w += unit * (self.beta[k] + b).copysign(w);
                next[k] = w / b;
            }
            next[j] = unit;
            next[j + 1] = 1.0;
            let lost = next[..=j].iter().fold(0.0f64, |m, x| m.max(x.abs())) > ORTHOGONALITY_TOL;
            if lost {
                // two passes of classical Gram-Schmidt against every vector
                for _ in 0..2 {
                    for k in 0..=j {
                        let c = dot(&self.basis[k], &self.work);
                        axpy(-c, &self.basis[k], &mut self.work);
                    }
                }
                b = norm(&self.work);
                for w in next[..=j].iter_mut() {
                    *w = unit;
                }
                reorth = true;
                if b == 0.0 {
                    error_estimate = 0.0;
                    break;
                }
            }
            let ln_err = product.push(b);
            if j + 2 >= self.max_k && ln_err >= ln_eps {
                return Err(Error::Stiffness {
                    k: self.max_k,
                    error_estimate: libm::exp(ln_err),
                });
            }
            self.beta.push(b);
            omega_prev = core::mem::replace(&mut omega, next);

            self.vector(j + 1, dim);
            let inv = 1.0 / b;
            for (q, w) in self.basis[j + 1].iter_mut().zip(self.work.iter()) {
                *q = w * inv;
            }

            if ln_err < ln_eps {
                error_estimate = libm::exp(ln_err);
                // alpha_{j+1} still needed: one more product, then stop
                k_used = j + 2;
            }
            j += 1;
        }

        let k = self.alpha.len();
        let (vals, vecs) = tridiag_eigen(&self.alpha, &self.beta[..k - 1])?;
        // c = S exp(-i L dt) S^T e_1 * nu
        let mut coef = vec![C64::new(0.0, 0.0); k];
        for m in 0..k {
            let w = cis(-vals[m] * dt) * (vecs[m] * nu);
            for (i, c) in coef.iter_mut().enumerate() {
                *c += w * vecs[i * k + m];
            }
        }
        for x in v.iter_mut() {
            *x = C64::new(0.0, 0.0);
        }
        for (i, c) in coef.iter().enumerate() {
            axpy(*c, &self.basis[i], v);
        }
        let norm_after = norm(v);
        if !norm_after.is_finite() {
            return Err(Error::Numerical(
                "non-finite state after Lanczos step".into(),
            ));
        }
        Ok(StepReport {
            k_used: k,
            error_estimate,
            norm_after,
            reorthogonalized: reorth,
        })
    }
}

/// Smallest Krylov dimension meeting the error bound, for every `dt` at
/// once, starting from `v0`. Runs the bare three-term recurrence (two
/// vectors of storage, no re-orthogonalization). `None` means the bound was
/// not met within `max_k`.
pub fn krylov_dimensions<H: HermitianOperator + ?Sized>(
    op: &H,
    v0: &[C64],
    dts: &[f64],
    eps: f64,
    max_k: usize,
) -> Result<Vec<Option<usize>>> {
    let dim = op.dim();
    if v0.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: v0.len(),
        });
    }
    let nu = norm(v0);
    if !(nu > 0.0) {
        return Err(Error::Numerical("start vector has zero norm".into()));
    }
    let ln_eps = libm::log(eps);
    let mut out: Vec<Option<usize>> = vec![None; dts.len()];
    let mut products: Vec<ErrorProduct> = dts.iter().map(|&dt| ErrorProduct::new(dt)).collect();
    let mut pending = dts.len();
    let mut q_prev = vec![C64::new(0.0, 0.0); dim];
    let mut q: Vec<C64> = v0.iter().map(|x| x / nu).collect();
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut beta_prev = 0.0;
    let mut j = 0;
    while pending > 0 && j + 2 <= max_k {
        op.apply(&q, &mut w);
        let a = dot(&q, &w).re;
        axpy(C64::new(-a, 0.0), &q, &mut w);
        axpy(C64::new(-beta_prev, 0.0), &q_prev, &mut w);
        let b = norm(&w);
        for (slot, p) in out.iter_mut().zip(products.iter_mut()) {
            if slot.is_some() {
                continue;
            }
            if b == 0.0 || p.push(b) < ln_eps {
                *slot = Some(j + 2);
                pending -= 1;
            }
        }
        if b == 0.0 {
            break;
        }
        core::mem::swap(&mut q_prev, &mut q);
        for (qi, wi) in q.iter_mut().zip(&w) {
            *qi = wi / b;
        }
        beta_prev = b;
        j += 1;
    }
    Ok(out)
}

/// Fills `v` with complex entries uniform in `[-1, 1)^2` and normalizes it.
pub fn random_unit_vector<R: RngCore + ?Sized>(rng: &mut R, v: &mut [C64]) {
    let mut u = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
    for x in v.iter_mut() {
        let re = u();
        let im = u();
        *x = C64::new(re, im);
    }
    let n = norm(v);
    for x in v.iter_mut() {
        *x /= n;
    }
}

/// Maximal Krylov dimension over `trials` random start vectors, for every
/// `(l_max, dt)` pair. `table[i][k]` belongs to `l_max_grid[i]` and
/// `dt_grid[k]`; `None` means the bound was not met within `max_k`.
pub fn kmax_scan<R: RngCore + ?Sized>(
    h: &crate::hamiltonian::Hamiltonian,
    dt_grid: &[f64],
    l_max_grid: &[usize],
    trials: usize,
    eps: f64,
    max_k: usize,
    rng: &mut R,
) -> Result<Vec<Vec<Option<usize>>>> {
    let mut table = Vec::with_capacity(l_max_grid.len());
    for &l in l_max_grid {
        if l > h.angular().l_max {
            return Err(Error::InvalidSpec(alloc::format!(
                "scan l_max {l} exceeds the Hamiltonian's {}",
                h.angular().l_max
            )));
        }
        let op = h.truncated(l);
        let mut kmax: Vec<Option<usize>> = vec![Some(0); dt_grid.len()];
        let mut v = vec![C64::new(0.0, 0.0); op.dim()];
        for _ in 0..trials {
            random_unit_vector(rng, &mut v);
            // dt values already beyond the cap need no further work
            let open: Vec<usize> = (0..dt_grid.len()).filter(|&k| kmax[k].is_some()).collect();
            if open.is_empty() {
                break;
            }
            let dts: Vec<f64> = open.iter().map(|&k| dt_grid[k]).collect();
            let ks = krylov_dimensions(&op, &v, &dts, eps, max_k)?;
            for (&k, got) in open.iter().zip(ks) {
                kmax[k] = match (kmax[k], got) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
            }
        }
        table.push(kmax);
    }
    Ok(table)
}

/// Smallest `K` with
/// `(K-1)/dt > e [2 pi (K-1) eps]^(-1/(2(K-1))) l_max(l_max+1) / (2 xi_1^2)`,
/// i.e. the Krylov dimension needed if the product of off-diagonal Lanczos
/// coefficients grew like the largest centrifugal energy of the grid. It is a
/// deliberate overestimate; `None` if no `K <= 10^4` satisfies it.
pub fn estimate_kmax(l_max: usize, xi_1: f64, dt: f64, eps: f64) -> Option<usize> {
    let lf = l_max as f64;
    let emax = lf * (lf + 1.0) / (2.0 * xi_1 * xi_1);
    for k in 2..=10_000usize {
        let m = (k - 1) as f64;
        let rhs = core::f64::consts::E
            * libm::pow(2.0 * core::f64::consts::PI * m * eps, -1.0 / (2.0 * m))
            * emax;
        if m / dt > rhs {
            return Some(k);
        }
    }
    None
}
