//! Field-free ground state of the s wave.

use alloc::vec;
use alloc::vec::Vec;

use crate::hamiltonian::{Hamiltonian, TimeFactors};
use crate::linalg::{tridiag_eigen, BandSym};
use crate::scaling::Scale;
use crate::state::StateVector;
use crate::{Error, Result, C64};

const RESIDUAL_TOL: f64 = 1e-12;
const MAX_ITER: usize = 500;

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub state: StateVector,
    pub residual: f64,
    pub iterations: usize,
}

/// Lowest eigenpair of the `l = 0` block with `R = 1` and no field
/// (including the filtered corner, if one is attached), placed in a full
/// state vector with all other partial waves empty.
///
/// A Lanczos run gives an upper bound on the eigenvalue; inverse iteration
/// with a shift just below it, solved by banded Cholesky, then converges
/// the vector.
pub fn ground_state(h: &Hamiltonian) -> Result<GroundState> {
    let mut h0 = h.clone();
    h0.set_factors(TimeFactors::field_free(Scale::IDENTITY));
    let band = h0.radial_block_band(0);
    let nodes = &h.grid().nodes;
    let weights = &h.grid().weights;
    let start: Vec<f64> = nodes
        .iter()
        .zip(weights)
        .map(|(&x, &w)| 2.0 * x * libm::exp(-x) * libm::sqrt(w) + 1e-3)
        .collect();
    let theta = lowest_ritz_value(&band, &start, 150)?;

    let mut delta = 1e-3;
    let chol = loop {
        if let Some(c) = band.cholesky_shifted(theta - delta) {
            break c;
        }
        delta *= 10.0;
        if delta > 1e6 {
            return Err(Error::NonConvergence(
                "no positive-definite shift found below the s-wave spectrum".into(),
            ));
        }
    };

    let n = band.n;
    let mut x = start;
    normalize(&mut x);
    let mut hx = vec![0.0; n];
    for it in 1..=MAX_ITER {
        chol.solve_in_place(&mut x);
        normalize(&mut x);
        band.matvec(&x, &mut hx);
        let e: f64 = x.iter().zip(&hx).map(|(a, b)| a * b).sum();
        let res = libm::sqrt(
            hx.iter()
                .zip(&x)
                .map(|(a, b)| (a - e * b) * (a - e * b))
                .sum::<f64>(),
        );
        if res < RESIDUAL_TOL {
            // fix the overall sign so the density peak is positive
            let peak = x
                .iter()
                .copied()
                .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            let sign = if peak < 0.0 { -1.0 } else { 1.0 };
            let mut state = StateVector::zeros(h.n_blocks(), n);
            for (c, v) in state.block_mut(0).iter_mut().zip(&x) {
                *c = C64::new(sign * v, 0.0);
            }
            return Ok(GroundState {
                energy: e,
                state,
                residual: res,
                iterations: it,
            });
        }
    }
    Err(Error::NonConvergence(alloc::format!(
        "inverse iteration did not reach residual {RESIDUAL_TOL:e} in {MAX_ITER} iterations"
    )))
}

fn normalize(x: &mut [f64]) {
    let n = libm::sqrt(x.iter().map(|v| v * v).sum::<f64>());
    for v in x.iter_mut() {
        *v /= n;
    }
}

// Lanczos with full re-orthogonalization; returns the smallest Ritz value.
fn lowest_ritz_value(a: &BandSym, start: &[f64], steps: usize) -> Result<f64> {
    let n = a.n;
    let m = steps.min(n);
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut v = start.to_vec();
    normalize(&mut v);
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut w = vec![0.0; n];
    for j in 0..m {
        q.push(v.clone());
        a.matvec(&q[j], &mut w);
        let al: f64 = w.iter().zip(&q[j]).map(|(x, y)| x * y).sum();
        alpha.push(al);
        for _ in 0..2 {
            for qk in &q {
                let c: f64 = w.iter().zip(qk).map(|(x, y)| x * y).sum();
                for (wi, qi) in w.iter_mut().zip(qk) {
                    *wi -= c * qi;
                }
            }
        }
        let b = libm::sqrt(w.iter().map(|x| x * x).sum::<f64>());
        if b < 1e-13 || j + 1 == m {
            break;
        }
        beta.push(b);
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / b;
        }
    }
    let (vals, _) = tridiag_eigen(&alpha, &beta[..alpha.len() - 1])?;
    Ok(vals[0])
}
