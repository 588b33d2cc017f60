//! Norm, radial densities, partial-wave functions, dipole acceleration and
//! harmonic spectra.

use alloc::vec;
use alloc::vec::Vec;

use crate::angular::AngularCoupling;
use crate::grid::{BasisClass, RadialGrid};
use crate::linalg::cis;
use crate::pulse::PulseSpec;
use crate::scaling::{Direction, Scale, ScalingSchedule};
use crate::state::StateVector;
use crate::{Error, Result, C64};

/// Squared Euclidean norm of the coefficients, equal to `sum_l int |psi_l|^2 dr`.
pub fn norm(v: &StateVector) -> f64 {
    v.norm_sqr()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySnapshot {
    pub t: f64,
    /// `(r, rho(r))` pairs in unscaled coordinates.
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// `phi_l(xi) / sqrt(R)` outside `r_sigma`, `psi_l` inside.
    Scaled,
    /// `psi_l(r(xi))` with the phase transform undone.
    Unscaled,
}

fn check_state(v: &StateVector, grid: &RadialGrid) -> Result<()> {
    if v.n_basis != grid.n_basis() {
        return Err(Error::DimensionMismatch {
            expected: grid.n_basis(),
            found: v.n_basis,
        });
    }
    Ok(())
}

/// Basis function values at `xi` together with the coefficient multiplier
/// that turns stored coefficients into amplitudes of `psi` (inner side) or
/// `phi` (outer side). Returns `(index, chi, chi', multiplier)` and whether
/// `xi` lies in the scaled region.
fn local_expansion(
    grid: &RadialGrid,
    sc: &Scale,
    xi: f64,
) -> Result<(Vec<(usize, f64, f64, f64)>, bool)> {
    let e = grid.element_of(xi)?;
    let outer = e >= grid.spec.n_fe_inner;
    let r = sc.r;
    let inner_bridge = libm::sqrt(2.0 / (1.0 + r));
    let outer_bridge = libm::sqrt(2.0 * r / (1.0 + r));
    let funcs = grid
        .element_functions(e, xi)
        .into_iter()
        .map(|(k, v, d)| {
            let m = match grid.class[k] {
                BasisClass::Bridge if outer => outer_bridge,
                BasisClass::Bridge => inner_bridge,
                _ => 1.0,
            };
            (k, v, d, m)
        })
        .collect();
    Ok((funcs, outer))
}

fn xi_of(grid: &RadialGrid, sc: &Scale, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(alloc::format!("negative radius {r}")));
    }
    let xi = sc.r_to_xi(r, grid.r_sigma());
    let top = grid.spec.xi_max;
    if xi > top * (1.0 + 1e-12) {
        return Err(Error::Domain(alloc::format!(
            "r = {r} lies beyond the simulated radius {}",
            sc.xi_to_r(top, grid.r_sigma())
        )));
    }
    Ok(xi.min(top))
}

/// `rho(r) = sum_l |psi_l(r)|^2` on the given radii.
pub fn density(
    v: &StateVector,
    grid: &RadialGrid,
    schedule: &ScalingSchedule,
    t: f64,
    r_samples: &[f64],
) -> Result<DensitySnapshot> {
    check_state(v, grid)?;
    let sc = schedule.scale(t);
    let mut samples = Vec::with_capacity(r_samples.len());
    for &r in r_samples {
        let xi = xi_of(grid, &sc, r)?;
        let (funcs, outer) = local_expansion(grid, &sc, xi)?;
        let mut rho = 0.0;
        for l in 0..v.n_blocks() {
            let c = v.block(l);
            let amp: C64 = funcs.iter().map(|&(k, val, _, m)| c[k] * (val * m)).sum();
            rho += amp.norm_sqr();
        }
        if outer {
            rho /= sc.r;
        }
        samples.push((r, rho));
    }
    Ok(DensitySnapshot { t, samples })
}

/// One-sided radial derivatives `(d rho/dr at r_sigma - 0, at r_sigma + 0)`.
pub fn density_slopes_at_surface(
    v: &StateVector,
    grid: &RadialGrid,
    schedule: &ScalingSchedule,
    t: f64,
) -> Result<(f64, f64)> {
    check_state(v, grid)?;
    if grid.bridge_index().is_none() {
        return Err(Error::Domain("the grid has no scaling surface".into()));
    }
    let sc = schedule.scale(t);
    let rs = grid.r_sigma();
    let e_in = grid.spec.n_fe_inner - 1;
    let slope = |e: usize, outer: bool| {
        let r = sc.r;
        let bridge = if outer {
            libm::sqrt(2.0 * r / (1.0 + r))
        } else {
            libm::sqrt(2.0 / (1.0 + r))
        };
        let funcs = grid.element_functions(e, rs);
        let mut s = 0.0;
        for l in 0..v.n_blocks() {
            let c = v.block(l);
            let mut amp = C64::new(0.0, 0.0);
            let mut der = C64::new(0.0, 0.0);
            for &(k, val, d) in &funcs {
                let m = if grid.class[k] == BasisClass::Bridge {
                    bridge
                } else {
                    1.0
                };
                amp += c[k] * (val * m);
                der += c[k] * (d * m);
            }
            s += 2.0 * (amp.conj() * der).re;
        }
        if outer {
            s / (r * r)
        } else {
            s
        }
    };
    Ok((slope(e_in, false), slope(e_in + 1, true)))
}

/// Partial wave `l` sampled at the scaled coordinates `xi_samples`.
pub fn radial_function(
    v: &StateVector,
    grid: &RadialGrid,
    schedule: &ScalingSchedule,
    t: f64,
    ell: usize,
    representation: Representation,
    xi_samples: &[f64],
) -> Result<Vec<C64>> {
    check_state(v, grid)?;
    if ell >= v.n_blocks() {
        return Err(Error::DimensionMismatch {
            expected: v.n_blocks(),
            found: ell + 1,
        });
    }
    let sc = schedule.scale(t);
    let c = v.block(ell);
    let rs = grid.r_sigma();
    xi_samples
        .iter()
        .map(|&xi| {
            let (funcs, outer) = local_expansion(grid, &sc, xi)?;
            let amp: C64 = funcs.iter().map(|&(k, val, _, m)| c[k] * (val * m)).sum();
            if !outer {
                return Ok(amp);
            }
            match representation {
                Representation::Scaled => Ok(amp / libm::sqrt(sc.r)),
                Representation::Unscaled if xi > rs => {
                    Ok(amp * sc.phase_factor(xi, rs, Direction::Inverse)?)
                }
                // on the surface itself the transform is the identity up to sqrt(R)
                Representation::Unscaled => Ok(amp / libm::sqrt(sc.r)),
            }
        })
        .collect()
}

/// `<d/dz (1/r)> - F(t) <1>`, the expectation value entering the harmonic spectrum.
pub fn dipole_acceleration(
    v: &StateVector,
    grid: &RadialGrid,
    angular: &AngularCoupling,
    schedule: &ScalingSchedule,
    pulse: &PulseSpec,
    t: f64,
) -> Result<f64> {
    check_state(v, grid)?;
    let sc = schedule.scale(t);
    let rs = grid.r_sigma();
    let inv_r2: Vec<f64> = grid
        .nodes
        .iter()
        .map(|&xi| {
            let r = sc.xi_to_r(xi, rs);
            1.0 / (r * r)
        })
        .collect();
    let nb = v.n_blocks().min(angular.n_blocks());
    let mut acc = 0.0;
    for l in 0..nb.saturating_sub(1) {
        let g = angular.g(l, l + 1);
        let (a, b) = (v.block(l), v.block(l + 1));
        let mut s = 0.0;
        for i in 0..grid.n_basis() {
            s += (a[i].conj() * b[i]).re * inv_r2[i];
        }
        // both (l, l+1) and (l+1, l)
        acc -= 2.0 * g * s;
    }
    let (f, _) = pulse.field_and_potential(t);
    Ok(acc - f * v.norm_sqr())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    pub omega_over_up: Vec<f64>,
    pub s: Vec<f64>,
}

/// `S(w) = |int_0^T a(t) e^{i w t} dt|^2` by the trapezoidal rule on samples
/// `a(k dt)`. With `window` the samples are multiplied by a Hann window first.
pub fn hhg_spectrum(
    trace: &[f64],
    dt: f64,
    omega_grid: &[f64],
    up: f64,
    window: bool,
) -> Result<Spectrum> {
    if trace.is_empty() {
        return Err(Error::InvalidSpec("empty acceleration trace".into()));
    }
    let n = trace.len();
    let weights: Vec<f64> = (0..n)
        .map(|k| {
            let trap = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
            let hann = if window && n > 1 {
                let s = libm::sin(core::f64::consts::PI * k as f64 / (n - 1) as f64);
                s * s
            } else {
                1.0
            };
            trap * hann * dt
        })
        .collect();
    let mut s = vec![0.0; omega_grid.len()];
    for (sk, &w) in s.iter_mut().zip(omega_grid) {
        let mut acc = C64::new(0.0, 0.0);
        for (k, (&a, &wt)) in trace.iter().zip(&weights).enumerate() {
            acc += cis(w * k as f64 * dt) * (a * wt);
        }
        *sk = acc.norm_sqr();
    }
    Ok(Spectrum {
        omega: omega_grid.to_vec(),
        omega_over_up: omega_grid.iter().map(|w| w / up).collect(),
        s,
    })
}
