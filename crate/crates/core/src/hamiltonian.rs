//! Time-dependent Hamiltonian of the exterior-scaled radial equations.
//!
//! Radial part of partial wave `l`, with `c(R)` the region factors below:
//!
//! | rows \ cols | inner              | bridge                     | outer                 |
//! |-------------|--------------------|----------------------------|-----------------------|
//! | inner       | `T/2 + V_l(xi)`    | `T / sqrt(2(1+R))`         | 0                     |
//! | bridge      | sym.               | `T/(2R) + V_l(r_sigma)`    | `T / sqrt(2R^3(1+R))` |
//! | outer       | 0                  | sym.                       | `T/(2R^2) + V_l(r) + R R'' (xi - r_sigma)^2 / 2` |
//!
//! where `T` are the kinetic integrals of the grid and `r = r_sigma + R (xi - r_sigma)`.
//! The dipole coupling is `F g r` (length gauge) or
//! `-i (A/2) g [D + (l'(l'+1) - l(l+1)) / r] + g A R' (xi - r_sigma)` (velocity
//! gauge, last term outer only), with the antisymmetric derivative integrals
//! `D` carrying the factors `1`, `sqrt(2/(1+R))`, `sqrt(2/(R(1+R)))` and `1/R`
//! for inner-inner, inner-bridge, bridge-outer and outer-outer entries.

use alloc::vec;
use alloc::vec::Vec;

use crate::angular::AngularCoupling;
use crate::grid::{BasisClass, RadialGrid};
use crate::linalg::BandSym;
use crate::pulse::PulseSpec;
use crate::scaling::{Scale, ScalingSchedule};
use crate::stiffness::StiffnessFilter;
use crate::{Error, Result, C64};

pub use crate::pulse::Gauge;

/// Linear operator that is Hermitian with respect to the Euclidean product.
pub trait HermitianOperator {
    fn dim(&self) -> usize;
    /// `y = A x`
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

/// Effective potential `l(l+1)/(2r^2) - 1/r`.
pub fn potential(l: usize, r: f64) -> f64 {
    let lf = l as f64;
    lf * (lf + 1.0) / (2.0 * r * r) - 1.0 / r
}

/// Everything time dependent the matrix needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeFactors {
    pub t: f64,
    pub scale: Scale,
    pub field: f64,
    pub potential: f64,
}

impl TimeFactors {
    pub fn field_free(scale: Scale) -> Self {
        TimeFactors {
            t: 0.0,
            scale,
            field: 0.0,
            potential: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    InnerInner,
    InnerBridge,
    BridgeBridge,
    BridgeOuter,
    OuterOuter,
}

fn region(a: BasisClass, b: BasisClass) -> Region {
    use BasisClass::*;
    match (a, b) {
        (Inner, Inner) => Region::InnerInner,
        (Inner, Bridge) | (Bridge, Inner) => Region::InnerBridge,
        (Bridge, Bridge) => Region::BridgeBridge,
        (Bridge, Outer) | (Outer, Bridge) => Region::BridgeOuter,
        (Outer, Outer) => Region::OuterOuter,
        // inner and outer functions never share an element
        (Inner, Outer) | (Outer, Inner) => unreachable!("inner-outer overlap"),
    }
}

fn kinetic_factor(reg: Region, r: f64) -> f64 {
    match reg {
        Region::InnerInner => 0.5,
        Region::InnerBridge => 1.0 / libm::sqrt(2.0 * (1.0 + r)),
        Region::BridgeBridge => 0.5 / r,
        Region::BridgeOuter => 1.0 / libm::sqrt(2.0 * r * r * r * (1.0 + r)),
        Region::OuterOuter => 0.5 / (r * r),
    }
}

fn derivative_factor(reg: Region, r: f64) -> f64 {
    match reg {
        Region::InnerInner | Region::BridgeBridge => 1.0,
        Region::InnerBridge => libm::sqrt(2.0 / (1.0 + r)),
        Region::BridgeOuter => libm::sqrt(2.0 / (r * (1.0 + r))),
        Region::OuterOuter => 1.0 / r,
    }
}

#[derive(Debug, Clone)]
pub struct Hamiltonian {
    grid: RadialGrid,
    angular: AngularCoupling,
    schedule: ScalingSchedule,
    pulse: PulseSpec,
    gauge: Gauge,
    factors: TimeFactors,
    regions: Vec<Region>,
    // entries whose value depends on R
    scaled_entries: Vec<usize>,
    kin: Vec<f64>,
    der: Vec<f64>,
    // V_l(r_i) (+ harmonic term outside), l-major
    pot: Vec<f64>,
    // physical radius of each node
    coord: Vec<f64>,
    inv_coord: Vec<f64>,
    // R' (xi - r_sigma) on outer nodes, 0 elsewhere
    drift: Vec<f64>,
    filter: Option<StiffnessFilter>,
}

/// Builds the Hamiltonian at `t = 0`.
pub fn assemble(
    grid: RadialGrid,
    angular: AngularCoupling,
    schedule: ScalingSchedule,
    pulse: PulseSpec,
    gauge: Gauge,
) -> Result<Hamiltonian> {
    Hamiltonian::new(grid, angular, schedule, pulse, gauge)
}

impl Hamiltonian {
    pub fn new(
        grid: RadialGrid,
        angular: AngularCoupling,
        schedule: ScalingSchedule,
        pulse: PulseSpec,
        gauge: Gauge,
    ) -> Result<Self> {
        pulse.check_gauge(gauge)?;
        if grid.kinetic.n != grid.n_basis() || grid.antisym.n != grid.n_basis() {
            return Err(Error::DimensionMismatch {
                expected: grid.n_basis(),
                found: grid.kinetic.n,
            });
        }
        let n = grid.n_basis();
        let mut regions = Vec::with_capacity(grid.kinetic.nnz());
        let mut scaled_entries = Vec::new();
        for i in 0..n {
            for (j, _) in grid.kinetic.row(i) {
                let reg = region(grid.class[i], grid.class[j]);
                if reg != Region::InnerInner {
                    scaled_entries.push(regions.len());
                }
                regions.push(reg);
            }
        }
        let nb = angular.n_blocks();
        let mut h = Hamiltonian {
            kin: vec![0.0; regions.len()],
            der: vec![0.0; regions.len()],
            pot: vec![0.0; nb * n],
            coord: grid.nodes.clone(),
            inv_coord: vec![0.0; n],
            drift: vec![0.0; n],
            regions,
            scaled_entries,
            grid,
            angular,
            schedule,
            pulse,
            gauge,
            factors: TimeFactors::field_free(Scale::IDENTITY),
            filter: None,
        };
        for (k, reg) in h.regions.iter().enumerate() {
            h.kin[k] = h.grid.kinetic.vals[k] * kinetic_factor(*reg, 1.0);
            h.der[k] = h.grid.antisym.vals[k] * derivative_factor(*reg, 1.0);
        }
        for l in 0..nb {
            for i in 0..n {
                h.pot[l * n + i] = potential(l, h.grid.nodes[i]);
            }
        }
        for i in 0..n {
            h.inv_coord[i] = 1.0 / h.coord[i];
        }
        let f0 = h.factors_at(0.0);
        h.set_factors(f0);
        Ok(h)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn angular(&self) -> &AngularCoupling {
        &self.angular
    }

    pub fn schedule(&self) -> &ScalingSchedule {
        &self.schedule
    }

    pub fn pulse(&self) -> &PulseSpec {
        &self.pulse
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn factors(&self) -> TimeFactors {
        self.factors
    }

    pub fn filter(&self) -> Option<&StiffnessFilter> {
        self.filter.as_ref()
    }

    pub fn n_basis(&self) -> usize {
        self.grid.n_basis()
    }

    pub fn n_blocks(&self) -> usize {
        self.angular.n_blocks()
    }

    /// Factors prescribed by the schedule and pulse at time `t`.
    pub fn factors_at(&self, t: f64) -> TimeFactors {
        let (field, potential) = self.pulse.field_and_potential(t);
        TimeFactors {
            t,
            scale: self.schedule.scale(t),
            field,
            potential,
        }
    }

    /// Moves the matrix to time `t`.
    pub fn update_time(&mut self, t: f64) {
        let f = self.factors_at(t);
        self.set_factors(f);
    }

    /// Installs arbitrary time factors; only R-dependent entries are recomputed.
    pub fn set_factors(&mut self, f: TimeFactors) {
        let rescale = f.scale != self.factors.scale;
        self.factors = f;
        if !rescale {
            return;
        }
        let sc = f.scale;
        let r = sc.r;
        for &k in &self.scaled_entries {
            let reg = self.regions[k];
            self.kin[k] = self.grid.kinetic.vals[k] * kinetic_factor(reg, r);
            self.der[k] = self.grid.antisym.vals[k] * derivative_factor(reg, r);
        }
        let n = self.n_basis();
        let rs = self.grid.r_sigma();
        let first = self.grid.first_outer();
        for i in first..n {
            let d = self.grid.nodes[i] - rs;
            let ri = rs + r * d;
            self.coord[i] = ri;
            self.inv_coord[i] = 1.0 / ri;
            self.drift[i] = sc.r_dot * d;
        }
        for l in 0..self.n_blocks() {
            let row = &mut self.pot[l * n..(l + 1) * n];
            for i in first..n {
                let d = self.grid.nodes[i] - rs;
                row[i] = potential(l, self.coord[i]) + 0.5 * r * sc.r_ddot * d * d;
            }
        }
    }

    /// Replaces the top-left corners by their filtered versions.
    pub fn attach_filter(&mut self, filter: StiffnessFilter) -> Result<()> {
        if self.grid.spec.n_fe_inner == 0 {
            return Err(Error::Configuration(
                "spectral filtering is not available with global scaling".into(),
            ));
        }
        if filter.l_max != self.angular.l_max {
            return Err(Error::DimensionMismatch {
                expected: self.angular.l_max,
                found: filter.l_max,
            });
        }
        if filter.n_filter > self.grid.n_inner() || filter.n_dvr() != self.grid.spec.n_dvr {
            return Err(Error::DimensionMismatch {
                expected: self.grid.n_inner(),
                found: filter.n_filter,
            });
        }
        if filter.gauge != self.gauge {
            return Err(Error::Configuration(
                "filter was built for the other gauge".into(),
            ));
        }
        self.filter = Some(filter);
        Ok(())
    }

    pub fn detach_filter(&mut self) -> Option<StiffnessFilter> {
        self.filter.take()
    }

    fn corner(&self, l: usize) -> Option<(&[f64], usize)> {
        let f = self.filter.as_ref()?;
        f.h_tilde(l).map(|h| (h, f.n_filter))
    }

    fn pair_corner(&self, l: usize) -> Option<(&[f64], usize)> {
        let f = self.filter.as_ref()?;
        f.w_tilde(l).map(|w| (w, f.n_filter))
    }

    /// `y_l = sum_l' H_{l l'} x_l'` for row block `l` of a system truncated to `nb` blocks.
    fn apply_block(&self, l: usize, nb: usize, x: &[C64], y: &mut [C64]) {
        let n = self.n_basis();
        let xl = &x[l * n..(l + 1) * n];
        let pot = &self.pot[l * n..(l + 1) * n];
        let kin_pat = &self.grid.kinetic;
        let corner = self.corner(l);
        let cut = corner.map_or(0, |c| c.1);

        for i in 0..n {
            let mut acc = if i < cut {
                C64::new(0.0, 0.0)
            } else {
                xl[i] * pot[i]
            };
            let (lo, hi) = (kin_pat.row_ptr[i], kin_pat.row_ptr[i + 1]);
            for p in lo..hi {
                let j = kin_pat.cols[p];
                if i < cut && j < cut {
                    continue;
                }
                acc += xl[j] * self.kin[p];
            }
            y[i] = acc;
        }
        if let Some((h, m)) = corner {
            dense_real_add(h, m, &xl[..m], &mut y[..m], C64::new(1.0, 0.0), false);
        }

        let f = self.factors;
        let neighbours = [
            l.checked_sub(1),
            if l + 1 < nb { Some(l + 1) } else { None },
        ];
        for lp in neighbours.into_iter().flatten() {
            let g = self.angular.g(l, lp);
            let xp = &x[lp * n..(lp + 1) * n];
            // the stored pair matrix is w~_{min, min+1}
            let low = l.min(lp);
            let pc = self.pair_corner(low);
            let transposed = lp < l;
            let pcut = pc.map_or(0, |c| c.1);
            match self.gauge {
                crate::pulse::Gauge::Length => {
                    let s = f.field * g;
                    if s != 0.0 {
                        for i in pcut..n {
                            y[i] += xp[i] * (s * self.coord[i]);
                        }
                        if let Some((w, m)) = pc {
                            dense_real_add(
                                w,
                                m,
                                &xp[..m],
                                &mut y[..m],
                                C64::new(f.field, 0.0),
                                transposed,
                            );
                        }
                    }
                }
                crate::pulse::Gauge::Velocity => {
                    let a = f.potential;
                    if a == 0.0 {
                        continue;
                    }
                    let lf = l as f64;
                    let lpf = lp as f64;
                    let delta = lpf * (lpf + 1.0) - lf * (lf + 1.0);
                    // -i (A/2) g [ ... ]
                    let pref = C64::new(0.0, -0.5 * a * g);
                    let drift = g * a;
                    for i in 0..n {
                        let mut acc = C64::new(0.0, 0.0);
                        let (lo, hi) = (kin_pat.row_ptr[i], kin_pat.row_ptr[i + 1]);
                        for p in lo..hi {
                            let j = kin_pat.cols[p];
                            if i < pcut && j < pcut {
                                continue;
                            }
                            acc += xp[j] * self.der[p];
                        }
                        if i >= pcut {
                            acc += xp[i] * (delta * self.inv_coord[i]);
                        }
                        y[i] += pref * acc + xp[i] * (drift * self.drift[i]);
                    }
                    if let Some((w, m)) = pc {
                        // the (l+1, l) block is -w~^T
                        // w~ already carries g
                        let s = if transposed { 0.5 * a } else { -0.5 * a };
                        dense_real_add(w, m, &xp[..m], &mut y[..m], C64::new(0.0, s), transposed);
                    }
                }
            }
        }
    }

    /// `y = H x` restricted to the partial waves `0..=l_top`.
    pub fn apply_truncated(&self, l_top: usize, x: &[C64], y: &mut [C64]) {
        let n = self.n_basis();
        let nb = (l_top + 1).min(self.n_blocks());
        assert_eq!(x.len(), nb * n, "input length");
        assert_eq!(y.len(), nb * n, "output length");
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            y.par_chunks_mut(n)
                .enumerate()
                .for_each(|(l, yl)| self.apply_block(l, nb, x, yl));
        }
        #[cfg(not(feature = "parallel"))]
        for (l, yl) in y.chunks_mut(n).enumerate() {
            self.apply_block(l, nb, x, yl);
        }
    }

    /// Checked version of [`HermitianOperator::apply`].
    pub fn try_apply(&self, x: &[C64], y: &mut [C64]) -> Result<()> {
        let d = self.dim();
        if x.len() != d || y.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: if x.len() != d { x.len() } else { y.len() },
            });
        }
        self.apply(x, y);
        Ok(())
    }

    /// View of the Hamiltonian keeping only partial waves `0..=l_top`.
    pub fn truncated(&self, l_top: usize) -> Truncated<'_> {
        Truncated {
            h: self,
            l_top: l_top.min(self.angular.l_max),
        }
    }

    /// Dense matrix (row-major), for small systems and tests.
    pub fn to_dense(&self) -> Vec<C64> {
        let d = self.dim();
        let mut m = vec![C64::new(0.0, 0.0); d * d];
        let mut e = vec![C64::new(0.0, 0.0); d];
        let mut col = vec![C64::new(0.0, 0.0); d];
        for j in 0..d {
            e[j] = C64::new(1.0, 0.0);
            self.apply(&e, &mut col);
            e[j] = C64::new(0.0, 0.0);
            for i in 0..d {
                m[i * d + j] = col[i];
            }
        }
        m
    }

    /// Real radial block `H_{ll}` at the current factors (row-major `n x n`).
    pub fn radial_block_dense(&self, l: usize) -> Vec<f64> {
        let n = self.n_basis();
        let mut m = vec![0.0; n * n];
        let cut = self.corner(l).map_or(0, |c| c.1);
        for i in 0..n {
            if i >= cut {
                m[i * n + i] += self.pot[l * n + i];
            }
            for p in self.grid.kinetic.row_ptr[i]..self.grid.kinetic.row_ptr[i + 1] {
                let j = self.grid.kinetic.cols[p];
                if !(i < cut && j < cut) {
                    m[i * n + j] += self.kin[p];
                }
            }
        }
        if let Some((h, c)) = self.corner(l) {
            for i in 0..c {
                for j in 0..c {
                    m[i * n + j] = h[i * c + j];
                }
            }
        }
        m
    }

    /// Radial block `H_{ll}` at the current factors as a symmetric band matrix.
    pub fn radial_block_band(&self, l: usize) -> BandSym {
        let n = self.n_basis();
        let cut = self.corner(l).map_or(0, |c| c.1);
        let bw = (self.grid.spec.n_dvr - 1).max(cut.saturating_sub(1));
        let mut b = BandSym::zeros(n, bw);
        for i in 0..n {
            let mut diag = if i >= cut { self.pot[l * n + i] } else { 0.0 };
            for p in self.grid.kinetic.row_ptr[i]..self.grid.kinetic.row_ptr[i + 1] {
                let j = self.grid.kinetic.cols[p];
                if (i < cut && j < cut) || j > i {
                    continue;
                }
                if j == i {
                    diag += self.kin[p];
                } else {
                    b.set(i, j, self.kin[p]);
                }
            }
            b.set(i, i, diag);
        }
        if let Some((h, c)) = self.corner(l) {
            for i in 0..c {
                for j in 0..=i {
                    b.set(i, j, h[i * c + j]);
                }
            }
        }
        b
    }

    /// Structural nonzero count of the full matrix. Dipole blocks are counted
    /// with the pattern of the active gauge: diagonal (length) or the element
    /// pattern (velocity).
    pub fn nnz(&self) -> usize {
        let pattern = self.grid.kinetic.nnz();
        let n = self.n_basis();
        let nb = self.n_blocks();
        let (cut, corner_sparse) = match &self.filter {
            Some(f) => {
                let c = f.n_filter;
                let mut s = 0;
                for i in 0..c {
                    s += self.grid.kinetic.row(i).filter(|&(j, _)| j < c).count();
                }
                (c, s)
            }
            None => (0, 0),
        };
        let mut total = 0;
        for l in 0..nb {
            total += pattern;
            if self.corner(l).is_some() {
                total = total - corner_sparse + cut * cut;
            }
        }
        let pair_pattern = match self.gauge {
            Gauge::Length => n,
            Gauge::Velocity => pattern,
        };
        let pair_corner_sparse = match self.gauge {
            Gauge::Length => cut,
            Gauge::Velocity => corner_sparse,
        };
        for l in 0..nb.saturating_sub(1) {
            let mut c = pair_pattern;
            if self.pair_corner(l).is_some() {
                c = c - pair_corner_sparse + cut * cut;
            }
            total += 2 * c;
        }
        total
    }
}

// y += s * W x, or s * W^T x
fn dense_real_add(w: &[f64], m: usize, x: &[C64], y: &mut [C64], s: C64, transposed: bool) {
    if transposed {
        let mut tmp = vec![C64::new(0.0, 0.0); m];
        for (i, xi) in x.iter().enumerate() {
            let row = &w[i * m..(i + 1) * m];
            for (t, wij) in tmp.iter_mut().zip(row) {
                *t += xi * *wij;
            }
        }
        for (yi, t) in y.iter_mut().zip(tmp) {
            *yi += s * t;
        }
    } else {
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &w[i * m..(i + 1) * m];
            let mut acc = C64::new(0.0, 0.0);
            for (xj, wij) in x.iter().zip(row) {
                acc += xj * *wij;
            }
            *yi += s * acc;
        }
    }
}

impl HermitianOperator for Hamiltonian {
    fn dim(&self) -> usize {
        self.n_blocks() * self.n_basis()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.apply_truncated(self.angular.l_max, x, y);
    }
}

/// The Hamiltonian restricted to partial waves `0..=l_top`.
#[derive(Debug, Clone, Copy)]
pub struct Truncated<'a> {
    h: &'a Hamiltonian,
    l_top: usize,
}

impl HermitianOperator for Truncated<'_> {
    fn dim(&self) -> usize {
        (self.l_top + 1) * self.h.n_basis()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.h.apply_truncated(self.l_top, x, y);
    }
}

impl<T: HermitianOperator + ?Sized> HermitianOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        (**self).apply(x, y)
    }
}
