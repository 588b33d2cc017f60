//! Finite-element DVR basis on `[0, xi_max]`.
//!
//! Every element carries `n_dvr` Gauss-Lobatto nodes. The two outermost
//! nodes of the whole interval are dropped so that every basis function
//! vanishes at `xi = 0` and `xi = xi_max`. Nodes shared by two neighbouring
//! elements carry a bridge-style function normalized over the union of the
//! two elements. The function sitting on `r_sigma` is the one labelled
//! [`BasisClass::Bridge`].
//!
//! Basis functions are numbered from 0 in order of increasing `xi`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Csr;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisClass {
    Inner,
    Bridge,
    Outer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub r_sigma: f64,
    pub xi_max: f64,
    pub n_dvr: usize,
    pub n_fe_inner: usize,
    pub n_fe_outer: usize,
    pub delta_xi: f64,
}

impl GridSpec {
    /// Uniform partition with `n_fe_inner` elements below `r_sigma` and
    /// `n_fe_outer` above it.
    pub fn uniform(
        n_dvr: usize,
        n_fe_inner: usize,
        n_fe_outer: usize,
        delta_xi: f64,
    ) -> Result<Self> {
        let spec = GridSpec {
            r_sigma: n_fe_inner as f64 * delta_xi,
            xi_max: (n_fe_inner + n_fe_outer) as f64 * delta_xi,
            n_dvr,
            n_fe_inner,
            n_fe_outer,
            delta_xi,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_dvr < 2 {
            return Err(Error::InvalidSpec(format!(
                "n_dvr must be at least 2, got {}",
                self.n_dvr
            )));
        }
        let n_fe = self.n_fe_inner + self.n_fe_outer;
        if n_fe == 0 {
            return Err(Error::InvalidSpec("the grid has no elements".into()));
        }
        if !(self.delta_xi > 0.0) || !self.delta_xi.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "element width must be positive, got {}",
                self.delta_xi
            )));
        }
        if !(self.r_sigma >= 0.0) || !(self.xi_max >= self.r_sigma) || !(self.xi_max > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "need xi_max >= r_sigma >= 0, got xi_max = {}, r_sigma = {}",
                self.xi_max, self.r_sigma
            )));
        }
        let tol = 1e-12 * self.xi_max;
        if (self.delta_xi * n_fe as f64 - self.xi_max).abs() > tol {
            return Err(Error::InvalidSpec(format!(
                "xi_max = {} is not {} elements of width {}",
                self.xi_max, n_fe, self.delta_xi
            )));
        }
        if (self.delta_xi * self.n_fe_inner as f64 - self.r_sigma).abs() > tol {
            return Err(Error::InvalidSpec(format!(
                "r_sigma = {} does not sit on an element boundary",
                self.r_sigma
            )));
        }
        Ok(())
    }

    pub fn n_fe(&self) -> usize {
        self.n_fe_inner + self.n_fe_outer
    }

    /// Number of basis functions, `(n_dvr - 1) * n_fe - 1`.
    pub fn n_basis(&self) -> usize {
        (self.n_dvr - 1) * self.n_fe() - 1
    }
}

/// Gauss-Lobatto nodes and weights on `[a, b]`, nodes in ascending order.
pub fn lobatto_rule(n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!(
            "a Lobatto rule needs at least 2 points, got {n}"
        )));
    }
    if !(a < b) {
        return Err(Error::InvalidSpec(format!("empty interval [{a}, {b}]")));
    }
    let (x, w) = lobatto_reference(n)?;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut nodes: Vec<f64> = x.iter().map(|&t| mid + half * t).collect();
    nodes[0] = a;
    nodes[n - 1] = b;
    let weights = w.iter().map(|&v| v * half).collect();
    Ok((nodes, weights))
}

// Newton iteration on the Lobatto nodes starting from Chebyshev-Lobatto
// points, with the update written in terms of P_N and P_{N-1}.
fn lobatto_reference(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let deg = n - 1;
    let nf = n as f64;
    let mut x: Vec<f64> = (0..n)
        .map(|k| -libm::cos(core::f64::consts::PI * k as f64 / deg as f64))
        .collect();
    let mut p_n = vec![0.0; n];
    let mut converged = false;
    for _ in 0..100 {
        let mut change: f64 = 0.0;
        for (xi, pn) in x.iter_mut().zip(p_n.iter_mut()) {
            let (p, p_prev) = legendre_pair(deg, *xi);
            let update = (*xi * p - p_prev) / (nf * p);
            *xi -= update;
            *pn = p;
            change = change.max(update.abs());
        }
        if change < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "Lobatto nodes for n = {n} did not converge"
        )));
    }
    for (xi, pn) in x.iter().zip(p_n.iter_mut()) {
        *pn = legendre_pair(deg, *xi).0;
    }
    x[0] = -1.0;
    x[n - 1] = 1.0;
    // enforce the symmetry of the rule exactly
    for k in 0..n / 2 {
        let s = 0.5 * (x[n - 1 - k] - x[k]);
        x[k] = -s;
        x[n - 1 - k] = s;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    let w = p_n
        .iter()
        .map(|&p| 2.0 / (deg as f64 * nf * p * p))
        .collect();
    Ok((x, w))
}

// (P_deg(x), P_{deg-1}(x))
fn legendre_pair(deg: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=deg {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// Lagrange differentiation matrix on `nodes`: `d[k * n + j]` is `L_j'(x_k)`.
pub fn differentiation_matrix(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let lambda: Vec<f64> = (0..n)
        .map(|j| {
            let mut p = 1.0;
            for m in 0..n {
                if m != j {
                    p *= nodes[j] - nodes[m];
                }
            }
            1.0 / p
        })
        .collect();
    let mut d = vec![0.0; n * n];
    for k in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if j != k {
                let v = (lambda[j] / lambda[k]) / (nodes[k] - nodes[j]);
                d[k * n + j] = v;
                row_sum += v;
            }
        }
        d[k * n + k] = -row_sum;
    }
    d
}

#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub spec: GridSpec,
    /// Global DVR points, one per basis function.
    pub nodes: Vec<f64>,
    /// DVR quadrature weights; for element-boundary functions the sum of the
    /// two adjacent element weights.
    pub weights: Vec<f64>,
    pub class: Vec<BasisClass>,
    /// `int chi_k' chi_m' dxi` over the whole interval.
    pub kinetic: Csr,
    /// `int (chi_k chi_m' - chi_k' chi_m) dxi` over the whole interval.
    pub antisym: Csr,
    bridge: Option<usize>,
    local_nodes: Vec<f64>,
    local_weights: Vec<f64>,
    local_diff: Vec<f64>,
}

/// Builds the FEDVR basis and its static one-dimensional integrals.
pub fn build_grid(spec: GridSpec) -> Result<RadialGrid> {
    spec.validate()?;
    let nd = spec.n_dvr;
    let n_fe = spec.n_fe();
    let n = spec.n_basis();
    let (local_nodes, local_weights) = lobatto_rule(nd, 0.0, spec.delta_xi)?;
    let local_diff = differentiation_matrix(&local_nodes);

    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for e in 0..n_fe {
        let x0 = e as f64 * spec.delta_xi;
        for j in 0..nd {
            if let Some(k) = global_index(nd, n, e, j) {
                // shared nodes get the same position from both sides
                nodes[k] = if j == 0 { x0 } else { x0 + local_nodes[j] };
                weights[k] += local_weights[j];
            }
        }
    }

    let bridge = if spec.n_fe_inner > 0 && spec.n_fe_outer > 0 {
        Some((nd - 1) * spec.n_fe_inner - 1)
    } else {
        None
    };
    let class = (0..n)
        .map(|k| match bridge {
            Some(b) if k < b => BasisClass::Inner,
            Some(b) if k == b => BasisClass::Bridge,
            Some(_) => BasisClass::Outer,
            None if spec.n_fe_outer == 0 => BasisClass::Inner,
            None => BasisClass::Outer,
        })
        .collect();

    // element matrices on the physical element width
    let mut k_loc = vec![0.0; nd * nd];
    let mut a_loc = vec![0.0; nd * nd];
    for i in 0..nd {
        for j in 0..nd {
            let mut s = 0.0;
            for q in 0..nd {
                s += local_weights[q] * local_diff[q * nd + i] * local_diff[q * nd + j];
            }
            k_loc[i * nd + j] = s;
            a_loc[i * nd + j] = local_weights[i] * local_diff[i * nd + j]
                - local_weights[j] * local_diff[j * nd + i];
        }
    }

    let mut kin = Vec::with_capacity(n_fe * nd * nd);
    let mut ant = Vec::with_capacity(n_fe * nd * nd);
    for e in 0..n_fe {
        for i in 0..nd {
            let Some(gi) = global_index(nd, n, e, i) else {
                continue;
            };
            for j in 0..nd {
                let Some(gj) = global_index(nd, n, e, j) else {
                    continue;
                };
                let norm = 1.0 / libm::sqrt(weights[gi] * weights[gj]);
                kin.push((gi, gj, k_loc[i * nd + j] * norm));
                ant.push((gi, gj, a_loc[i * nd + j] * norm));
            }
        }
    }

    Ok(RadialGrid {
        spec,
        nodes,
        weights,
        class,
        kinetic: Csr::from_triplets(n, kin),
        antisym: Csr::from_triplets(n, ant),
        bridge,
        local_nodes,
        local_weights,
        local_diff,
    })
}

// Global basis index of local node j of element e, None for the dropped edges.
fn global_index(nd: usize, n: usize, e: usize, j: usize) -> Option<usize> {
    let raw = e * (nd - 1) + j;
    if raw == 0 || raw > n {
        None
    } else {
        Some(raw - 1)
    }
}

impl RadialGrid {
    pub fn n_basis(&self) -> usize {
        self.nodes.len()
    }

    pub fn bridge_index(&self) -> Option<usize> {
        self.bridge
    }

    /// Number of basis functions labelled inner.
    pub fn n_inner(&self) -> usize {
        match self.bridge {
            Some(b) => b,
            None if self.spec.n_fe_outer == 0 => self.n_basis(),
            None => 0,
        }
    }

    /// Index of the first outer function (equal to `n_basis` if there is none).
    pub fn first_outer(&self) -> usize {
        match self.bridge {
            Some(b) => b + 1,
            None if self.spec.n_fe_outer == 0 => self.n_basis(),
            None => 0,
        }
    }

    pub fn r_sigma(&self) -> f64 {
        self.spec.r_sigma
    }

    /// First DVR point to the right of the origin.
    pub fn xi_1(&self) -> f64 {
        self.nodes[0]
    }

    /// Lobatto nodes of one element, measured from its left edge.
    pub fn element_nodes(&self) -> &[f64] {
        &self.local_nodes
    }

    pub fn element_weights(&self) -> &[f64] {
        &self.local_weights
    }

    /// Lagrange derivative matrix of one element, `d[k * n_dvr + j] = L_j'(x_k)`.
    pub fn element_diff(&self) -> &[f64] {
        &self.local_diff
    }

    /// Basis index attached to local node `j` of element `e`, if it exists.
    pub fn basis_index(&self, e: usize, j: usize) -> Option<usize> {
        global_index(self.spec.n_dvr, self.n_basis(), e, j)
    }

    /// Element containing `xi`; boundary points belong to the element on their left
    /// except `xi = 0`.
    pub fn element_of(&self, xi: f64) -> Result<usize> {
        if !(xi >= 0.0 && xi <= self.spec.xi_max) {
            return Err(Error::Domain(format!(
                "xi = {xi} outside [0, {}]",
                self.spec.xi_max
            )));
        }
        let e = libm::ceil(xi / self.spec.delta_xi) as usize;
        Ok(e.saturating_sub(1).min(self.spec.n_fe() - 1))
    }

    /// Values and derivatives at `xi` of the basis functions of element `e`
    /// (pairs `(basis index, chi, chi')`). Only functions living on `e` appear.
    pub fn element_functions(&self, e: usize, xi: f64) -> Vec<(usize, f64, f64)> {
        let nd = self.spec.n_dvr;
        let x = xi - e as f64 * self.spec.delta_xi;
        let (vals, ders) = lagrange_values(&self.local_nodes, x);
        let mut out = Vec::with_capacity(nd);
        for j in 0..nd {
            if let Some(k) = self.basis_index(e, j) {
                let s = 1.0 / libm::sqrt(self.weights[k]);
                out.push((k, vals[j] * s, ders[j] * s));
            }
        }
        out
    }

    /// Values of all basis functions nonzero at `xi` (pairs `(index, chi)`).
    pub fn eval_basis(&self, xi: f64) -> Result<Vec<(usize, f64)>> {
        let e = self.element_of(xi)?;
        Ok(self
            .element_functions(e, xi)
            .into_iter()
            .map(|(k, v, _)| (k, v))
            .collect())
    }

    /// Multiplicative operator `f` in the DVR: its values at the nodes.
    pub fn quadrature_diag(&self, f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(k, &xi)| {
                let v = f(xi);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Singularity { node: k, xi })
                }
            })
            .collect()
    }

    /// Fraction of the bridge function's DVR weight lying in `[0, r_sigma]`.
    pub fn bridge_inner_fraction(&self) -> Option<f64> {
        let b = self.bridge?;
        Some(self.local_weights[self.spec.n_dvr - 1] / self.weights[b])
    }
}

/// Lagrange basis values and derivatives at `x` for the given nodes.
pub fn lagrange_values(nodes: &[f64], x: f64) -> (Vec<f64>, Vec<f64>) {
    let n = nodes.len();
    let mut vals = vec![0.0; n];
    let mut ders = vec![0.0; n];
    for j in 0..n {
        let mut p = 1.0;
        let mut denom = 1.0;
        for m in 0..n {
            if m != j {
                p *= x - nodes[m];
                denom *= nodes[j] - nodes[m];
            }
        }
        vals[j] = p / denom;
        // product rule, written without dividing by (x - x_m)
        let mut d = 0.0;
        for skip in 0..n {
            if skip == j {
                continue;
            }
            let mut q = 1.0;
            for m in 0..n {
                if m != j && m != skip {
                    q *= x - nodes[m];
                }
            }
            d += q;
        }
        ders[j] = d / denom;
    }
    (vals, ders)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lobatto_small_rules() {
        let (x, w) = lobatto_rule(2, 0.0, 1.0).unwrap();
        assert_eq!(x, vec![0.0, 1.0]);
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);

        let (x, w) = lobatto_rule(3, -1.0, 1.0).unwrap();
        for (a, b) in x.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        for (a, b) in w.iter().zip([1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(lobatto_rule(1, 0.0, 1.0).is_err());
        assert!(lobatto_rule(4, 1.0, 1.0).is_err());
    }

    #[test]
    fn first_node_of_ten_point_rule() {
        let (x, _) = lobatto_rule(10, 0.0, 1.5).unwrap();
        let stiff = 1.0 / (2.0 * x[1] * x[1]);
        assert!((stiff - 137.28).abs() / 137.28 < 1e-3, "{stiff}");
    }

    #[test]
    fn grid_sizes_and_classes() {
        let g = build_grid(GridSpec::uniform(10, 20, 280, 1.5).unwrap()).unwrap();
        assert_eq!(g.n_basis(), 2699);
        assert_eq!(g.bridge_index(), Some(179));
        assert_eq!(g.class[178], BasisClass::Inner);
        assert_eq!(g.class[179], BasisClass::Bridge);
        assert_eq!(g.class[180], BasisClass::Outer);
        assert!((g.nodes[179] - 30.0).abs() < 1e-12);

        let g = build_grid(GridSpec::uniform(2, 1, 1, 1.0).unwrap()).unwrap();
        assert_eq!(g.n_basis(), 1);
        assert_eq!(g.class, vec![BasisClass::Bridge]);

        let g = build_grid(GridSpec::uniform(10, 40, 0, 1.5).unwrap()).unwrap();
        assert!((g.spec.xi_max - 60.0).abs() < 1e-12);
        assert_eq!(g.n_basis(), 359);
        assert_eq!(g.bridge_index(), None);
        assert!(g.class.iter().all(|&c| c == BasisClass::Inner));

        let g = build_grid(GridSpec::uniform(4, 0, 5, 1.0).unwrap()).unwrap();
        assert!(g.class.iter().all(|&c| c == BasisClass::Outer));
    }

    #[test]
    fn rejects_off_boundary_r_sigma() {
        let spec = GridSpec {
            r_sigma: 2.5,
            xi_max: 10.0,
            n_dvr: 5,
            n_fe_inner: 2,
            n_fe_outer: 8,
            delta_xi: 1.0,
        };
        assert!(matches!(build_grid(spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn no_nodes_on_the_edges() {
        let g = build_grid(GridSpec::uniform(6, 3, 4, 0.7).unwrap()).unwrap();
        assert!(g.nodes[0] > 0.0);
        assert!(*g.nodes.last().unwrap() < g.spec.xi_max);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn quadrature_diag_and_bridge_split() {
        let g = build_grid(GridSpec::uniform(7, 3, 3, 1.2).unwrap()).unwrap();
        assert!(g
            .quadrature_diag(|_| 1.0)
            .unwrap()
            .iter()
            .all(|&v| v == 1.0));
        assert_eq!(g.quadrature_diag(|x| x).unwrap(), g.nodes);
        assert_eq!(g.bridge_inner_fraction(), Some(0.5));
        assert!(matches!(
            g.quadrature_diag(|x| if x > 2.0 { f64::INFINITY } else { 1.0 }),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn integral_matrices_are_symmetric_and_antisymmetric() {
        let g = build_grid(GridSpec::uniform(6, 2, 3, 1.1).unwrap()).unwrap();
        let n = g.n_basis();
        for i in 0..n {
            assert_eq!(g.antisym.get(i, i), 0.0);
            for j in 0..n {
                assert!((g.kinetic.get(i, j) - g.kinetic.get(j, i)).abs() < 1e-14);
                assert!((g.antisym.get(i, j) + g.antisym.get(j, i)).abs() < 1e-14);
            }
        }
        // inner-outer entries vanish unless the bridge is involved
        let b = g.bridge_index().unwrap();
        for i in 0..b {
            for j in (b + 1)..n {
                assert_eq!(g.kinetic.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn lagrange_interpolation_reproduces_nodes() {
        let (x, _) = lobatto_rule(6, 0.0, 2.0).unwrap();
        for (j, &xj) in x.iter().enumerate() {
            let (v, _) = lagrange_values(&x, xj);
            for (m, vm) in v.iter().enumerate() {
                let expect = if m == j { 1.0 } else { 0.0 };
                assert!((vm - expect).abs() < 1e-13);
            }
        }
    }

    proptest! {
        #[test]
        fn lobatto_exact_for_polynomials(n in 2usize..16, deg_frac in 0.0f64..1.0, a in -3.0f64..3.0, width in 0.1f64..4.0) {
            let b = a + width;
            let max_deg = 2 * n - 3;
            let deg = ((max_deg as f64) * deg_frac) as i32;
            let (x, w) = lobatto_rule(n, a, b).unwrap();
            let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg)).sum();
            let exact = (b.powi(deg + 1) - a.powi(deg + 1)) / (deg + 1) as f64;
            prop_assert!((approx - exact).abs() <= 1e-11 * (1.0 + exact.abs()));
            prop_assert!(w.iter().all(|&v| v > 0.0));
            prop_assert!((w.iter().sum::<f64>() - width).abs() < 1e-13 * (1.0 + width));
        }

        #[test]
        fn derivative_matrix_is_exact(n in 2usize..14, c in -2.0f64..2.0) {
            let (x, _) = lobatto_rule(n, -1.0, 1.0).unwrap();
            let d = differentiation_matrix(&x);
            let p = (n - 1) as i32;
            for k in 0..n {
                let num: f64 = (0..n).map(|j| d[k * n + j] * (x[j] + c).powi(p)).sum();
                let exact = p as f64 * (x[k] + c).powi(p - 1);
                prop_assert!((num - exact).abs() < 1e-9 * (1.0 + exact.abs()));
            }
        }
    }
}
