//! Dipole coupling between partial waves of a linearly polarized field (m = 0).

use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct AngularCoupling {
    pub l_max: usize,
    // up[l] = g_{l, l+1}
    up: Vec<f64>,
}

/// Builds `g_{l l'} = sqrt(4 pi / 3) <Y_l0 | Y_10 | Y_l'0>` for `l, l' <= l_max`.
pub fn coupling_table(l_max: usize) -> AngularCoupling {
    AngularCoupling::new(l_max)
}

impl AngularCoupling {
    pub fn new(l_max: usize) -> Self {
        let up = (0..l_max)
            .map(|l| {
                let lf = l as f64;
                (lf + 1.0) / libm::sqrt((2.0 * lf + 1.0) * (2.0 * lf + 3.0))
            })
            .collect();
        AngularCoupling { l_max, up }
    }

    pub fn n_blocks(&self) -> usize {
        self.l_max + 1
    }

    /// `g_{l l'}`; zero unless `|l - l'| = 1`.
    pub fn g(&self, l: usize, lp: usize) -> f64 {
        if l.abs_diff(lp) != 1 || l.max(lp) > self.l_max {
            return 0.0;
        }
        self.up[l.min(lp)]
    }
}

/// Evaluates `g_{l l'}` from its defining polar-angle integral,
/// `sqrt((2l+1)(2l'+1)) / 2 * int_{-1}^{1} x P_l(x) P_l'(x) dx`,
/// with a Gauss-Lobatto rule that is exact for the integrand.
pub fn coupling_by_quadrature(l: usize, lp: usize) -> f64 {
    let n = (l + lp + 1) / 2 + 3;
    let (x, w) = crate::grid::lobatto_rule(n, -1.0, 1.0).expect("n >= 3");
    let mut s = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        s += wi * xi * legendre(l, *xi) * legendre(lp, *xi);
    }
    0.5 * libm::sqrt(((2 * l + 1) * (2 * lp + 1)) as f64) * s
}

fn legendre(l: usize, x: f64) -> f64 {
    if l == 0 {
        return 1.0;
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=l {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_matches_quadrature() {
        let table = coupling_table(200);
        for l in 0usize..=200 {
            for lp in l.saturating_sub(2)..=(l + 2).min(200) {
                let q = coupling_by_quadrature(l, lp);
                assert!((table.g(l, lp) - q).abs() < 1e-12, "l = {l}, l' = {lp}");
            }
        }
        assert!((table.g(0, 1) - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((table.g(1, 2) - 2.0 / 15f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn selection_rule_symmetry_and_monotonicity() {
        let table = coupling_table(50);
        for l in 0..=50 {
            assert_eq!(table.g(l, l), 0.0);
            for lp in 0..=50 {
                assert_eq!(table.g(l, lp), table.g(lp, l));
            }
        }
        for l in 0..49 {
            let a = table.g(l, l + 1);
            let b = table.g(l + 1, l + 2);
            assert!(a > b && b > 0.5 && a < 1.0);
        }
        assert_eq!(table.g(50, 51), 0.0);
    }
}
