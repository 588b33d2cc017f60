//! Reference FEDVR built from first principles on an arbitrary partition of
//! physical space, with dense matrices. Shares no code with the library.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C;

fn legendre(n: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return 1.0;
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Gauss-Lobatto rule with `n` points on [-1, 1]; interior nodes are the
/// eigenvalues of the Jacobi(1,1) recurrence matrix.
pub fn lobatto(n: usize) -> (Vec<f64>, Vec<f64>) {
    let m = n - 2;
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for k in 1..m {
        let kf = k as f64;
        let b = (kf * (kf + 2.0) / ((2.0 * kf + 1.0) * (2.0 * kf + 3.0))).sqrt();
        jac[(k - 1, k)] = b;
        jac[(k, k - 1)] = b;
    }
    let mut x: Vec<f64> = if m > 0 {
        SymmetricEigen::new(jac)
            .eigenvalues
            .iter()
            .copied()
            .collect()
    } else {
        vec![]
    };
    x.push(-1.0);
    x.push(1.0);
    x.sort_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    let w = x
        .iter()
        .map(|&xi| 2.0 / (nf * (nf - 1.0) * legendre(n - 1, xi).powi(2)))
        .collect();
    (x, w)
}

/// `d[k][j] = L_j'(x_k)` from barycentric weights.
pub fn diff_matrix(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let lam: Vec<f64> = (0..n)
        .map(|j| {
            1.0 / (0..n)
                .filter(|&m| m != j)
                .map(|m| x[j] - x[m])
                .product::<f64>()
        })
        .collect();
    let mut d = vec![vec![0.0; n]; n];
    for k in 0..n {
        for j in 0..n {
            if j != k {
                d[k][j] = lam[j] / lam[k] / (x[k] - x[j]);
            }
        }
        d[k][k] = -(0..n).filter(|&j| j != k).map(|j| d[k][j]).sum::<f64>();
    }
    d
}

pub struct Fedvr {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `int chi_i' chi_j'`
    pub kin: DMatrix<f64>,
    /// `int chi_i chi_j'`
    pub der: DMatrix<f64>,
}

/// Normalized FEDVR functions on the partition `bounds`, with the functions
/// at both ends dropped.
pub fn fedvr(bounds: &[f64], n_dvr: usize) -> Fedvr {
    let (x, w) = lobatto(n_dvr);
    let d = diff_matrix(&x);
    let n_fe = bounds.len() - 1;
    let n_raw = (n_dvr - 1) * n_fe + 1;
    let mut nodes = vec![0.0; n_raw];
    let mut weights = vec![0.0; n_raw];
    let mut kin = DMatrix::<f64>::zeros(n_raw, n_raw);
    let mut der = DMatrix::<f64>::zeros(n_raw, n_raw);
    for e in 0..n_fe {
        let (a, b) = (bounds[e], bounds[e + 1]);
        let h = 0.5 * (b - a);
        let off = e * (n_dvr - 1);
        for q in 0..n_dvr {
            nodes[off + q] = a + h * (1.0 + x[q]);
            weights[off + q] += h * w[q];
        }
        for i in 0..n_dvr {
            for j in 0..n_dvr {
                let mut k = 0.0;
                for q in 0..n_dvr {
                    k += h * w[q] * (d[q][i] / h) * (d[q][j] / h);
                }
                kin[(off + i, off + j)] += k;
                // chi_i chi_j' at the nodes: only q = i survives
                der[(off + i, off + j)] += h * w[i] * d[i][j] / h;
            }
        }
    }
    let keep = 1..n_raw - 1;
    let n = n_raw - 2;
    let mut f = Fedvr {
        nodes: nodes[keep.clone()].to_vec(),
        weights: weights[keep.clone()].to_vec(),
        kin: DMatrix::zeros(n, n),
        der: DMatrix::zeros(n, n),
    };
    for i in 0..n {
        for j in 0..n {
            let s = 1.0 / (f.weights[i] * f.weights[j]).sqrt();
            f.kin[(i, j)] = kin[(i + 1, j + 1)] * s;
            f.der[(i, j)] = der[(i + 1, j + 1)] * s;
        }
    }
    f
}

pub fn coupling(l: usize) -> f64 {
    let lf = (l + 1) as f64;
    lf / ((2.0 * lf - 1.0) * (2.0 * lf + 1.0)).sqrt()
}

#[derive(Clone, Copy)]
pub enum Interaction {
    Length(f64),
    Velocity(f64),
}

/// Dense atomic Hamiltonian on the physical grid, `l = 0..=l_max`.
pub fn hamiltonian(f: &Fedvr, l_max: usize, int: Interaction) -> DMatrix<C> {
    let n = f.nodes.len();
    let nb = l_max + 1;
    let mut h = DMatrix::<C>::zeros(nb * n, nb * n);
    for l in 0..nb {
        let lf = l as f64;
        for i in 0..n {
            for j in 0..n {
                h[(l * n + i, l * n + j)] = C::new(0.5 * f.kin[(i, j)], 0.0);
            }
            let r = f.nodes[i];
            h[(l * n + i, l * n + i)] += C::new(lf * (lf + 1.0) / (2.0 * r * r) - 1.0 / r, 0.0);
        }
    }
    for l in 0..l_max {
        let g = coupling(l);
        // block (l, l+1); the (l+1, l) block is its adjoint
        let mut blk = DMatrix::<C>::zeros(n, n);
        match int {
            Interaction::Length(field) => {
                for i in 0..n {
                    blk[(i, i)] = C::new(field * g * f.nodes[i], 0.0);
                }
            }
            Interaction::Velocity(a) => {
                // -i A <l| d/dz |l+1> acting on u = r R: g (d/dr + (l+1)/r)
                for i in 0..n {
                    for j in 0..n {
                        let mut v = f.der[(i, j)];
                        if i == j {
                            v += (l + 1) as f64 / f.nodes[i];
                        }
                        blk[(i, j)] = C::new(0.0, -a * g * v);
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                h[(l * n + i, (l + 1) * n + j)] = blk[(i, j)];
                h[((l + 1) * n + j, l * n + i)] = blk[(i, j)].conj();
            }
        }
    }
    h
}

/// `exp(-i H dt) v` for Hermitian `H`.
pub fn exp_apply(h: &DMatrix<C>, v: &DVector<C>, dt: f64) -> DVector<C> {
    let eig = SymmetricEigen::new(h.clone());
    let u = &eig.eigenvectors;
    let mut c = u.adjoint() * v;
    for (k, ck) in c.iter_mut().enumerate() {
        *ck *= C::from_polar(1.0, -eig.eigenvalues[k] * dt);
    }
    u * c
}

pub fn dense_from_flat(n: usize, flat: &[C]) -> DMatrix<C> {
    DMatrix::from_row_slice(n, n, flat)
}
