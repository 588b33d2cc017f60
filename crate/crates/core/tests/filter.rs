mod common;

use ets_core::grid::build_grid;
use ets_core::pulse::{Gauge, PulseShape, PulseSpec};
use ets_core::stiffness::inner_blocks;
use ets_core::{
    AngularCoupling, FilterSpec, GridSpec, Hamiltonian, ScalingSchedule, StiffnessFilter,
};
use nalgebra::{DMatrix, SymmetricEigen};

fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

// The filtered corner has the retained part of the original spectrum and
// zeros in place of the removed eigenvalues.
#[test]
fn filtered_corner_keeps_the_low_spectrum() {
    let grid = build_grid(GridSpec::uniform(10, 40, 0, 1.5).unwrap()).unwrap();
    let ang = AngularCoupling::new(30);
    let spec = FilterSpec {
        n_fe_filter: 10,
        e_cut: 900.0,
    };
    let f = StiffnessFilter::build(&grid, &ang, Gauge::Length, spec).unwrap();
    let n = f.n_filter;
    assert_eq!(n, 89);
    let blocks = inner_blocks(&grid, 30, 10).unwrap();
    for l in [0usize, 5, 12, 30] {
        let full = sorted_eigenvalues(DMatrix::from_row_slice(n, n, &blocks[l]));
        let kept: Vec<f64> = full.iter().copied().filter(|&e| e <= 900.0).collect();
        match f.h_tilde(l) {
            None => assert_eq!(kept.len(), n, "l = {l} should be untouched"),
            Some(h) => {
                let mut want = kept.clone();
                want.extend(std::iter::repeat(0.0).take(n - kept.len()));
                want.sort_by(|a, b| a.total_cmp(b));
                let got = sorted_eigenvalues(DMatrix::from_row_slice(n, n, h));
                for (a, b) in got.iter().zip(&want) {
                    assert!(
                        (a - b).abs() < 1e-9 * b.abs().max(1.0),
                        "l = {l}: {a} vs {b}"
                    );
                }
            }
        }
    }
}

#[test]
fn largest_centrifugal_eigenvalue_tracks_the_first_node() {
    let grid = build_grid(GridSpec::uniform(10, 40, 0, 1.5).unwrap()).unwrap();
    let x1 = grid.nodes[0];
    let blocks = inner_blocks(&grid, 200, 10).unwrap();
    let top = *sorted_eigenvalues(DMatrix::from_row_slice(89, 89, &blocks[200]))
        .last()
        .unwrap();
    let ratio = top / (200.0 * 201.0);
    let stiffness = 1.0 / (2.0 * x1 * x1);
    assert!(
        (ratio / stiffness - 1.0).abs() < 0.01,
        "{ratio} vs {stiffness}"
    );
}

fn full_scale(xi_max_elements: usize) -> Hamiltonian {
    let spec = GridSpec {
        r_sigma: 30.0,
        xi_max: 1.5 * (20 + xi_max_elements) as f64,
        n_dvr: 10,
        n_fe_inner: 20,
        n_fe_outer: xi_max_elements,
        delta_xi: 1.5,
    };
    let grid = build_grid(spec).unwrap();
    let ang = AngularCoupling::new(200);
    let pulse = PulseSpec::from_lab(3000.0, 1e14, 3.0, PulseShape::VectorPotential).unwrap();
    let gauge = Gauge::Velocity;
    let filter = StiffnessFilter::build(
        &grid,
        &ang,
        gauge,
        FilterSpec {
            n_fe_filter: 10,
            e_cut: 900.0,
        },
    )
    .unwrap();
    let mut h = Hamiltonian::new(grid, ang, ScalingSchedule::disabled(), pulse, gauge).unwrap();
    h.attach_filter(filter).unwrap();
    h
}

#[test]
fn nonzero_counts_of_the_large_runs() {
    let ets = full_scale(280);
    assert_eq!(ets.n_basis(), 2699);
    assert!(ets.filter().unwrap().is_identity(0) && ets.filter().unwrap().is_identity(1));
    assert!(!ets.filter().unwrap().is_identity(2));
    assert_eq!(ets.nnz(), 21_987_359);
    let plain = full_scale(1980);
    assert_eq!(plain.n_basis(), 17_999);
    assert_eq!(plain.nnz(), 123_135_659);
}

#[test]
fn global_scaling_rejects_the_filter() {
    let gts = build_grid(GridSpec::uniform(10, 0, 20, 1.5).unwrap()).unwrap();
    let ang = AngularCoupling::new(2);
    let spec = FilterSpec {
        n_fe_filter: 5,
        e_cut: 900.0,
    };
    assert!(StiffnessFilter::build(&gts, &ang, Gauge::Length, spec).is_err());
}

#[test]
fn too_narrow_a_window_trips_the_localization_check() {
    // a single-element window at large l: removed states reach its edge
    let grid = build_grid(GridSpec::uniform(10, 40, 0, 1.5).unwrap()).unwrap();
    let ang = AngularCoupling::new(40);
    let r = StiffnessFilter::build(
        &grid,
        &ang,
        Gauge::Length,
        FilterSpec {
            n_fe_filter: 1,
            e_cut: 2.0,
        },
    );
    assert!(
        matches!(r, Err(ets_core::Error::FilterLocalization { .. })),
        "{r:?}"
    );
}

// Every corner block of the filtered matrix is the unfiltered one sandwiched
// between projectors on the retained eigenvectors of the field-free blocks.
#[test]
fn filtered_matrix_is_the_projected_matrix() {
    use ets_core::hamiltonian::TimeFactors;
    use ets_core::scaling::Scale;
    use ets_core::{HermitianOperator, C64};

    let grid = build_grid(GridSpec::uniform(6, 5, 2, 1.0).unwrap()).unwrap();
    let l_max = 4;
    let ang = AngularCoupling::new(l_max);
    let spec = FilterSpec {
        n_fe_filter: 3,
        e_cut: 40.0,
    };
    let c = spec.n_filter(6);
    let n = grid.n_basis();
    let blocks = inner_blocks(&grid, l_max, 3).unwrap();
    let projector = |l: usize| -> DMatrix<C64> {
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(c, c, &blocks[l]));
        let mut p = DMatrix::<C64>::zeros(c, c);
        for k in 0..c {
            if eig.eigenvalues[k] <= spec.e_cut {
                let u = eig.eigenvectors.column(k);
                for i in 0..c {
                    for j in 0..c {
                        p[(i, j)] += C64::new(u[i] * u[j], 0.0);
                    }
                }
            }
        }
        p
    };
    let pulse = PulseSpec::new(0.5, 0.01, 2.0, PulseShape::VectorPotential).unwrap();
    for gauge in [Gauge::Length, Gauge::Velocity] {
        let filter = StiffnessFilter::build_unchecked(&grid, &ang, gauge, spec).unwrap();
        assert!((0..=l_max).any(|l| !filter.is_identity(l)));
        let mut h = Hamiltonian::new(
            grid.clone(),
            ang.clone(),
            ScalingSchedule::disabled(),
            pulse,
            gauge,
        )
        .unwrap();
        h.set_factors(TimeFactors {
            t: 0.0,
            scale: Scale {
                r: 1.3,
                r_dot: 0.1,
                r_ddot: 0.02,
            },
            field: 0.07,
            potential: 0.45,
        });
        let d = h.dim();
        let mut want = DMatrix::from_row_slice(d, d, &h.to_dense());
        h.attach_filter(filter.clone()).unwrap();
        let got = DMatrix::from_row_slice(d, d, &h.to_dense());
        for l in 0..=l_max {
            for lp in l.saturating_sub(1)..=(l + 1).min(l_max) {
                let touched = !filter.is_identity(l) || !filter.is_identity(lp);
                if !touched {
                    continue;
                }
                let blk = want.view((l * n, lp * n), (c, c)).clone_owned();
                let proj = projector(l) * blk * projector(lp);
                want.view_mut((l * n, lp * n), (c, c)).copy_from(&proj);
            }
        }
        let err = (got - want).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-11, "{gauge:?}: {err:e}");
    }
}
