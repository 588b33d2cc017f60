//! Numerical core of an exterior-time-scaling (ETS) solver for the radial
//! time-dependent Schrödinger equation of a one-electron atom driven by a
//! linearly polarized laser pulse.
//!
//! The radial coordinate is discretized with a finite-element DVR basis on
//! `[0, xi_max]`. Beyond the scaling surface `r_sigma` the coordinate is
//! stretched by a time-dependent factor `R(t)` so that outgoing wave packets
//! never reach the edge of the box, while the region around the nucleus is
//! left untouched. The resulting Hermitian generator is propagated with an
//! adaptive short-time Lanczos scheme; high-energy eigenvectors of the
//! field-free inner blocks can be projected out to remove the centrifugal
//! stiffness that otherwise dominates the Krylov dimension.
//!
//! Setting `r_sigma = 0` gives global time scaling, and `R_inf = 0` gives the
//! ordinary fixed-grid equations.
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `parallel` feature to
//! apply the Hamiltonian block-parallel over angular momenta with rayon.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod angular;
pub mod error;
pub mod grid;
pub mod ground;
pub mod hamiltonian;
pub mod linalg;
pub mod observables;
pub mod propagator;
pub mod pulse;
pub mod scaling;
pub mod state;
pub mod stiffness;

pub use error::{Error, Result};

/// Double-precision complex scalar used for all wave-function coefficients.
pub type C64 = num_complex::Complex64;

pub use angular::AngularCoupling;
pub use grid::{BasisClass, GridSpec, RadialGrid};
pub use hamiltonian::{Gauge, Hamiltonian, HermitianOperator, TimeFactors};
pub use propagator::{LanczosPropagator, StepReport};
pub use pulse::{PulseShape, PulseSpec};
pub use scaling::{Scale, ScalingSchedule};
pub use state::StateVector;
pub use stiffness::{FilterSpec, StiffnessFilter};
