use core::fmt;

use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A grid, filter or solver parameter violates its invariants.
    InvalidSpec(String),
    /// A multiplicative operator is not finite at a quadrature node.
    Singularity { node: usize, xi: f64 },
    /// Incompatible combination of options (gauge vs. pulse shape, GTS with filtering, ...).
    Configuration(String),
    /// Vector or block sizes disagree.
    DimensionMismatch { expected: usize, found: usize },
    /// A coordinate lies outside the region where an operation is defined.
    Domain(String),
    /// A removed high-energy eigenvector leaks into the last element of the filter window.
    FilterLocalization {
        ell: usize,
        index: usize,
        energy: f64,
        edge_fraction: f64,
    },
    /// The Krylov dimension reached its cap before the error criterion was met.
    Stiffness { k: usize, error_estimate: f64 },
    /// An iterative eigen-solver did not converge.
    NonConvergence(String),
    /// NaN or infinity appeared in a numerical result.
    Numerical(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSpec(msg) => write!(f, "invalid specification: {msg}"),
            Error::Singularity { node, xi } => {
                write!(f, "operator is not finite at node {node} (xi = {xi})")
            }
            Error::Configuration(msg) => write!(f, "configuration error: {msg}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::Domain(msg) => write!(f, "out of domain: {msg}"),
            Error::FilterLocalization {
                ell,
                index,
                energy,
                edge_fraction,
            } => write!(
                f,
                "removed eigenvector (l = {ell}, n = {index}, e = {energy:.3}) has {:.1}% of its norm \
                 in the last filter element; increase the filter element count or the cutoff energy",
                edge_fraction * 100.0
            ),
            Error::Stiffness { k, error_estimate } => write!(
                f,
                "Krylov dimension reached {k} without meeting the error bound (estimate {error_estimate:e})"
            ),
            Error::NonConvergence(msg) => write!(f, "no convergence: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
