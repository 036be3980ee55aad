//! Error type shared across the crate.

use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors reported by the solvers and assembly routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter left its mathematical domain (`theta >= 1`,
    /// `lambda <= 0`, even or too-small grids, ...).
    Domain(&'static str),
    /// Two profiles that must share a grid do not.
    GridMismatch,
    /// A matrix handed to `matrix_to_components` violates the required
    /// shape (symmetric, traceless, zero (1,2)/(1,3) entries) beyond the
    /// stated tolerance; carries the worst defect.
    MatrixShape { defect: f64 },
    /// An iterative solve ran out of iterations or stalled.
    NonConvergence { iterations: usize, residual: f64 },
    /// The eigenvalue solver could not certify an eigenpair.
    Eigen(&'static str),
    /// A bisection bracket does not contain a sign change.
    Bracket(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::GridMismatch => write!(f, "profiles live on different grids"),
            Error::MatrixShape { defect } => {
                write!(f, "matrix violates the admissible shape (defect {defect:e})")
            }
            Error::NonConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "solver did not converge after {iterations} iterations (residual {residual:e})"
            ),
            Error::Eigen(msg) => write!(f, "eigenvalue solver failed: {msg}"),
            Error::Bracket(msg) => write!(f, "bracket error: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
