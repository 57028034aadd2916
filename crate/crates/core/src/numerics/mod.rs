//! Grids, finite-difference kernels and the linear solvers used by every
//! other module.

mod dense;
mod diff;
mod fit;
mod grid;
mod sparse;
mod tridiag;

pub use dense::DenseLu;
pub use diff::{d1_central, d2_central};
pub use fit::{fit_exponential_rate, ExponentialFit};
pub use grid::{Grid1D, Grid2D};
pub(crate) use sparse::solve_factored;
pub use sparse::{solve_sparse, BandedLu, CsrMatrix, SparseSystem, DEFAULT_SOLVER_TOL};
pub use tridiag::solve_tridiagonal;
