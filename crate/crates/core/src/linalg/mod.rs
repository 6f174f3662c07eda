//! Banded and small dense linear algebra used by the radial solvers.

mod band;
mod dense;
mod lanczos;

pub use band::{BandCholesky, BandLu, SymBand};
pub use dense::{solve_dense, tridiagonal_eigen};
pub use lanczos::{check_constraint_rank, lowest_eigenpairs, EigenPair, LanczosOptions, RankOne};
