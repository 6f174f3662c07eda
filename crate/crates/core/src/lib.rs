//! Numerical laboratory for the focusing Kirchhoff-NLS limit problem
//!
//! ```text
//! -½ (1 + ∫|∇u|²) Δu + u = |u|^{2p} u   in ℝ³,  0 < p < 2/3
//! ```
//!
//! It builds the ground state `r`, the spectra of the linearised operators
//! `L₊`, `L₋`, phase/translation fits to the ground-state orbit, empirical
//! coercivity of the energy gap, and split-step dynamics of the
//! time-dependent equation.

// negated comparisons are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod coercivity;
pub mod config;
pub mod error;
pub mod evolution;
pub mod field3;
pub mod functional;
pub mod ground_state;
pub mod io;
pub mod linalg;
pub mod modulation;
pub mod radial;
pub mod scalar;
pub mod spectral;
pub mod verify;

pub use config::{parse_config, RunConfig};
pub use error::{Error, Result};
pub use scalar::Real;
pub use verify::{run_all, VerificationSummary};
