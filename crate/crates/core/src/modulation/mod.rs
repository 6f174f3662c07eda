//! Carrying the ground state onto a periodic box, and fitting arbitrary fields
//! to its orbit under translation and phase.

mod fit;
mod grid_state;
mod oracle;
mod perturb;

pub use fit::{fit_at, mod_distance, orthogonality_residuals, FitOptions, ModulationFit};
pub use grid_state::{embed_ground, GridGroundState, PolishOptions};
pub use oracle::{exhaustive_fit, OracleFit, OracleOptions};
pub use perturb::{perturbation_direction, sample_perturbation, PerturbationSpec};

#[cfg(test)]
mod tests;
