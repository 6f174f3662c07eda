use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("exponent must lie in {range}, got {p}")]
    Exponent { p: f64, range: &'static str },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("shooting failed to bracket the ground state: {0}")]
    Bracket(String),

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("factorisation failed: {0}")]
    Factorization(String),

    #[error("constraint set is rank deficient (pivot {pivot:e})")]
    RankDeficient { pivot: f64 },

    #[error("mass mismatch: relative error {rel:e} exceeds {tol:e}")]
    MassMismatch { rel: f64, tol: f64 },

    #[error("time step rejected: dt * max|V - |u|^2p| / eps = {phase:.3} > pi")]
    StepRejected { phase: f64 },

    #[error("modulation fit is not stationary (max orthogonality residual {0:e})")]
    NonStationaryFit(f64),

    #[error("no feasible D > 0: {0}")]
    Infeasible(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Exit-code class used by the command-line front end.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Exponent { .. } | Error::Json(_) | Error::Io(_)
        )
    }
}

/// Subcritical range `(0, 2/3)` required by the stability analysis.
pub(crate) fn check_subcritical(p: f64) -> Result<()> {
    if p > 0.0 && p < 2.0 / 3.0 {
        Ok(())
    } else {
        Err(Error::Exponent {
            p,
            range: "(0, 2/3)",
        })
    }
}

/// Range `(0, 2)` in which the classical soliton exists in three dimensions.
pub(crate) fn check_nls_exponent(p: f64) -> Result<()> {
    if p > 0.0 && p < 2.0 {
        Ok(())
    } else {
        Err(Error::Exponent { p, range: "(0, 2)" })
    }
}
