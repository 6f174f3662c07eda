//! Energy gap against orbital distance on the mass sphere.
//!
//! For `φ = e^{iγ}(r + w)(· - x₀)` with `‖φ‖₂ = ‖r‖₂`, the gap
//! `E(φ) - E(r)` equals `⟨L₊u,u⟩ + ⟨L₋v,v⟩` plus terms of order `‖w‖³`.

mod probe;
mod scan;

pub use probe::{quadratic_form_probe, ProbeFit, ProbeOptions, ProbeSample};
pub use scan::{
    geometric_amplitudes, remainder_scan, CoercivityRecord, CoercivityReport, ExponentFit,
    RatioTrend, ScanOptions,
};

use num_traits::Float;

use crate::error::{Error, Result};
use crate::field3::Field3;
use crate::functional::{energy, Integrals};
use crate::modulation::{orthogonality_residuals, GridGroundState, ModulationFit};
use crate::scalar::{cst, Real};

/// Relative mass mismatch tolerated by [`delta_energy`].
pub const MASS_TOL: f64 = 1e-8;

/// Orthogonality residual above which a fit is treated as non-stationary.
pub const STATIONARITY_TOL: f64 = 1e-6;

/// `E(φ) - E(r₃)` for `φ` on the mass sphere of `r₃`.
pub fn delta_energy<T: Real>(phi: &Field3<T>, gs: &GridGroundState<T>) -> Result<T> {
    phi.check_same_grid(&gs.field)?;
    let rel = (Float::abs(phi.mass() - gs.mass2) / gs.mass2).as_f64();
    if !(rel <= MASS_TOL) {
        return Err(Error::MassMismatch { rel, tol: MASS_TOL });
    }
    Ok(energy(phi, gs.p) - gs.energy)
}

/// `⟨L₊u,u⟩ + ⟨L₋v,v⟩` at a stationary modulation fit.
pub fn quadratic_model<T: Real>(fit: &ModulationFit<T>, gs: &GridGroundState<T>) -> Result<T> {
    let res = orthogonality_residuals(fit, gs)?;
    let worst = res
        .iter()
        .fold(0.0f64, |m, r| m.max(Float::abs(*r).as_f64()));
    if !(worst < STATIONARITY_TOL) {
        return Err(Error::NonStationaryFit(worst));
    }
    Ok(gs.quad_form(true, &fit.u.re())? + gs.quad_form(false, &fit.v.re())?)
}

/// Gradient part `J` of the Taylor remainder, evaluated at the intermediate
/// point `θ`.
pub fn gradient_remainder<T: Real>(
    fit: &ModulationFit<T>,
    gs: &GridGroundState<T>,
    theta: T,
) -> Result<T> {
    let half = cst::<T>(0.5);
    let gu = fit.u.grad_sq();
    let gv = fit.v.grad_sq();
    let ru = gs.field.grad_inner(&fit.u)?;
    let shifted = gs
        .field
        .axpy(num_complex::Complex::new(theta, T::zero()), &fit.u)?;
    let first = half * (shifted.grad_sq() + theta * theta * gv - gs.gnorm2) * (gu + gv);
    let b = theta * gu + theta * gv + ru;
    Ok(first + b * b - ru * ru)
}

#[cfg(test)]
mod tests;
