//! Ground state `r` of `-½(1 + ∫|∇u|²) Δu + u = |u|^{2p} u`.
//!
//! Two independent constructions: rescaling the classical soliton
//! `-ΔQ + Q = Q^{2p+1}` by `r(x) = Q(x/√d)`, and a mass-constrained
//! gradient flow on the energy.

mod flow;
mod shooting;

pub use flow::{
    multistart_profiles, solve_constrained_flow, FlowOptions, FlowStats, UniquenessObservation,
};

use num_traits::Float;
use serde::Serialize;

use crate::error::{check_nls_exponent, check_subcritical, Error, Result};
use crate::functional::{energy, Integrals};
use crate::linalg::{BandLu, SymBand};
use crate::radial::{self, neg_laplacian, stiffness, RadialGrid, RadialProfile};
use crate::scalar::{cst, max_abs, Real};

/// Tolerance floor that respects the scalar's precision.
pub(crate) fn precision_floor<T: Real>(base: f64) -> f64 {
    base.max(1e4 * T::epsilon().as_f64())
}

/// `|u|^{2p} u`
#[inline]
pub(crate) fn nonlinearity<T: Real>(u: T, p: T) -> T {
    Float::abs(u).powf(cst::<T>(2.0) * p) * u
}

/// Classical soliton `-ΔQ + λQ = Q^{2p+1}`.
#[derive(Clone, Debug)]
pub struct NlsProfile<T> {
    pub profile: RadialProfile<T>,
    pub p: T,
    pub lambda: T,
    /// `‖∇Q‖₂²`
    pub gnorm2: T,
    /// `‖Q‖₂²`
    pub mass2: T,
    /// `‖Q‖_{2p+2}^{2p+2}`
    pub lp_norm: T,
    /// Max-norm of the discrete equation residual.
    pub residual: T,
}

/// The Kirchhoff ground state with its cached scalars.
#[derive(Clone, Debug)]
pub struct GroundState<T> {
    pub r: RadialProfile<T>,
    pub p: T,
    /// `G = ‖∇r‖₂²`
    pub gnorm2: T,
    /// `‖r‖₂²`
    pub mass2: T,
    /// `‖r‖_{2p+2}^{2p+2}`
    pub lp_norm: T,
    pub energy: T,
    /// `d = ½(1 + G)`, the squared rescaling factor.
    pub d: T,
    /// Linear coefficient recovered from stationarity (1 for a solution of the limit problem).
    pub lambda0: T,
}

impl<T: Real> GroundState<T> {
    /// Wraps a profile, recomputing every cached scalar.
    pub fn from_profile(r: RadialProfile<T>, p: T) -> Result<Self> {
        check_subcritical(p.as_f64())?;
        let two = cst::<T>(2.0);
        let gnorm2 = r.grad_sq();
        let mass2 = r.mass();
        let lp_norm = r.lp_integral(two * p + two);
        let half = cst::<T>(0.5);
        let d = half * (T::one() + gnorm2);
        let lambda0 = (lp_norm - d * gnorm2) / mass2;
        Ok(GroundState {
            energy: energy(&r, p),
            r,
            p,
            gnorm2,
            mass2,
            lp_norm,
            d,
            lambda0,
        })
    }

    pub fn grid(&self) -> &RadialGrid<T> {
        self.r.grid()
    }

    /// `√d`, the length unit of `r`.
    pub fn length_scale(&self) -> T {
        self.d.sqrt()
    }

    /// `½ (1 + G)`, the Kirchhoff diffusion coefficient at `r`.
    pub fn diffusion(&self) -> T {
        self.d
    }

    /// Largest radius at which `r` drops to half of `r(0)`.
    pub fn half_width(&self) -> T {
        let v = self.r.values();
        let half = v[0] * cst(0.5);
        let i = v.iter().position(|&x| x < half).unwrap_or(v.len() - 1);
        self.grid().node(i)
    }
}

/// Solves `-ΔQ + Q = Q^{2p+1}` by shooting followed by Newton on the discrete problem.
pub fn solve_nls_soliton<T: Real>(p: T, grid: &RadialGrid<T>) -> Result<NlsProfile<T>> {
    solve_nls_soliton_lambda(p, T::one(), grid)
}

pub fn solve_nls_soliton_lambda<T: Real>(
    p: T,
    lambda: T,
    grid: &RadialGrid<T>,
) -> Result<NlsProfile<T>> {
    check_nls_exponent(p.as_f64())?;
    if !(lambda > T::zero()) {
        return Err(Error::Invalid(format!(
            "linear coefficient must be positive, got {lambda}"
        )));
    }
    let (_, guess) = shooting::shooting_profile(
        p.as_f64(),
        lambda.as_f64(),
        grid.spacing().as_f64(),
        grid.len(),
    )?;
    let guess: Vec<T> = guess.into_iter().map(cst).collect();
    let q = newton_polish(guess, p, lambda, T::one(), grid)?;
    let profile = RadialProfile::new(*grid, q)?;
    let residual = nls_residual(&profile, p, lambda, T::one());
    let tol = precision_floor::<T>(1e-8);
    if residual.as_f64() > tol {
        return Err(Error::NonConvergence {
            what: "soliton Newton polish",
            iterations: 40,
            residual: residual.as_f64(),
        });
    }
    let two = cst::<T>(2.0);
    Ok(NlsProfile {
        gnorm2: profile.grad_sq(),
        mass2: profile.mass(),
        lp_norm: profile.lp_integral(two * p + two),
        profile,
        p,
        lambda,
        residual,
    })
}

/// Max-norm of `-a ΔQ + λQ - |Q|^{2p}Q`.
pub(crate) fn nls_residual<T: Real>(q: &RadialProfile<T>, p: T, lambda: T, a: T) -> T {
    let lap = neg_laplacian(q, 0);
    let res: Vec<T> = lap
        .iter()
        .zip(q.values())
        .map(|(&l, &v)| a * l + lambda * v - nonlinearity(v, p))
        .collect();
    max_abs(&res)
}

/// Newton iteration for `a K q + W(λ q - |q|^{2p} q) = 0` with fixed `a`.
fn newton_polish<T: Real>(
    mut q: Vec<T>,
    p: T,
    lambda: T,
    a: T,
    grid: &RadialGrid<T>,
) -> Result<Vec<T>> {
    let k = stiffness(grid, 0).scaled(a);
    let w = grid.weights();
    let two = cst::<T>(2.0);
    let c = two * p + T::one();
    let mut last_step = T::infinity();
    for _ in 0..40 {
        let kq = k.matvec(&q);
        let f: Vec<T> = (0..q.len())
            .map(|i| -(kq[i] + w[i] * (lambda * q[i] - nonlinearity(q[i], p))))
            .collect();
        let diag: Vec<T> = (0..q.len())
            .map(|i| w[i] * (lambda - c * Float::abs(q[i]).powf(two * p)))
            .collect();
        let mut jac: SymBand<T> = k.clone();
        jac.add_diagonal(&diag);
        let step = BandLu::from_sym(&jac)?.solve(&f);
        for (x, s) in q.iter_mut().zip(&step) {
            *x = *x + *s;
        }
        let size = max_abs(&step) / max_abs(&q);
        if size < T::epsilon() * cst(64.0) || (size >= last_step && size < cst(1e-10)) {
            break;
        }
        last_step = size;
    }
    Ok(q)
}

/// `√d = ½(½ g + √(¼ g² + 2))` for `g = ‖∇Q‖₂²`.
pub fn sqrt_d_from_gnorm<T: Real>(g: T) -> T {
    let half = cst::<T>(0.5);
    let quarter = cst::<T>(0.25);
    half * (half * g + (quarter * g * g + cst(2.0)).sqrt())
}

/// `r(ρ) = Q(ρ/√d)`: the same samples on the grid stretched by `√d`.
pub fn rescale_to_kirchhoff<T: Real>(q: &NlsProfile<T>) -> Result<GroundState<T>> {
    if Float::abs(q.lambda - T::one()) > T::epsilon() * cst(8.0) {
        return Err(Error::Invalid("rescaling needs the λ = 1 soliton".into()));
    }
    let sd = sqrt_d_from_gnorm(q.gnorm2);
    let grid = q.profile.grid().stretched(sd)?;
    GroundState::from_profile(q.profile.regrid(grid)?, q.p)
}

/// Relative defect of `d = ½ + ½ √d g`.
pub fn d_identity_defect<T: Real>(g: T) -> T {
    let sd = sqrt_d_from_gnorm(g);
    let d = sd * sd;
    let half = cst::<T>(0.5);
    Float::abs(d - (half + half * sd * g)) / d
}

/// Max-norm of `-½(1 + G) Δr + r - |r|^{2p} r`.
pub fn residual_lim<T: Real>(gs: &GroundState<T>) -> T {
    let g = radial::grad_sq(&gs.r);
    nls_residual(&gs.r, gs.p, T::one(), cst::<T>(0.5) * (T::one() + g))
}

#[derive(Clone, Debug, Serialize)]
pub struct PohozaevReport {
    /// `|½(1+G)G + M - P| / P`
    pub nehari_rel: f64,
    /// `|E - ((3/2 - 5/(2p+2)) P - ¼G²)| / |E|`
    pub energy_rel: f64,
    pub energy: f64,
    /// `e < 0`
    pub energy_negative: bool,
    /// `e < -¼ G² < 0`
    pub chain_holds: bool,
}

pub fn pohozaev_report<T: Real>(gs: &GroundState<T>) -> PohozaevReport {
    let p = gs.p.as_f64();
    let g = gs.gnorm2.as_f64();
    let m = gs.mass2.as_f64();
    let pl = gs.lp_norm.as_f64();
    let e = gs.energy.as_f64();
    let nehari = 0.5 * (1.0 + g) * g + m;
    let predicted = (1.5 - 5.0 / (2.0 * p + 2.0)) * pl - 0.25 * g * g;
    PohozaevReport {
        nehari_rel: (nehari - pl).abs() / pl,
        energy_rel: (e - predicted).abs() / e.abs(),
        energy: e,
        energy_negative: e < 0.0,
        chain_holds: e < -0.25 * g * g && -0.25 * g * g < 0.0,
    }
}

/// Classical Pohozaev defect `|½g + (3/2)M - 3/(2p+2) P| / P` of a λ = 1 soliton.
pub fn soliton_pohozaev_defect<T: Real>(q: &NlsProfile<T>) -> f64 {
    let p = q.p.as_f64();
    let lhs = 0.5 * q.gnorm2.as_f64() + 1.5 * q.lambda.as_f64() * q.mass2.as_f64();
    let rhs = 3.0 / (2.0 * p + 2.0) * q.lp_norm.as_f64();
    (lhs - rhs).abs() / rhs
}

/// `‖u_λ‖₂²` of the Kirchhoff-rescaled member of the λ-family.
pub fn mass_of_lambda<T: Real>(lambda: T, qbar: &NlsProfile<T>) -> Result<T> {
    check_subcritical(qbar.p.as_f64())?;
    if !(lambda > T::zero()) {
        return Err(Error::Invalid(format!("λ must be positive, got {lambda}")));
    }
    let p = qbar.p;
    let g = qbar.gnorm2;
    let one = T::one();
    let half = cst::<T>(0.5);
    let a = lambda.powf(one / p - half);
    let b = lambda.powf(cst::<T>(2.0) / p - one);
    let inner = half * a * g + (cst::<T>(0.25) * b * g * g + cst(2.0)).sqrt();
    Ok(inner.powi(3) / cst(8.0) * lambda.powf(one / p - cst(1.5)) * qbar.mass2)
}

#[cfg(test)]
mod tests;
