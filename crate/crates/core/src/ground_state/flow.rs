//! Mass-constrained descent on the energy.
//!
//! Each step moves along the projected gradient `aKu + W(λu - |u|^{2p}u)`
//! (with `λ` the stationarity multiplier, so the direction is tangent to the
//! mass sphere), preconditioned by `aK + W`, then renormalises the mass. Steps
//! that raise the energy are rejected and the step length halved.

use num_traits::Float;
use serde::Serialize;

use super::{nonlinearity, precision_floor, GroundState};
use crate::error::{check_subcritical, Error, Result};
use crate::functional::{energy, Integrals};
use crate::linalg::SymBand;
use crate::radial::{stiffness, RadialGrid, RadialProfile};
use crate::scalar::{cst, max_abs, Real};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FlowOptions {
    /// Stop once the sup-norm of the projected gradient is below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Width of the initial Gaussian as a fraction of the grid radius.
    pub initial_width: f64,
    pub initial_step: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            tol: 1e-9,
            max_iter: 20_000,
            initial_width: 1.0 / 6.0,
            initial_step: 0.5,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowStats {
    pub iterations: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub residual: f64,
    pub lambda: f64,
    /// Energy after every accepted step (starting with the initial guess).
    pub energies: Vec<f64>,
    /// Round-off level of the energy evaluation at the final iterate.
    pub energy_slack: f64,
}

struct State<T> {
    u: Vec<T>,
    energy: T,
    lambda: T,
    /// `aKu + W(λu - f(u))`
    grad: Vec<T>,
    a: T,
    slack: T,
    residual: T,
}

fn evaluate<T: Real>(u: Vec<T>, k: &SymBand<T>, k_abs: &SymBand<T>, w: &[T], p: T) -> State<T> {
    let ku = k.matvec(&u);
    let u_abs: Vec<T> = u.iter().map(|&x| Float::abs(x)).collect();
    let g_abs: T = u_abs
        .iter()
        .zip(&k_abs.matvec(&u_abs))
        .map(|(&x, &y)| x * y)
        .sum();
    let g: T = u.iter().zip(&ku).map(|(&x, &y)| x * y).sum();
    let m: T = u.iter().zip(w).map(|(&x, &wi)| wi * x * x).sum();
    let fu: Vec<T> = u.iter().map(|&x| nonlinearity(x, p)).collect();
    let pl: T = u
        .iter()
        .zip(&fu)
        .zip(w)
        .map(|((&x, &f), &wi)| wi * x * f)
        .sum();
    let a = cst::<T>(0.5) * (T::one() + g);
    let lambda = (pl - a * g) / m;
    let grad: Vec<T> = (0..u.len())
        .map(|i| a * ku[i] + w[i] * (lambda * u[i] - fu[i]))
        .collect();
    let quarter = cst::<T>(0.25);
    let half = cst::<T>(0.5);
    let e = half * g + quarter * g * g - pl / (p + T::one());
    // G = uᵀKu is a sum with heavy cancellation; its round-off feeds into ¼G²
    let scale = half * g + quarter * g * g + pl / (p + T::one()) + (half + half * g) * g_abs;
    State {
        u,
        energy: e,
        lambda,
        residual: sup_residual(&grad, w),
        grad,
        a,
        slack: scale * T::epsilon() * cst(64.0),
    }
}

fn normalise<T: Real>(u: &mut [T], w: &[T], mass_target: T) {
    let m: T = u.iter().zip(w).map(|(&x, &wi)| wi * x * x).sum();
    let s = mass_target / m.sqrt();
    u.iter_mut().for_each(|x| *x = *x * s);
}

fn sup_residual<T: Real>(grad: &[T], w: &[T]) -> T {
    grad.iter()
        .zip(w)
        .fold(T::zero(), |m, (&g, &wi)| m.max(Float::abs(g / wi)))
}

/// Minimises the energy on `{‖u‖₂ = mass_target}` starting from a Gaussian.
pub fn solve_constrained_flow<T: Real>(
    p: T,
    mass_target: T,
    grid: &RadialGrid<T>,
    opts: &FlowOptions,
) -> Result<(GroundState<T>, FlowStats)> {
    let width = grid.radius() * cst(opts.initial_width);
    let guess = RadialProfile::from_fn(*grid, |r| {
        (-(r * r) / (cst::<T>(2.0) * width * width)).exp()
    })?;
    solve_constrained_flow_from(p, mass_target, guess, opts)
}

/// As [`solve_constrained_flow`], from a caller-supplied starting profile.
pub fn solve_constrained_flow_from<T: Real>(
    p: T,
    mass_target: T,
    start: RadialProfile<T>,
    opts: &FlowOptions,
) -> Result<(GroundState<T>, FlowStats)> {
    check_subcritical(p.as_f64())?;
    if !(mass_target > cst(1e-6)) {
        return Err(Error::Invalid(format!(
            "mass target must exceed 1e-6, got {mass_target}"
        )));
    }
    let grid = *start.grid();
    let k = stiffness(&grid, 0);
    let k_abs = k.abs_entries();
    let w = grid.weights();
    let mut u = start.into_values();
    normalise(&mut u, &w, mass_target);
    let mut state = evaluate(u, &k, &k_abs, &w, p);
    let tol = cst::<T>(precision_floor::<T>(opts.tol));
    let mut tau = cst::<T>(opts.initial_step);
    let tau_max = cst::<T>(1.0);
    let mut stats = FlowStats {
        iterations: 0,
        accepted: 0,
        rejected: 0,
        residual: f64::NAN,
        lambda: f64::NAN,
        energies: vec![state.energy.as_f64()],
        energy_slack: state.slack.as_f64(),
    };
    let mut precond_a = T::nan();
    let mut chol = None;
    for it in 0..opts.max_iter {
        stats.iterations = it + 1;
        let res = state.residual;
        stats.residual = res.as_f64();
        if res < tol {
            break;
        }
        // refactor only when the diffusion coefficient has moved noticeably
        if chol.is_none() || Float::abs(state.a - precond_a) > cst::<T>(1e-3) * state.a {
            let pre = k
                .scaled(state.a)
                .add_scaled(T::one(), &SymBand::diagonal(&w));
            chol = Some(pre.cholesky()?);
            precond_a = state.a;
        }
        let dir = chol.as_ref().unwrap().solve(&state.grad);
        let mut trial: Vec<T> = state
            .u
            .iter()
            .zip(&dir)
            .map(|(&x, &d)| x - tau * d)
            .collect();
        normalise(&mut trial, &w, mass_target);
        let next = evaluate(trial, &k, &k_abs, &w, p);
        // below the round-off level of E, fall back to the gradient norm
        let decreased = next.energy < state.energy - state.slack
            || (next.energy <= state.energy + state.slack && next.residual < state.residual);
        if decreased {
            state = next;
            stats.accepted += 1;
            stats.energies.push(state.energy.as_f64());
            tau = (tau * cst(1.25)).min(tau_max);
        } else {
            stats.rejected += 1;
            tau = tau * cst(0.5);
            if tau < cst(1e-14) {
                return Err(Error::NonConvergence {
                    what: "constrained gradient flow (step collapsed)",
                    iterations: it + 1,
                    residual: res.as_f64(),
                });
            }
        }
    }
    let res = state.residual;
    stats.residual = res.as_f64();
    stats.energy_slack = state.slack.as_f64();
    stats.lambda = state.lambda.as_f64();
    if !(res < tol) {
        return Err(Error::NonConvergence {
            what: "constrained gradient flow",
            iterations: stats.iterations,
            residual: res.as_f64(),
        });
    }
    let profile = RadialProfile::new(grid, state.u)?;
    debug_assert!(energy(&profile, p).is_finite() && profile.mass() > T::zero());
    let gs = GroundState::from_profile(profile, p)?;
    Ok((gs, stats))
}

/// Flows from several initial widths to probe for distinct constrained minimisers.
#[derive(Clone, Debug, Serialize)]
pub struct UniquenessObservation {
    pub widths: Vec<f64>,
    pub energies: Vec<f64>,
    /// Largest sup-norm distance between any profile and the first one.
    pub max_sup_difference: f64,
    pub distinct_found: bool,
}

pub fn multistart_profiles<T: Real>(
    p: T,
    mass_target: T,
    grid: &RadialGrid<T>,
    widths: &[f64],
    opts: &FlowOptions,
) -> Result<UniquenessObservation> {
    let mut profiles: Vec<GroundState<T>> = Vec::new();
    for &wd in widths {
        let o = FlowOptions {
            initial_width: wd,
            ..*opts
        };
        profiles.push(solve_constrained_flow(p, mass_target, grid, &o)?.0);
    }
    let first = profiles[0].r.values().to_vec();
    let max_diff = profiles
        .iter()
        .map(|g| {
            let d: Vec<T> =
                g.r.values()
                    .iter()
                    .zip(&first)
                    .map(|(&a, &b)| a - b)
                    .collect();
            max_abs(&d).as_f64()
        })
        .fold(0.0, f64::max);
    let scale = max_abs(&first).as_f64();
    Ok(UniquenessObservation {
        widths: widths.to_vec(),
        energies: profiles.iter().map(|g| g.energy.as_f64()).collect(),
        max_sup_difference: max_diff,
        distinct_found: max_diff > 1e-6 * scale,
    })
}
