//! The ground state carried onto a Cartesian box.
//!
//! Interpolating `r` gives a field that solves the discrete 3D problem only to
//! interpolation accuracy. For energy differences of size `‖w‖²` the first
//! variation must vanish on the grid itself, so the embedded field is polished
//! by a mass-preserving descent with the same stationarity multiplier structure
//! as the radial flow.

use num_complex::Complex;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field3::{CartGrid3, Field3};
use crate::functional::{energy, Integrals};
use crate::ground_state::{nonlinearity, GroundState};
use crate::scalar::{cst, from_usize, max_abs, Real};

/// `r(|x|)` sampled on the box by cubic interpolation in radius.
pub fn embed_ground<T: Real>(gs: &GroundState<T>, grid: &CartGrid3<T>) -> Result<Field3<T>> {
    let hw = gs.half_width();
    if !(grid.spacing() < hw) {
        return Err(Error::Grid(format!(
            "box spacing {} does not resolve the ground state (half-width {})",
            grid.spacing(),
            hw
        )));
    }
    let rmax = gs.grid().radius();
    Ok(Field3::from_fn(grid.clone(), |x, y, z| {
        let rho = (x * x + y * y + z * z).sqrt();
        let v = if rho <= rmax {
            gs.r.interpolate(rho)
        } else {
            T::zero()
        };
        Complex::new(v, T::zero())
    }))
}

#[derive(Clone, Debug)]
pub struct GridGroundState<T: Real> {
    pub field: Field3<T>,
    pub p: T,
    /// `‖∇r₃‖²`
    pub gnorm2: T,
    pub mass2: T,
    pub lp_norm: T,
    pub energy: T,
    /// Stationarity multiplier on the grid (the linear coefficient, ≈ 1).
    pub lambda: T,
    /// `½(1 + ‖∇r₃‖²)`
    pub diffusion: T,
    /// Sup-norm of `-aΔr₃ + λr₃ - r₃^{2p+1}` after polishing.
    pub residual: T,
    pub iterations: usize,
    /// `√d` of the radial state, the natural length unit.
    pub length_scale: T,
    pub half_width: T,
    spectrum: Vec<Complex<T>>,
    grads: [Field3<T>; 3],
}

#[derive(Clone, Copy, Debug)]
pub struct PolishOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PolishOptions {
    fn default() -> Self {
        PolishOptions {
            tol: 1e-10,
            max_iter: 2000,
        }
    }
}

struct Eval<T> {
    u: Vec<T>,
    grad: Vec<T>,
    energy: T,
    lambda: T,
    a: T,
    g: T,
    slack: T,
    residual: T,
}

fn evaluate<T: Real>(u: Vec<T>, grid: &CartGrid3<T>, p: T) -> Eval<T> {
    let spec = grid.spectral();
    let n = u.len();
    let mut uh: Vec<Complex<T>> = u.iter().map(|&v| Complex::new(v, T::zero())).collect();
    spec.forward(&mut uh);
    let k2 = spec.k_squared();
    let vol = grid.cell_volume();
    let nn = from_usize::<T>(n);
    let g: T = uh.iter().zip(k2).map(|(c, &k)| k * c.norm_sqr()).sum::<T>() * vol / nn;
    let mut lap: Vec<Complex<T>> = uh.iter().zip(k2).map(|(&c, &k)| c * k).collect();
    spec.inverse(&mut lap);
    let m: T = u.iter().map(|&v| v * v).sum::<T>() * vol;
    let fu: Vec<T> = u.iter().map(|&v| nonlinearity(v, p)).collect();
    let pl: T = u.iter().zip(&fu).map(|(&a, &b)| a * b).sum::<T>() * vol;
    let half = cst::<T>(0.5);
    let quarter = cst::<T>(0.25);
    let a = half * (T::one() + g);
    let lambda = (pl - a * g) / m;
    let grad: Vec<T> = (0..n)
        .map(|i| a * lap[i].re + lambda * u[i] - fu[i])
        .collect();
    let e = half * g + quarter * g * g - pl / (p + T::one());
    let scale = half * g + quarter * g * g + pl / (p + T::one());
    let residual = max_abs(&grad);
    Eval {
        u,
        grad,
        energy: e,
        lambda,
        a,
        g,
        // the spectral G is well conditioned; a modest multiple of eps suffices
        slack: scale * T::epsilon() * cst(256.0),
        residual,
    }
}

fn normalise<T: Real>(u: &mut [T], vol: T, target: T) {
    let m: T = u.iter().map(|&v| v * v).sum::<T>() * vol;
    let s = (target / m).sqrt();
    u.iter_mut().for_each(|v| *v = *v * s);
}

impl<T: Real> GridGroundState<T> {
    pub fn new(gs: &GroundState<T>, grid: &CartGrid3<T>) -> Result<Self> {
        Self::with_options(gs, grid, &PolishOptions::default())
    }

    /// Embeds `r`, then minimises the grid energy at the radial mass.
    pub fn with_options(
        gs: &GroundState<T>,
        grid: &CartGrid3<T>,
        opts: &PolishOptions,
    ) -> Result<Self> {
        let embedded = embed_ground(gs, grid)?;
        let target = gs.mass2;
        let vol = grid.cell_volume();
        let spec = grid.spectral();
        let k2 = spec.k_squared();
        let mut u = embedded.re();
        normalise(&mut u, vol, target);
        let mut state = evaluate(u, grid, gs.p);
        let mut tau = cst::<T>(0.5);
        let tol = cst::<T>(crate::ground_state::precision_floor::<T>(opts.tol));
        let mut iterations = 0;
        while state.residual >= tol {
            iterations += 1;
            if iterations > opts.max_iter {
                return Err(Error::NonConvergence {
                    what: "grid ground-state polish",
                    iterations: opts.max_iter,
                    residual: state.residual.as_f64(),
                });
            }
            let mut d: Vec<Complex<T>> = state
                .grad
                .iter()
                .map(|&v| Complex::new(v, T::zero()))
                .collect();
            spec.forward(&mut d);
            for (c, &k) in d.iter_mut().zip(k2) {
                *c = *c / (state.a * k + T::one());
            }
            spec.inverse(&mut d);
            let mut trial: Vec<T> = state
                .u
                .iter()
                .zip(&d)
                .map(|(&x, c)| x - tau * c.re)
                .collect();
            normalise(&mut trial, vol, target);
            let next = evaluate(trial, grid, gs.p);
            let accept = next.energy < state.energy - state.slack
                || (next.energy <= state.energy + state.slack && next.residual < state.residual);
            if accept {
                state = next;
                tau = (tau * cst(1.25)).min(T::one());
            } else {
                tau = tau * cst(0.5);
                if tau < cst(1e-14) {
                    return Err(Error::NonConvergence {
                        what: "grid ground-state polish (step collapsed)",
                        iterations,
                        residual: state.residual.as_f64(),
                    });
                }
            }
        }
        let field = Field3::from_real(grid.clone(), &state.u)?;
        Ok(Self::assemble(
            field,
            gs,
            state.lambda,
            state.a,
            state.g,
            state.residual,
            iterations,
        ))
    }

    fn assemble(
        field: Field3<T>,
        gs: &GroundState<T>,
        lambda: T,
        a: T,
        g: T,
        residual: T,
        iterations: usize,
    ) -> Self {
        let two = cst::<T>(2.0);
        let spectrum = field.spectrum();
        let grads = [
            field.derivative(0),
            field.derivative(1),
            field.derivative(2),
        ];
        GridGroundState {
            p: gs.p,
            gnorm2: g,
            mass2: field.mass(),
            lp_norm: field.lp_integral(two * gs.p + two),
            energy: energy(&field, gs.p),
            lambda,
            diffusion: a,
            residual,
            iterations,
            length_scale: gs.length_scale(),
            half_width: gs.half_width(),
            spectrum,
            grads,
            field,
        }
    }

    pub fn grid(&self) -> &CartGrid3<T> {
        self.field.grid()
    }

    pub fn spectrum(&self) -> &[Complex<T>] {
        &self.spectrum
    }

    /// `∂_j r₃`
    pub fn gradient(&self, axis: usize) -> &Field3<T> {
        &self.grads[axis]
    }

    /// H¹ norm of `r₃`.
    pub fn norm(&self) -> T {
        (self.mass2 + cst::<T>(0.5) * self.gnorm2).sqrt()
    }

    /// Quadratic form of `L₊` (`plus`) or `L₋` on a real field, with the grid
    /// multiplier as linear coefficient.
    pub fn quad_form(&self, plus: bool, u: &[T]) -> Result<T> {
        let grid = self.grid();
        if u.len() != grid.len() {
            return Err(Error::GridMismatch(
                "field length differs from the grid".into(),
            ));
        }
        let uf = Field3::from_real(grid.clone(), u)?;
        let uh = uf.spectrum();
        let kin = crate::field3::spectral_grad_pairing(grid, &uh, &uh);
        let two = cst::<T>(2.0);
        let c = if plus {
            two * self.p + T::one()
        } else {
            T::one()
        };
        let pot: T = self
            .field
            .values()
            .iter()
            .zip(u)
            .map(|(r, &x)| (self.lambda - c * Float::abs(r.re).powf(two * self.p)) * x * x)
            .sum::<T>()
            * grid.cell_volume();
        let mut q = self.diffusion * kin + pot;
        if plus {
            let s = crate::field3::spectral_grad_pairing(grid, &self.spectrum, &uh);
            q = q + s * s;
        }
        Ok(q)
    }
}
