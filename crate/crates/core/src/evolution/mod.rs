//! Time integration of the Kirchhoff-type Schrödinger flow
//!
//! `iε ∂ₜu = -½(ε² + ε‖∇u‖²)Δu + Vu - |u|^{2p}u`
//!
//! by Strang splitting. The pointwise part keeps `|u|` fixed, so its phase is
//! exact; the dispersive part keeps every `|û(k)|` and hence `‖∇u‖²`, so the
//! coefficient can be frozen at sub-step entry without approximation.

mod series;

pub use series::{evolve_series, stability_run, RunSummary, TimeSeries};

use num_complex::Complex;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field3::{spectral_grad_pairing, CartGrid3, Field3};
use crate::scalar::{cst, from_usize, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveConfig<T: Real> {
    pub epsilon: T,
    pub dt: T,
    pub t_end: T,
    /// Sampling interval of [`stability_run`].
    pub output_every: T,
    pub p: T,
    /// Smooth bounded potential sampled on the grid; `None` for `V ≡ 0`.
    pub potential: Option<Vec<T>>,
}

impl<T: Real> EvolveConfig<T> {
    pub fn new(p: T, dt: T, t_end: T) -> Self {
        EvolveConfig {
            epsilon: T::one(),
            dt,
            t_end,
            output_every: cst(0.1),
            p,
            potential: None,
        }
    }

    pub fn validate(&self, grid: &CartGrid3<T>) -> Result<()> {
        crate::error::check_nls_exponent(self.p.as_f64())?;
        let ok = |x: T| x > T::zero() && x.is_finite();
        if !ok(self.epsilon) || !ok(self.dt) || !ok(self.output_every) || !(self.t_end >= self.dt) {
            return Err(Error::Invalid(format!(
                "need ε > 0, dt > 0, T ≥ dt and a positive output interval, got ε = {}, dt = {}, T = {}, Δt_out = {}",
                self.epsilon, self.dt, self.t_end, self.output_every
            )));
        }
        if let Some(v) = &self.potential {
            if v.len() != grid.len() || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid(
                    "potential must be finite and sampled on the grid".into(),
                ));
            }
        }
        Ok(())
    }

    /// Potential from a function of position.
    pub fn with_potential(mut self, grid: &CartGrid3<T>, v: impl Fn(T, T, T) -> T) -> Self {
        let f = Field3::from_fn(grid.clone(), |x, y, z| Complex::new(v(x, y, z), T::zero()));
        self.potential = Some(f.re());
        self
    }
}

fn nonlinear_phase<T: Real>(p: T) -> impl Fn(T) -> T {
    // |u|^{2p} from |u|²
    let half = p == cst(0.5);
    move |n2: T| if half { n2.sqrt() } else { n2.powf(p) }
}

/// Propagates a field in place, fusing adjacent pointwise half steps.
pub struct Propagator<T: Real> {
    grid: CartGrid3<T>,
    cfg: EvolveConfig<T>,
    values: Vec<Complex<T>>,
    phase: Vec<T>,
    time: T,
    steps: usize,
}

impl<T: Real> Propagator<T> {
    pub fn new(u: &Field3<T>, cfg: &EvolveConfig<T>) -> Result<Self> {
        cfg.validate(u.grid())?;
        if u.values()
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::Invalid("initial field is not finite".into()));
        }
        Ok(Propagator {
            grid: u.grid().clone(),
            cfg: cfg.clone(),
            values: u.values().to_vec(),
            phase: vec![T::zero(); u.grid().len()],
            time: T::zero(),
            steps: 0,
        })
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn field(&self) -> Field3<T> {
        Field3::new(self.grid.clone(), self.values.clone())
            .expect("propagator keeps the grid length")
    }

    /// `u ← u · exp(-iτ(V - |u|^{2p})/ε)`, refused when the phase could wrap.
    fn pointwise(&mut self, tau: T) -> Result<()> {
        let pow = nonlinear_phase(self.cfg.p);
        let s = tau / self.cfg.epsilon;
        let mut worst = T::zero();
        for (ph, v) in self.phase.iter_mut().zip(&self.values) {
            *ph = -pow(v.norm_sqr());
        }
        if let Some(pot) = &self.cfg.potential {
            for (ph, &w) in self.phase.iter_mut().zip(pot) {
                *ph = *ph + w;
            }
        }
        for ph in self.phase.iter_mut() {
            *ph = *ph * s;
            worst = worst.max(Float::abs(*ph));
        }
        // the guard is stated for a full step; a half step is half of it
        if worst * (self.cfg.dt / Float::abs(tau)) > T::PI() {
            return Err(Error::StepRejected {
                phase: worst.as_f64() * (self.cfg.dt / Float::abs(tau)).as_f64(),
            });
        }
        for (v, &ph) in self.values.iter_mut().zip(&self.phase) {
            let (sn, cs) = ph.sin_cos();
            *v = *v * Complex::new(cs, -sn);
        }
        Ok(())
    }

    /// Exact dispersive flow over `tau` with the coefficient `(ε + g)/2`.
    fn dispersive(&mut self, tau: T) {
        let spec = self.grid.spectral();
        spec.forward(&mut self.values);
        let g = spectral_grad_pairing(&self.grid, &self.values, &self.values);
        let c = (self.cfg.epsilon + g) * cst(0.5) * tau;
        let e: Vec<Complex<T>> = spec
            .wavenumbers()
            .iter()
            .map(|&k| Complex::from_polar(T::one(), -c * k * k))
            .collect();
        let m = self.grid.nodes_per_axis();
        for i in 0..m {
            for j in 0..m {
                let a = e[i] * e[j];
                let row = (i * m + j) * m;
                for (v, &b) in self.values[row..row + m].iter_mut().zip(&e) {
                    *v = *v * (a * b);
                }
            }
        }
        spec.inverse(&mut self.values);
    }

    /// `n` Strang steps of size `dt` (negative `dt` runs backwards).
    pub fn advance(&mut self, n: usize, dt: T) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        let half = dt * cst(0.5);
        self.pointwise(half)?;
        for s in 0..n {
            self.dispersive(dt);
            self.pointwise(if s + 1 == n { half } else { dt })?;
            self.steps += 1;
        }
        self.time = self.time + from_usize::<T>(n) * dt;
        Ok(())
    }
}

/// One Strang step of size `cfg.dt`.
pub fn step_strang<T: Real>(u: &Field3<T>, cfg: &EvolveConfig<T>) -> Result<Field3<T>> {
    let mut prop = Propagator::new(u, cfg)?;
    prop.advance(1, cfg.dt)?;
    Ok(prop.field())
}

/// `(mass, energy)` with energy
/// `ε²/2 g + ε/4 g² + ∫V|u|² - ∫|u|^{2p+2}/(p+1)`, `g = ‖∇u‖²`.
pub fn conserved<T: Real>(u: &Field3<T>, cfg: &EvolveConfig<T>) -> (T, T) {
    use crate::functional::Integrals;
    let eps = cfg.epsilon;
    let g = u.grad_sq();
    let mass = u.mass();
    let two = cst::<T>(2.0);
    let mut e = eps * eps * g / two + eps * g * g / cst(4.0)
        - u.lp_integral(two * cfg.p + two) / (cfg.p + T::one());
    if let Some(v) = &cfg.potential {
        let s: T = u
            .values()
            .iter()
            .zip(v)
            .map(|(a, &w)| w * a.norm_sqr())
            .sum();
        e = e + s * u.grid().cell_volume();
    }
    (mass, e)
}

/// Right side `-½(ε² + εg)Δu + Vu - |u|^{2p}u`; half the L² gradient of
/// the energy in [`conserved`].
pub fn equation_rhs<T: Real>(u: &Field3<T>, cfg: &EvolveConfig<T>) -> Field3<T> {
    use crate::functional::Integrals;
    let grid = u.grid();
    let spec = grid.spectral();
    let g = u.grad_sq();
    let coef = (cfg.epsilon * cfg.epsilon + cfg.epsilon * g) * cst(0.5);
    let mut lap = u.spectrum();
    for (v, &k2) in lap.iter_mut().zip(spec.k_squared()) {
        *v = *v * (coef * k2);
    }
    spec.inverse(&mut lap);
    let pow = nonlinear_phase(cfg.p);
    for (i, (out, &a)) in lap.iter_mut().zip(u.values()).enumerate() {
        let w = cfg.potential.as_ref().map_or(T::zero(), |v| v[i]);
        *out = *out + a * (w - pow(a.norm_sqr()));
    }
    Field3::new(grid.clone(), lap).expect("same grid")
}

#[cfg(test)]
mod tests;
