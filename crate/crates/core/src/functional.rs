//! Integral functionals shared by radial and Cartesian representations.

use crate::scalar::{cst, Real};

/// Quadrature primitives a field representation has to provide.
pub trait Integrals<T: Real> {
    /// `∫ |u|²`
    fn mass(&self) -> T;
    /// `∫ |∇u|²`
    fn grad_sq(&self) -> T;
    /// `∫ |u|^q`
    fn lp_integral(&self, q: T) -> T;
}

/// `½∫|∇u|² + ¼(∫|∇u|²)² - 1/(p+1) ∫|u|^{2p+2}`.
pub fn energy<T: Real, F: Integrals<T> + ?Sized>(u: &F, p: T) -> T {
    let g = u.grad_sq();
    let two = cst::<T>(2.0);
    cst::<T>(0.5) * g + cst::<T>(0.25) * g * g - u.lp_integral(two * p + two) / (p + T::one())
}

/// `(½‖∇u‖² + ‖u‖²)^{1/2}`.
pub fn norm_h1<T: Real, F: Integrals<T> + ?Sized>(u: &F) -> T {
    (cst::<T>(0.5) * u.grad_sq() + u.mass())
        .max(T::zero())
        .sqrt()
}

impl<T: Real> Integrals<T> for crate::radial::RadialProfile<T> {
    fn mass(&self) -> T {
        crate::radial::mass(self)
    }

    fn grad_sq(&self) -> T {
        crate::radial::grad_sq(self)
    }

    fn lp_integral(&self, q: T) -> T {
        crate::radial::lp_integral(self, q)
    }
}
