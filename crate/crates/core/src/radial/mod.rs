//! Radially symmetric functions on a truncated uniform grid.
//!
//! Unknowns live at `ρ_i = i h`, `i = 1..=n`, `h = R / n`. Integrals over ℝ³ use
//! the weight `4π ρ² h` at every node, i.e. the trapezoid rule on `[0, R + h]`
//! with the function vanishing one step past the last node. [`quad_radial`] is
//! the plain trapezoid rule on `[0, R]` and differs from the model weights only
//! by the (negligible) half weight at `ρ = R`.

mod stencil;

pub use stencil::{first_derivative, parity_sign, second_derivative, StencilOrder};

use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::SymBand;
use crate::scalar::{cst, from_usize, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialGrid<T> {
    radius: T,
    n: usize,
    order: StencilOrder,
}

impl<T: Real> RadialGrid<T> {
    pub fn new(radius: T, n: usize) -> Result<Self> {
        Self::with_order(radius, n, StencilOrder::default())
    }

    pub fn with_order(radius: T, n: usize, order: StencilOrder) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::Grid(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if n < 16 {
            return Err(Error::Grid(format!("need at least 16 nodes, got {n}")));
        }
        Ok(RadialGrid { radius, n, order })
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn order(&self) -> StencilOrder {
        self.order
    }

    pub fn spacing(&self) -> T {
        self.radius / from_usize(self.n)
    }

    pub fn node(&self, i: usize) -> T {
        from_usize::<T>(i + 1) * self.spacing()
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Same node count and stencil, radius multiplied by `factor`.
    pub fn stretched(&self, factor: T) -> Result<Self> {
        Self::with_order(self.radius * factor, self.n, self.order)
    }

    /// Same radius, twice the nodes.
    pub fn refined(&self) -> Self {
        RadialGrid {
            n: 2 * self.n,
            ..*self
        }
    }

    /// Quadrature weights `4π ρ_i² h`.
    pub fn weights(&self) -> Vec<T> {
        let h = self.spacing();
        let c = cst::<T>(4.0) * T::PI() * h;
        self.nodes().into_iter().map(|r| c * r * r).collect()
    }

    fn same_as(&self, other: &Self) -> bool {
        self.n == other.n && self.radius == other.radius && self.order == other.order
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile<T> {
    grid: RadialGrid<T>,
    values: Vec<T>,
}

impl<T: Real> RadialProfile<T> {
    pub fn new(grid: RadialGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("profile contains non-finite values".into()));
        }
        Ok(RadialProfile { grid, values })
    }

    pub fn from_fn(grid: RadialGrid<T>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = grid.nodes().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: RadialGrid<T>) -> Self {
        RadialProfile {
            values: vec![T::zero(); grid.len()],
            grid,
        }
    }

    pub fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        RadialProfile {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Same values reinterpreted on another grid with the same node count.
    pub fn regrid(&self, grid: RadialGrid<T>) -> Result<Self> {
        Self::new(grid, self.values.clone())
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "radial grids (R = {}, n = {}) and (R = {}, n = {})",
                self.grid.radius, self.grid.n, other.grid.radius, other.grid.n
            )))
        }
    }

    /// Cubic (Catmull-Rom on the parity-extended samples) interpolation at radius `rho`.
    pub fn interpolate(&self, rho: T) -> T {
        let h = self.grid.spacing();
        let t = Float::abs(rho) / h;
        let base = t.floor();
        let s = t - base;
        let k = base.to_isize().unwrap_or(isize::MAX);
        let at = |j: isize| -> T {
            let j = j.abs();
            if j == 0 {
                // even extension: value at the origin by 4-point extrapolation
                let v = &self.values;
                if v.len() >= 4 {
                    cst::<T>(4.0) * v[0] - cst::<T>(6.0) * v[1] + cst::<T>(4.0) * v[2] - v[3]
                } else {
                    v[0]
                }
            } else if (j as usize) <= self.values.len() {
                self.values[j as usize - 1]
            } else {
                T::zero()
            }
        };
        let (p0, p1, p2, p3) = (at(k - 1), at(k), at(k + 1), at(k + 2));
        let half = cst::<T>(0.5);
        let a = -half * p0 + cst::<T>(1.5) * p1 - cst::<T>(1.5) * p2 + half * p3;
        let b = p0 - cst::<T>(2.5) * p1 + cst::<T>(2.0) * p2 - half * p3;
        let c = -half * p0 + half * p2;
        ((a * s + b) * s + c) * s + p1
    }
}

/// Trapezoid value of `4π ∫_0^R f(ρ) ρ^(2+power) dρ`.
pub fn quad_radial<T: Real>(f: &RadialProfile<T>, power: i32) -> T {
    let g = &f.grid;
    let h = g.spacing();
    let n = g.len();
    let mut acc = T::zero();
    for (i, &v) in f.values.iter().enumerate() {
        let rho = g.node(i);
        let mut term = v * rho.powi(2 + power);
        if i + 1 == n {
            term = term * cst(0.5);
        }
        acc = acc + term;
    }
    cst::<T>(4.0) * T::PI() * h * acc
}

/// `∫ f g` over ℝ³ with the model weights.
pub fn inner_l2<T: Real>(f: &RadialProfile<T>, g: &RadialProfile<T>) -> Result<T> {
    f.check_same_grid(g)?;
    Ok(weighted_dot(&f.grid.weights(), &f.values, &g.values))
}

pub fn mass<T: Real>(f: &RadialProfile<T>) -> T {
    weighted_dot(&f.grid.weights(), &f.values, &f.values)
}

/// `∫ |f|^q` over ℝ³.
pub fn lp_integral<T: Real>(f: &RadialProfile<T>, q: T) -> T {
    f.grid
        .weights()
        .iter()
        .zip(&f.values)
        .map(|(&w, &v)| w * Float::abs(v).powf(q))
        .sum()
}

pub(crate) fn weighted_dot<T: Real>(w: &[T], a: &[T], b: &[T]) -> T {
    w.iter().zip(a).zip(b).map(|((&w, &x), &y)| w * x * y).sum()
}

/// `∫ ∇(f Y) · ∇(g Y)` for sector-`ell` coefficients `f, g` (unit-normalised harmonic).
pub fn grad_inner_sector<T: Real>(
    f: &RadialProfile<T>,
    g: &RadialProfile<T>,
    ell: usize,
) -> Result<T> {
    f.check_same_grid(g)?;
    let grid = &f.grid;
    let lap = neg_laplacian(g, ell);
    Ok(weighted_dot(&grid.weights(), &f.values, &lap))
}

pub fn grad_inner<T: Real>(f: &RadialProfile<T>, g: &RadialProfile<T>) -> Result<T> {
    grad_inner_sector(f, g, 0)
}

/// `∫ |∇f|²` for a radial function.
pub fn grad_sq<T: Real>(f: &RadialProfile<T>) -> T {
    let lap = neg_laplacian(f, 0);
    weighted_dot(&f.grid.weights(), &f.values, &lap)
}

/// `(f, g) + ½ (∇f, ∇g)`.
pub fn inner_h1<T: Real>(f: &RadialProfile<T>, g: &RadialProfile<T>) -> Result<T> {
    inner_h1_sector(f, g, 0)
}

pub fn inner_h1_sector<T: Real>(
    f: &RadialProfile<T>,
    g: &RadialProfile<T>,
    ell: usize,
) -> Result<T> {
    Ok(inner_l2(f, g)? + cst::<T>(0.5) * grad_inner_sector(f, g, ell)?)
}

/// `(½‖∇f‖² + ‖f‖²)^{1/2}`.
pub fn norm_h1<T: Real>(f: &RadialProfile<T>) -> T {
    (cst::<T>(0.5) * grad_sq(f) + mass(f)).max(T::zero()).sqrt()
}

/// `-Δ` applied to a sector-`ell` coefficient.
pub fn neg_laplacian<T: Real>(f: &RadialProfile<T>, ell: usize) -> Vec<T> {
    neg_laplacian_values(&f.grid, &f.values, ell)
}

pub(crate) fn neg_laplacian_values<T: Real>(grid: &RadialGrid<T>, f: &[T], ell: usize) -> Vec<T> {
    let nodes = grid.nodes();
    let u: Vec<T> = f.iter().zip(&nodes).map(|(&v, &r)| v * r).collect();
    let d2 = second_derivative(&u, grid.spacing(), parity_sign(ell), grid.order());
    let l = from_usize::<T>(ell * (ell + 1));
    d2.iter()
        .zip(f)
        .zip(&nodes)
        .map(|((&d, &v), &r)| -d / r + l * v / (r * r))
        .collect()
}

/// `f'(ρ)` of a radial (`ell = 0`) profile.
pub fn derivative<T: Real>(f: &RadialProfile<T>) -> RadialProfile<T> {
    let g = &f.grid;
    let nodes = g.nodes();
    let u: Vec<T> = f.values.iter().zip(&nodes).map(|(&v, &r)| v * r).collect();
    let du = first_derivative(&u, g.spacing(), parity_sign::<T>(0), g.order());
    let values = du
        .iter()
        .zip(&f.values)
        .zip(&nodes)
        .map(|((&d, &v), &r)| (d - v) / r)
        .collect();
    RadialProfile { grid: *g, values }
}

/// `x · ∇f = ρ f'(ρ)` of a radial profile.
pub fn dilation<T: Real>(f: &RadialProfile<T>) -> RadialProfile<T> {
    let d = derivative(f);
    let nodes = f.grid.nodes();
    RadialProfile {
        grid: f.grid,
        values: d.values.iter().zip(&nodes).map(|(&v, &r)| v * r).collect(),
    }
}

/// Symmetric banded matrix `K` with `fᵀ K g = ∫ ∇(fY)·∇(gY)` in sector `ell`.
pub fn stiffness<T: Real>(grid: &RadialGrid<T>, ell: usize) -> SymBand<T> {
    let n = grid.len();
    let h = grid.spacing();
    let coeffs = grid.order().second::<T>();
    let q = coeffs.len() - 1;
    let sign = parity_sign::<T>(ell);
    let nodes = grid.nodes();
    let c = cst::<T>(4.0) * T::PI() * h;
    let cent = c * from_usize::<T>(ell * (ell + 1));
    let mut k = SymBand::zeros(n, q);
    for i in 0..n {
        for d in 0..=q.min(n - 1 - i) {
            let j = i + d;
            let mut v = c * nodes[i] * nodes[j] * stencil::neg_second_entry(i, j, h, sign, &coeffs);
            if d == 0 {
                v = v + cent;
            }
            k.set(i, j, v);
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid(r: f64, n: usize) -> RadialGrid<f64> {
        RadialGrid::new(r, n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(RadialGrid::new(0.0, 64).is_err());
        assert!(RadialGrid::new(1.0, 15).is_err());
        let g = grid(2.0, 16);
        assert_eq!(g.nodes().len(), 16);
        assert!((g.node(15) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn quad_zero_gaussian_and_ball() {
        let g = grid(8.0, 1024);
        assert_eq!(quad_radial(&RadialProfile::zeros(g), 0), 0.0);
        let f = RadialProfile::from_fn(g, |r| (-r * r).exp()).unwrap();
        let exact = 4.0 * PI * PI.sqrt() / 4.0;
        assert!((quad_radial(&f, 0) - exact).abs() < 1e-10);
        let ball = RadialProfile::from_fn(grid(1.0, 4096), |_| 1.0).unwrap();
        assert!((quad_radial(&ball, 0) - 4.0 * PI / 3.0).abs() < 1e-6);
    }

    #[test]
    fn quad_error_drops_fourfold_on_refinement() {
        let err = |n| {
            let f = RadialProfile::from_fn(grid(1.0, n), |_| 1.0).unwrap();
            (quad_radial(&f, 0) - 4.0 * PI / 3.0).abs()
        };
        let ratio = err(64) / err(128);
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn gaussian_norms() {
        let g = grid(12.0, 1200);
        let f = RadialProfile::from_fn(g, |r| (-r * r / 2.0).exp()).unwrap();
        let p32 = PI.powf(1.5);
        assert!((grad_sq(&f) - 1.5 * p32).abs() < 1e-9);
        assert!((mass(&f) - p32).abs() < 1e-12);
        let np = norm_h1(&f);
        assert!((np - (0.75 * p32 + p32).sqrt()).abs() < 1e-9);
        assert_eq!(norm_h1(&RadialProfile::zeros(g)), 0.0);
    }

    #[test]
    fn derivative_and_dilation_of_gaussian() {
        let g = grid(10.0, 1000);
        let f = RadialProfile::from_fn(g, |r| (-r * r).exp()).unwrap();
        let d = derivative(&f);
        let x = dilation(&f);
        for (i, r) in g.nodes().into_iter().enumerate() {
            assert!((d.values()[i] + 2.0 * r * (-r * r).exp()).abs() < 1e-9);
            assert!((x.values()[i] + 2.0 * r * r * (-r * r).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn sector_one_laplacian() {
        // x_1 e^{-|x|^2/2} has radial coefficient ρ e^{-ρ²/2} in ℓ = 1;
        // -Δ of it is (5 - ρ²) ρ e^{-ρ²/2}.
        let g = grid(10.0, 1000);
        let f = RadialProfile::from_fn(g, |r| r * (-r * r / 2.0).exp()).unwrap();
        let lap = neg_laplacian(&f, 1);
        for (i, r) in g.nodes().into_iter().enumerate() {
            let exact = (5.0 - r * r) * r * (-r * r / 2.0).exp();
            assert!((lap[i] - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn stiffness_matches_operator() {
        let g = grid(5.0, 64);
        for ell in 0..3 {
            let k = stiffness(&g, ell);
            let f = RadialProfile::from_fn(g, |r| (r * 1.3).sin() * (-r).exp()).unwrap();
            let kf = k.matvec(f.values());
            let lap = neg_laplacian(&f, ell);
            let w = g.weights();
            for i in 0..64 {
                assert!((kf[i] - w[i] * lap[i]).abs() < 1e-10 * (1.0 + kf[i].abs()));
            }
        }
    }

    #[test]
    fn interpolation_is_accurate() {
        let g = grid(8.0, 800);
        let f = RadialProfile::from_fn(g, |r| (-r * r).exp()).unwrap();
        for &r in &[0.0, 0.004, 0.013, 0.5, 1.2345, 3.0, 7.999, 9.0] {
            let exact: f64 = if r <= 8.0 { (-r * r).exp() } else { 0.0 };
            assert!((f.interpolate(r) - exact).abs() < 5e-6, "{r}");
        }
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = RadialProfile::zeros(grid(1.0, 16));
        let b = RadialProfile::zeros(grid(2.0, 16));
        assert!(matches!(inner_h1(&a, &b), Err(Error::GridMismatch(_))));
    }

    proptest! {
        #[test]
        fn inner_h1_symmetric_bilinear(
            a in proptest::collection::vec(-1.0f64..1.0, 32),
            b in proptest::collection::vec(-1.0f64..1.0, 32),
            c in proptest::collection::vec(-1.0f64..1.0, 32),
            s in -3.0f64..3.0,
        ) {
            let g = grid(4.0, 32);
            let fa = RadialProfile::new(g, a).unwrap();
            let fb = RadialProfile::new(g, b).unwrap();
            let fc = RadialProfile::new(g, c).unwrap();
            let ab = inner_h1(&fa, &fb).unwrap();
            let ba = inner_h1(&fb, &fa).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab.abs()));
            let comb = RadialProfile::new(
                g,
                fa.values().iter().zip(fc.values()).map(|(x, y)| x + s * y).collect(),
            ).unwrap();
            let lhs = inner_h1(&comb, &fb).unwrap();
            let rhs = ab + s * inner_h1(&fc, &fb).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs() + rhs.abs()));
            let np = norm_h1(&fa);
            prop_assert!((np * np - inner_h1(&fa, &fa).unwrap()).abs() <= 1e-12 * (1.0 + np * np));
            prop_assert!((np * np - (grad_sq(&fa) / 2.0 + mass(&fa))).abs() <= 1e-12 * (1.0 + np * np));
        }
    }
}
