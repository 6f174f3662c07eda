//! Complex fields on a periodic Cartesian box with spectral derivatives.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::functional::Integrals;
use crate::scalar::{cst, from_usize, Real};

pub type C<T> = Complex<T>;

/// FFT plans and wavenumbers for one grid size.
pub struct Spectral3<T> {
    m: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
    scratch: usize,
    /// 1D angular wavenumbers in FFT order.
    k: Vec<T>,
    /// `|k|²` per node.
    k2: Vec<T>,
}

impl<T: Real> fmt::Debug for Spectral3<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral3").field("m", &self.m).finish()
    }
}

impl<T: Real> Spectral3<T> {
    fn new(m: usize, half_width: T) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);
        let scratch = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        let base = T::PI() / half_width; // 2π / (2L)
        let k: Vec<T> = (0..m)
            .map(|i| {
                let f = if i < m / 2 {
                    i as isize
                } else {
                    i as isize - m as isize
                };
                base * cst::<T>(f as f64)
            })
            .collect();
        let mut k2 = Vec::with_capacity(m * m * m);
        for &a in &k {
            for &b in &k {
                for &c in &k {
                    k2.push(a * a + b * b + c * c);
                }
            }
        }
        Spectral3 {
            m,
            fwd,
            inv,
            scratch,
            k,
            k2,
        }
    }

    pub fn wavenumbers(&self) -> &[T] {
        &self.k
    }

    pub fn k_squared(&self) -> &[T] {
        &self.k2
    }

    fn pass(&self, data: &mut [C<T>], inverse: bool) {
        let m = self.m;
        let fft = if inverse { &self.inv } else { &self.fwd };
        let mut scratch = vec![C::new(T::zero(), T::zero()); self.scratch];
        // z: contiguous lines
        fft.process_with_scratch(data, &mut scratch);
        let mut buf = vec![C::new(T::zero(), T::zero()); m * m];
        // y: lines of stride m inside each x-slab
        for i in 0..m {
            let slab = &mut data[i * m * m..(i + 1) * m * m];
            for j in 0..m {
                for k in 0..m {
                    buf[k * m + j] = slab[j * m + k];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..m {
                for k in 0..m {
                    slab[j * m + k] = buf[k * m + j];
                }
            }
        }
        // x: lines of stride m²
        for j in 0..m {
            for i in 0..m {
                let row = (i * m + j) * m;
                for k in 0..m {
                    buf[k * m + i] = data[row + k];
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for i in 0..m {
                let row = (i * m + j) * m;
                for k in 0..m {
                    data[row + k] = buf[k * m + i];
                }
            }
        }
    }

    /// Unnormalised forward transform in place.
    pub fn forward(&self, data: &mut [C<T>]) {
        self.pass(data, false);
    }

    /// Inverse transform in place, including the `1/N` factor.
    pub fn inverse(&self, data: &mut [C<T>]) {
        self.pass(data, true);
        let s = T::one() / from_usize::<T>(data.len());
        data.iter_mut().for_each(|v| *v = *v * s);
    }

    /// Separable factors `e^{-i k_a s_a}` for a shift `s`.
    pub fn shift_factors(&self, s: [T; 3]) -> [Vec<C<T>>; 3] {
        let f = |x: T| -> Vec<C<T>> {
            self.k
                .iter()
                .map(|&k| C::from_polar(T::one(), -k * x))
                .collect()
        };
        [f(s[0]), f(s[1]), f(s[2])]
    }
}

/// Periodic box `[-L, L)³` with `m` nodes per axis.
#[derive(Clone)]
pub struct CartGrid3<T> {
    half_width: T,
    m: usize,
    spec: Arc<Spectral3<T>>,
}

impl<T: Real> fmt::Debug for CartGrid3<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CartGrid3")
            .field("half_width", &self.half_width)
            .field("m", &self.m)
            .finish()
    }
}

impl<T: Real> PartialEq for CartGrid3<T> {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.half_width == other.half_width
    }
}

impl<T: Real> CartGrid3<T> {
    /// `m` must be even and at least 16; powers of two are fastest.
    pub fn new(half_width: T, m: usize) -> Result<Self> {
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::Grid(format!(
                "box half-width must be positive, got {half_width}"
            )));
        }
        if m < 16 || !m.is_multiple_of(2) {
            return Err(Error::Grid(format!(
                "need an even node count >= 16, got {m}"
            )));
        }
        Ok(CartGrid3 {
            half_width,
            m,
            spec: Arc::new(Spectral3::new(m, half_width)),
        })
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.m * self.m * self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        cst::<T>(2.0) * self.half_width / from_usize(self.m)
    }

    pub fn cell_volume(&self) -> T {
        let h = self.spacing();
        h * h * h
    }

    pub fn coords(&self) -> Vec<T> {
        let h = self.spacing();
        (0..self.m)
            .map(|i| -self.half_width + from_usize::<T>(i) * h)
            .collect()
    }

    pub fn spectral(&self) -> &Spectral3<T> {
        &self.spec
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.m + j) * self.m + k
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field3<T: Real> {
    grid: CartGrid3<T>,
    values: Vec<C<T>>,
}

impl<T: Real> Field3<T> {
    pub fn new(grid: CartGrid3<T>, values: Vec<C<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}³ grid",
                values.len(),
                grid.m
            )));
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::Invalid("field contains non-finite values".into()));
        }
        Ok(Field3 { grid, values })
    }

    pub fn zeros(grid: CartGrid3<T>) -> Self {
        Field3 {
            values: vec![C::new(T::zero(), T::zero()); grid.len()],
            grid,
        }
    }

    pub fn from_fn(grid: CartGrid3<T>, mut f: impl FnMut(T, T, T) -> C<T>) -> Self {
        let x = grid.coords();
        let mut values = Vec::with_capacity(grid.len());
        for &a in &x {
            for &b in &x {
                for &c in &x {
                    values.push(f(a, b, c));
                }
            }
        }
        Field3 { grid, values }
    }

    pub fn from_real(grid: CartGrid3<T>, re: &[T]) -> Result<Self> {
        Self::new(grid, re.iter().map(|&v| C::new(v, T::zero())).collect())
    }

    pub fn grid(&self) -> &CartGrid3<T> {
        &self.grid
    }

    pub fn values(&self) -> &[C<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C<T>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C<T>> {
        self.values
    }

    pub fn re(&self) -> Vec<T> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn im(&self) -> Vec<T> {
        self.values.iter().map(|v| v.im).collect()
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )))
        }
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Field3 {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| v * s).collect(),
        }
    }

    /// `self + s · other`
    pub fn axpy(&self, s: C<T>, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Field3 {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a + s * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(C::new(-T::one(), T::zero()), other)
    }

    pub fn spectrum(&self) -> Vec<C<T>> {
        let mut v = self.values.clone();
        self.grid.spec.forward(&mut v);
        v
    }

    /// Real part of `∫ u v̄`.
    pub fn inner_l2(&self, other: &Self) -> Result<T> {
        self.check_same_grid(other)?;
        let s: T = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    /// Real part of `∫ ∇u · ∇v̄`.
    pub fn grad_inner(&self, other: &Self) -> Result<T> {
        self.check_same_grid(other)?;
        let a = self.spectrum();
        let b = other.spectrum();
        Ok(spectral_grad_pairing(&self.grid, &a, &b))
    }

    /// `(u, v) + ½(∇u, ∇v)`, real parts.
    pub fn inner_h1(&self, other: &Self) -> Result<T> {
        Ok(self.inner_l2(other)? + cst::<T>(0.5) * self.grad_inner(other)?)
    }

    /// `∂_axis u`.
    pub fn derivative(&self, axis: usize) -> Self {
        let m = self.grid.m;
        let k = &self.grid.spec.k;
        let mut v = self.spectrum();
        for i in 0..m {
            for j in 0..m {
                for l in 0..m {
                    let kk = match axis {
                        0 => k[i],
                        1 => k[j],
                        _ => k[l],
                    };
                    let idx = (i * m + j) * m + l;
                    v[idx] = v[idx] * C::new(T::zero(), kk);
                }
            }
        }
        self.grid.spec.inverse(&mut v);
        Field3 {
            grid: self.grid.clone(),
            values: v,
        }
    }

    /// `e^{iθ} u(· - x)` via the Fourier shift theorem.
    pub fn translate_phase(&self, x: [T; 3], theta: T) -> Self {
        let spec = &self.grid.spec;
        let m = self.grid.m;
        let [fx, fy, fz] = spec.shift_factors(x);
        let mut v = self.spectrum();
        let ph = C::from_polar(T::one(), theta);
        for i in 0..m {
            for j in 0..m {
                let a = fx[i] * fy[j] * ph;
                let row = (i * m + j) * m;
                for l in 0..m {
                    v[row + l] = v[row + l] * a * fz[l];
                }
            }
        }
        spec.inverse(&mut v);
        Field3 {
            grid: self.grid.clone(),
            values: v,
        }
    }

    /// Centre of `|u|²` in box coordinates.
    pub fn centroid(&self) -> [T; 3] {
        let x = self.grid.coords();
        let m = self.grid.m;
        let mut acc = [T::zero(); 3];
        let mut total = T::zero();
        for i in 0..m {
            for j in 0..m {
                for l in 0..m {
                    let d = self.values[(i * m + j) * m + l].norm_sqr();
                    acc[0] = acc[0] + d * x[i];
                    acc[1] = acc[1] + d * x[j];
                    acc[2] = acc[2] + d * x[l];
                    total = total + d;
                }
            }
        }
        if total > T::zero() {
            acc.map(|a| a / total)
        } else {
            acc
        }
    }

    /// Node with the largest modulus.
    pub fn argmax(&self) -> [T; 3] {
        let m = self.grid.m;
        let x = self.grid.coords();
        let (idx, _) =
            self.values
                .iter()
                .enumerate()
                .fold((0, T::neg_infinity()), |(bi, bv), (i, v)| {
                    let a = v.norm_sqr();
                    if a > bv {
                        (i, a)
                    } else {
                        (bi, bv)
                    }
                });
        [x[idx / (m * m)], x[(idx / m) % m], x[idx % m]]
    }

    /// Largest pointwise modulus of the difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm())))
    }
}

/// `Re Σ |k|² â b̄` scaled to `∫ ∇a · ∇b̄`.
pub(crate) fn spectral_grad_pairing<T: Real>(grid: &CartGrid3<T>, a: &[C<T>], b: &[C<T>]) -> T {
    let k2 = &grid.spec.k2;
    let s: T = a
        .iter()
        .zip(b)
        .zip(k2)
        .map(|((x, y), &k)| k * (x.re * y.re + x.im * y.im))
        .sum();
    s * grid.cell_volume() / from_usize(grid.len())
}

impl<T: Real> Integrals<T> for Field3<T> {
    fn mass(&self) -> T {
        let s: T = self.values.iter().map(|v| v.norm_sqr()).sum();
        s * self.grid.cell_volume()
    }

    fn grad_sq(&self) -> T {
        let a = self.spectrum();
        spectral_grad_pairing(&self.grid, &a, &a)
    }

    fn lp_integral(&self, q: T) -> T {
        let half = q * cst(0.5);
        let s: T = self.values.iter().map(|v| v.norm_sqr().powf(half)).sum();
        s * self.grid.cell_volume()
    }
}
