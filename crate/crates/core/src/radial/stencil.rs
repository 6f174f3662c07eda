//! Central finite-difference stencils on the uniform radial grid.
//!
//! Derivatives act on `u = ρ f`, which turns the radial Laplacian of a sector-ℓ
//! coefficient into `u''/ρ - ℓ(ℓ+1) f/ρ²`. Values at negative nodes come from the
//! parity of `u` (`(-1)^(ℓ+1)`), `u(0) = 0`, and everything beyond the last node
//! vanishes (homogeneous Dirichlet one step past `R`).

use crate::scalar::{cst, Real};

/// Accuracy order of the central stencils.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize, Default)]
pub enum StencilOrder {
    Second,
    Fourth,
    Sixth,
    #[default]
    Eighth,
}

impl StencilOrder {
    pub fn half_width(self) -> usize {
        match self {
            StencilOrder::Second => 1,
            StencilOrder::Fourth => 2,
            StencilOrder::Sixth => 3,
            StencilOrder::Eighth => 4,
        }
    }

    /// Second-derivative weights `c_0 .. c_q` (symmetric, scaled by `1/h²`).
    pub fn second<T: Real>(self) -> Vec<T> {
        let c: &[f64] = match self {
            StencilOrder::Second => &[-2.0, 1.0],
            StencilOrder::Fourth => &[-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0],
            StencilOrder::Sixth => &[-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0],
            StencilOrder::Eighth => &[
                -205.0 / 72.0,
                8.0 / 5.0,
                -1.0 / 5.0,
                8.0 / 315.0,
                -1.0 / 560.0,
            ],
        };
        c.iter().map(|&x| cst(x)).collect()
    }

    /// First-derivative weights `d_1 .. d_q` (antisymmetric, scaled by `1/h`).
    pub fn first<T: Real>(self) -> Vec<T> {
        let d: &[f64] = match self {
            StencilOrder::Second => &[0.5],
            StencilOrder::Fourth => &[2.0 / 3.0, -1.0 / 12.0],
            StencilOrder::Sixth => &[3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0],
            StencilOrder::Eighth => &[4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0],
        };
        d.iter().map(|&x| cst(x)).collect()
    }
}

/// Sign of the reflection `u(-ρ) = s u(ρ)` for sector `ell`.
pub fn parity_sign<T: Real>(ell: usize) -> T {
    if ell.is_multiple_of(2) {
        -T::one()
    } else {
        T::one()
    }
}

/// Value of `u` at signed node number `t` (node `t` sits at `ρ = t h`).
#[inline]
fn ghost<T: Real>(u: &[T], t: isize, sign: T) -> T {
    let n = u.len() as isize;
    if t >= 1 && t <= n {
        u[(t - 1) as usize]
    } else if t == 0 || t > n {
        T::zero()
    } else {
        sign * u[(-t - 1) as usize]
    }
}

/// `(D2 u)_i` at every node.
pub fn second_derivative<T: Real>(u: &[T], h: T, sign: T, order: StencilOrder) -> Vec<T> {
    let c = order.second::<T>();
    let inv_h2 = T::one() / (h * h);
    let n = u.len();
    (0..n)
        .map(|i| {
            let t = i as isize + 1;
            let mut acc = c[0] * u[i];
            for (j, &cj) in c.iter().enumerate().skip(1) {
                let j = j as isize;
                acc = acc + cj * (ghost(u, t + j, sign) + ghost(u, t - j, sign));
            }
            acc * inv_h2
        })
        .collect()
}

/// `(D1 u)_i` at every node.
pub fn first_derivative<T: Real>(u: &[T], h: T, sign: T, order: StencilOrder) -> Vec<T> {
    let d = order.first::<T>();
    let inv_h = T::one() / h;
    let n = u.len();
    (0..n)
        .map(|i| {
            let t = i as isize + 1;
            let mut acc = T::zero();
            for (j, &dj) in d.iter().enumerate() {
                let j = j as isize + 1;
                acc = acc + dj * (ghost(u, t + j, sign) - ghost(u, t - j, sign));
            }
            acc * inv_h
        })
        .collect()
}

/// Entry `(i, k)` of `-D2` including the reflected contributions near the origin.
pub fn neg_second_entry<T: Real>(i: usize, k: usize, h: T, sign: T, coeffs: &[T]) -> T {
    let q = coeffs.len() - 1;
    let mut v = T::zero();
    let diff = i.abs_diff(k);
    if diff <= q {
        v = v + coeffs[diff];
    }
    let refl = i + k + 2;
    if refl <= q {
        v = v + sign * coeffs[refl];
    }
    -v / (h * h)
}
