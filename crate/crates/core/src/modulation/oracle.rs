//! Brute-force minimisation of `‖φ - e^{iθ} r(· - x)‖` used to check the
//! Newton fit. Every candidate translate is built explicitly and paired in
//! physical space.

use num_complex::Complex;

use super::GridGroundState;
use crate::error::Result;
use crate::field3::Field3;
use crate::functional::norm_h1;
use crate::scalar::{cst, from_usize, Real};

#[derive(Clone, Copy, Debug)]
pub struct OracleFit<T> {
    pub x0: [T; 3],
    pub theta: T,
    pub dist: T,
}

#[derive(Clone, Copy, Debug)]
pub struct OracleOptions {
    pub phases: usize,
    pub zoom_levels: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            phases: 64,
            zoom_levels: 36,
        }
    }
}

struct Candidate<T> {
    x: [T; 3],
    theta: T,
    ups: T,
}

fn pairing<T: Real>(phi: &Field3<T>, gs: &GridGroundState<T>, x: [T; 3]) -> Result<(T, T)> {
    let t = gs.field.translate_phase(x, T::zero());
    let a = phi.inner_h1(&t)?;
    let b = phi.inner_h1(&t.scale(Complex::new(T::zero(), T::one())))?;
    Ok((a, b))
}

fn best_phase<T: Real>(base: T, a: T, b: T, thetas: impl Iterator<Item = T>) -> (T, T) {
    let two = cst::<T>(2.0);
    thetas
        .map(|t| (t, base - two * (t.cos() * a + t.sin() * b)))
        .fold((T::zero(), T::infinity()), |acc, c| {
            if c.1 < acc.1 {
                c
            } else {
                acc
            }
        })
}

pub fn exhaustive_fit<T: Real>(
    phi: &Field3<T>,
    gs: &GridGroundState<T>,
    opts: &OracleOptions,
) -> Result<OracleFit<T>> {
    phi.check_same_grid(&gs.field)?;
    let grid = gs.grid();
    let m = grid.nodes_per_axis();
    let h = grid.spacing();
    let tau = T::PI() * cst(2.0);
    let base = norm_h1(phi).powi(2) + gs.norm().powi(2);
    let shift = |i: usize| {
        let s = if i < m / 2 {
            i as i64
        } else {
            i as i64 - m as i64
        };
        from_usize::<T>(s.unsigned_abs() as usize) * if s < 0 { -h } else { h }
    };
    let coarse_theta = |j: usize| tau * from_usize::<T>(j) / from_usize::<T>(opts.phases);
    let mut best = Candidate {
        x: [T::zero(); 3],
        theta: T::zero(),
        ups: T::infinity(),
    };
    for i in 0..m {
        for j in 0..m {
            for l in 0..m {
                let x = [shift(i), shift(j), shift(l)];
                let (a, b) = pairing(phi, gs, x)?;
                let (theta, ups) = best_phase(base, a, b, (0..opts.phases).map(coarse_theta));
                if ups < best.ups {
                    best = Candidate { x, theta, ups };
                }
            }
        }
    }
    let mut span_x = h;
    let mut span_t = tau / from_usize::<T>(opts.phases);
    let offsets: Vec<T> = (0..5).map(|i| cst::<T>(i as f64 * 0.5 - 1.0)).collect();
    let t_offsets: Vec<T> = (0..9).map(|i| cst::<T>(i as f64 * 0.25 - 1.0)).collect();
    for _ in 0..opts.zoom_levels {
        let centre = best.x;
        let t0 = best.theta;
        for &dx in &offsets {
            for &dy in &offsets {
                for &dz in &offsets {
                    let x = [
                        centre[0] + dx * span_x,
                        centre[1] + dy * span_x,
                        centre[2] + dz * span_x,
                    ];
                    let (a, b) = pairing(phi, gs, x)?;
                    let (theta, ups) =
                        best_phase(base, a, b, t_offsets.iter().map(|&d| t0 + d * span_t));
                    if ups < best.ups {
                        best = Candidate { x, theta, ups };
                    }
                }
            }
        }
        span_x = span_x * cst(0.5);
        span_t = span_t * cst(0.5);
    }
    let mut theta = best.theta % tau;
    if theta < T::zero() {
        theta = theta + tau;
    }
    let w = phi.sub(&gs.field.translate_phase(best.x, theta))?;
    Ok(OracleFit {
        x0: best.x,
        theta,
        dist: norm_h1(&w),
    })
}
