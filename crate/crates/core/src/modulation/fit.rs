use num_complex::Complex;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::GridGroundState;
use crate::error::{Error, Result};
use crate::field3::Field3;
use crate::functional::{norm_h1, Integrals};
use crate::linalg::solve_dense;
use crate::scalar::{cst, from_usize, Real};

#[derive(Clone, Debug)]
pub struct ModulationFit<T: Real> {
    pub x0: [T; 3],
    /// Phase in `[0, 2π)`.
    pub gamma: T,
    /// `‖φ - e^{iγ} r(· - x₀)‖` in the H¹ norm.
    pub dist: T,
    /// `Re w`, `w = e^{-iγ} φ(· + x₀) - r`
    pub u: Field3<T>,
    /// `Im w`
    pub v: Field3<T>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct FitOptions<T> {
    /// Extra start, e.g. the previous fit along a trajectory.
    pub warm_start: Option<[T; 3]>,
    /// Seed of the random restart.
    pub seed: u64,
    pub max_iter: usize,
    /// Relative mass mismatch tolerated before a warning.
    pub mass_tol: f64,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        FitOptions {
            warm_start: None,
            seed: 0x0b17,
            max_iter: 100,
            mass_tol: 1e-8,
        }
    }
}

/// The pairing `P(x) = (φ, r(· - x))_{H¹}` as a trigonometric sum
/// `Σ_k c_k e^{ik·x}`, with derivatives.
pub(crate) struct Pairing<'a, T: Real> {
    coef: Vec<Complex<T>>,
    k: &'a [T],
    m: usize,
}

pub(crate) struct PairingValue<T> {
    pub p: Complex<T>,
    pub dp: [Complex<T>; 3],
    pub d2p: [[Complex<T>; 3]; 3],
}

impl<'a, T: Real> Pairing<'a, T> {
    pub fn new(phi: &Field3<T>, gs: &'a GridGroundState<T>) -> Result<Self> {
        phi.check_same_grid(&gs.field)?;
        let grid = gs.grid();
        let spec = grid.spectral();
        let ph = phi.spectrum();
        let scale = grid.cell_volume() / from_usize::<T>(grid.len());
        let half = cst::<T>(0.5);
        let coef = ph
            .iter()
            .zip(gs.spectrum())
            .zip(spec.k_squared())
            .map(|((&a, &b), &k2)| a * b.conj() * ((T::one() + half * k2) * scale))
            .collect();
        Ok(Pairing {
            coef,
            k: spec.wavenumbers(),
            m: grid.nodes_per_axis(),
        })
    }

    pub fn value(&self, x: [T; 3]) -> Complex<T> {
        let m = self.m;
        let e: Vec<Vec<Complex<T>>> = (0..3)
            .map(|a| {
                self.k
                    .iter()
                    .map(|&k| Complex::from_polar(T::one(), k * x[a]))
                    .collect()
            })
            .collect();
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..m {
            for j in 0..m {
                let eij = e[0][i] * e[1][j];
                let row = (i * m + j) * m;
                let mut s = Complex::new(T::zero(), T::zero());
                for l in 0..m {
                    s = s + self.coef[row + l] * e[2][l];
                }
                acc = acc + s * eij;
            }
        }
        acc
    }

    pub fn eval(&self, x: [T; 3]) -> PairingValue<T> {
        let m = self.m;
        let zero = Complex::new(T::zero(), T::zero());
        let e: Vec<Vec<Complex<T>>> = (0..3)
            .map(|a| {
                self.k
                    .iter()
                    .map(|&k| Complex::from_polar(T::one(), k * x[a]))
                    .collect()
            })
            .collect();
        let mut p = zero;
        let mut dp = [zero; 3];
        let mut d2p = [[zero; 3]; 3];
        let k = self.k;
        let iu = Complex::new(T::zero(), T::one());
        for i in 0..m {
            for j in 0..m {
                let eij = e[0][i] * e[1][j];
                let row = (i * m + j) * m;
                // sums over l of c e_l, c e_l k_l, c e_l k_l²
                let (mut s0, mut s1, mut s2) = (zero, zero, zero);
                for l in 0..m {
                    let t = self.coef[row + l] * e[2][l];
                    s0 = s0 + t;
                    s1 = s1 + t * k[l];
                    s2 = s2 + t * (k[l] * k[l]);
                }
                let (s0, s1, s2) = (s0 * eij, s1 * eij, s2 * eij);
                let (ki, kj) = (k[i], k[j]);
                p = p + s0;
                dp[0] = dp[0] + s0 * ki;
                dp[1] = dp[1] + s0 * kj;
                dp[2] = dp[2] + s1;
                d2p[0][0] = d2p[0][0] + s0 * (ki * ki);
                d2p[1][1] = d2p[1][1] + s0 * (kj * kj);
                d2p[2][2] = d2p[2][2] + s2;
                d2p[0][1] = d2p[0][1] + s0 * (ki * kj);
                d2p[0][2] = d2p[0][2] + s1 * ki;
                d2p[1][2] = d2p[1][2] + s1 * kj;
            }
        }
        for a in dp.iter_mut() {
            *a = *a * iu;
        }
        for a in 0..3 {
            for b in a..3 {
                d2p[a][b] = -d2p[a][b];
                d2p[b][a] = d2p[a][b];
            }
        }
        PairingValue { p, dp, d2p }
    }
}

fn grad_norm<T: Real>(v: &PairingValue<T>) -> T {
    let two = cst::<T>(2.0);
    (0..3)
        .map(|a| (two * (v.p.conj() * v.dp[a]).re).powi(2))
        .sum::<T>()
        .sqrt()
}

/// Maximises `|P(x)|²` from `start` by damped Newton with a gradient fallback.
fn maximise<T: Real>(
    pairing: &Pairing<'_, T>,
    start: [T; 3],
    trust: T,
    max_iter: usize,
) -> Result<[T; 3]> {
    let two = cst::<T>(2.0);
    let mut x = start;
    let mut cur = pairing.eval(x);
    let mut f = cur.p.norm_sqr();
    for _ in 0..max_iter {
        let g: Vec<T> = (0..3)
            .map(|a| two * (cur.p.conj() * cur.dp[a]).re)
            .collect();
        let h: Vec<Vec<T>> = (0..3)
            .map(|a| {
                (0..3)
                    .map(|b| two * (cur.dp[a].conj() * cur.dp[b] + cur.p.conj() * cur.d2p[a][b]).re)
                    .collect()
            })
            .collect();
        let gnorm = g.iter().map(|&v| v * v).sum::<T>().sqrt();
        if gnorm == T::zero() {
            break;
        }
        let newton = solve_dense(h.clone(), g.iter().map(|&v| -v).collect()).ok();
        let mut step: Vec<T> = match newton {
            Some(s) if s.iter().zip(&g).map(|(&a, &b)| a * b).sum::<T>() > T::zero() => s,
            _ => {
                let hn = h
                    .iter()
                    .flatten()
                    .fold(T::zero(), |m, &v| m.max(Float::abs(v)));
                let len = if hn > T::zero() { gnorm / hn } else { trust };
                g.iter().map(|&v| v / gnorm * len.min(trust)).collect()
            }
        };
        let slen = step.iter().map(|&v| v * v).sum::<T>().sqrt();
        if slen > trust {
            step.iter_mut().for_each(|v| *v = *v * trust / slen);
        }
        // near the optimum |P|² is flat below its round-off; there a smaller
        // gradient is what decides
        let slack = f * T::epsilon() * cst(64.0);
        let mut accepted = false;
        for _ in 0..60 {
            let trial = [x[0] + step[0], x[1] + step[1], x[2] + step[2]];
            let next = pairing.eval(trial);
            let fn_ = next.p.norm_sqr();
            if fn_ > f + slack || (fn_ >= f - slack && grad_norm(&next) < gnorm) {
                x = trial;
                cur = next;
                f = fn_;
                accepted = true;
                break;
            }
            step.iter_mut().for_each(|v| *v = *v * cst(0.5));
        }
        let slen = step.iter().map(|&v| v * v).sum::<T>().sqrt();
        if !accepted || slen < trust * cst(1e-14) {
            break;
        }
    }
    Ok(x)
}

/// `e^{-iθ} φ(· + x) - r₃` split into real and imaginary parts, with its norm.
pub fn fit_at<T: Real>(
    phi: &Field3<T>,
    gs: &GridGroundState<T>,
    x: [T; 3],
    theta: T,
) -> Result<ModulationFit<T>> {
    phi.check_same_grid(&gs.field)?;
    let back = phi.translate_phase([-x[0], -x[1], -x[2]], -theta);
    let w = back.sub(&gs.field)?;
    let grid = gs.grid().clone();
    let u = Field3::from_real(grid.clone(), &w.re())?;
    let v = Field3::from_real(grid, &w.im())?;
    let tau = T::PI() * cst(2.0);
    let mut gamma = theta % tau;
    if gamma < T::zero() {
        gamma = gamma + tau;
    }
    Ok(ModulationFit {
        x0: x,
        gamma,
        dist: norm_h1(&w),
        u,
        v,
        warnings: Vec::new(),
    })
}

/// Best phase/translation fit of `φ` to the orbit of `r₃`.
pub fn mod_distance<T: Real>(
    phi: &Field3<T>,
    gs: &GridGroundState<T>,
    opts: &FitOptions<T>,
) -> Result<ModulationFit<T>> {
    let pairing = Pairing::new(phi, gs)?;
    let mut warnings = Vec::new();
    let rel = Float::abs(phi.mass() - gs.mass2) / gs.mass2;
    if rel.as_f64() > opts.mass_tol {
        warnings.push(format!("mass mismatch: relative {:.3e}", rel.as_f64()));
    }
    let raw = norm_h1(&phi.sub(&gs.field)?);
    if raw > gs.norm() {
        warnings.push("initial distance exceeds the ground-state norm".into());
    }
    let trust = gs.half_width;
    let upsilon_of = |x: [T; 3]| -> T { pairing.value(x).norm() };

    let mut starts = vec![phi.centroid(), phi.argmax()];
    if let Some(w) = opts.warm_start {
        starts.insert(0, w);
    }
    let mut found: Vec<([T; 3], T)> = Vec::new();
    for s in &starts {
        let x = maximise(&pairing, *s, trust, opts.max_iter)?;
        found.push((x, upsilon_of(x)));
    }
    let norms2 = norm_h1(phi).powi(2) + gs.norm().powi(2);
    let dist_of = |abs_p: T| (norms2 - cst::<T>(2.0) * abs_p).max(T::zero()).sqrt();
    let spread = found
        .iter()
        .map(|f| dist_of(f.1))
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), d| {
            (lo.min(d), hi.max(d))
        });
    if spread.1 - spread.0 > cst(1e-6) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let q = gs.grid().half_width() * cst(0.25);
        let s = [0, 1, 2].map(|_| q * cst::<T>(rng.random_range(-1.0..1.0)));
        let x = maximise(&pairing, s, trust, opts.max_iter)?;
        found.push((x, upsilon_of(x)));
    }
    let (x0, _) = found
        .iter()
        .copied()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .ok_or_else(|| Error::Invalid("no modulation start".into()))?;
    let theta = pairing.value(x0).arg();
    let mut fit = fit_at(phi, gs, x0, theta)?;
    let limit = gs.grid().half_width() * cst(0.25);
    if x0.iter().map(|&v| v * v).sum::<T>().sqrt() > limit {
        warnings.push("translation beyond a quarter of the box: fit untrusted".into());
    }
    fit.warnings = warnings;
    Ok(fit)
}

/// `(v, r)_{H¹}` and `(u, ∂_j r)_{H¹}`, normalised by `‖w‖ ‖r‖`
/// (by `‖r‖²` when `w` is negligible).
pub fn orthogonality_residuals<T: Real>(
    fit: &ModulationFit<T>,
    gs: &GridGroundState<T>,
) -> Result<[T; 4]> {
    let rn = gs.norm();
    let denom = if fit.dist > rn * cst(1e-8) {
        fit.dist * rn
    } else {
        rn * rn
    };
    Ok([
        fit.v.inner_h1(&gs.field)? / denom,
        fit.u.inner_h1(gs.gradient(0))? / denom,
        fit.u.inner_h1(gs.gradient(1))? / denom,
        fit.u.inner_h1(gs.gradient(2))? / denom,
    ])
}
