use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::GridGroundState;
use crate::error::{Error, Result};
use crate::field3::Field3;
use crate::functional::{norm_h1, Integrals};
use crate::scalar::{cst, Real};

/// Recipe for random test fields: a sum of Gaussian-enveloped low-order
/// harmonics with complex coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    /// Relative weights of the `ℓ = 0, 1, 2` parts.
    pub sectors: [f64; 3],
    /// Envelope width in units of `√d`.
    pub width: f64,
    /// Envelope widths are drawn from `width · U(1 - jitter, 1 + jitter)`.
    pub jitter: f64,
    /// Standard deviation of the envelope centre, in units of `√d`.
    pub offset: f64,
    /// Number of enveloped terms.
    pub terms: usize,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        PerturbationSpec {
            sectors: [1.0, 1.0, 1.0],
            width: 1.0,
            jitter: 0.3,
            offset: 0.25,
            terms: 3,
        }
    }
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sectors.iter().all(|w| w.is_finite() && *w >= 0.0)
            && self.sectors.iter().sum::<f64>() > 0.0
            && self.width > 0.0
            && (0.0..1.0).contains(&self.jitter)
            && self.offset >= 0.0
            && self.terms > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("bad perturbation spec {self:?}")))
        }
    }
}

struct Term {
    centre: [f64; 3],
    sigma: f64,
    // 1, x, y, z, xy, yz, zx, x²-y², 2z²-x²-y²
    coef: [Complex<f64>; 9],
}

impl Term {
    fn eval(&self, x: [f64; 3]) -> Complex<f64> {
        let [a, b, c] = [
            x[0] - self.centre[0],
            x[1] - self.centre[1],
            x[2] - self.centre[2],
        ];
        let s2 = self.sigma * self.sigma;
        let env = (-(a * a + b * b + c * c) / (2.0 * s2)).exp();
        let basis = [
            1.0,
            a / self.sigma,
            b / self.sigma,
            c / self.sigma,
            a * b / s2,
            b * c / s2,
            c * a / s2,
            (a * a - b * b) / s2,
            (2.0 * c * c - a * a - b * b) / s2,
        ];
        self.coef
            .iter()
            .zip(basis)
            .map(|(k, v)| k * v)
            .sum::<Complex<f64>>()
            * env
    }
}

/// The raw direction `w₀`, unnormalised.
pub fn perturbation_direction<T: Real>(
    gs: &GridGroundState<T>,
    seed: u64,
    spec: &PerturbationSpec,
) -> Result<Field3<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let scale = gs.length_scale.as_f64();
    let gauss = |rng: &mut ChaCha8Rng| -> f64 { normal.sample(rng) };
    let weight = |ell: usize| spec.sectors[ell].sqrt();
    let terms: Vec<Term> = (0..spec.terms)
        .map(|_| {
            let centre = [0, 1, 2].map(|_| spec.offset * scale * gauss(&mut rng));
            let sigma =
                spec.width * scale * rng.random_range(1.0 - spec.jitter..=1.0 + spec.jitter);
            let mut coef = [Complex::new(0.0, 0.0); 9];
            for (i, c) in coef.iter_mut().enumerate() {
                let ell = match i {
                    0 => 0,
                    1..=3 => 1,
                    _ => 2,
                };
                *c = Complex::new(gauss(&mut rng), gauss(&mut rng)) * weight(ell);
            }
            Term {
                centre,
                sigma,
                coef,
            }
        })
        .collect();
    Ok(Field3::from_fn(gs.grid().clone(), |x, y, z| {
        let pt = [x.as_f64(), y.as_f64(), z.as_f64()];
        let v: Complex<f64> = terms.iter().map(|t| t.eval(pt)).sum();
        Complex::new(cst(v.re), cst(v.im))
    }))
}

/// `φ = c(r₃ + w₀)` with `‖w₀‖ = amplitude · ‖r₃‖` (H¹ norm) and `c`
/// restoring the mass of `r₃`.
pub fn sample_perturbation<T: Real>(
    gs: &GridGroundState<T>,
    amplitude: T,
    seed: u64,
    spec: &PerturbationSpec,
) -> Result<Field3<T>> {
    if !(amplitude > T::zero()) || !amplitude.is_finite() {
        return Err(Error::Invalid(format!(
            "perturbation amplitude must be positive, got {amplitude}"
        )));
    }
    let w0 = perturbation_direction(gs, seed, spec)?;
    let n = norm_h1(&w0);
    if !(n > T::zero()) {
        return Err(Error::Invalid(
            "perturbation direction vanishes on the grid".into(),
        ));
    }
    let phi = gs
        .field
        .axpy(Complex::new(amplitude * gs.norm() / n, T::zero()), &w0)?;
    let c = (gs.mass2 / phi.mass()).sqrt();
    Ok(phi.scale(Complex::new(c, T::zero())))
}
