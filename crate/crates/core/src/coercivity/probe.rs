//! Lower bound `⟨L₊u,u⟩ ≥ D‖u‖² - D₁‖w‖⁴ - D₂‖w‖³` on the mass sphere with
//! `u` orthogonal to the translation modes.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field3::Field3;
use crate::functional::{norm_h1, Integrals};
use crate::linalg::solve_dense;
use crate::modulation::{perturbation_direction, GridGroundState, PerturbationSpec};
use crate::scalar::{cst, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeOptions {
    pub seeds: Vec<u64>,
    /// `‖w‖ / ‖r‖` before the mass projection.
    pub scales: Vec<f64>,
    pub spec: PerturbationSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub seed: u64,
    pub scale: f64,
    pub qform: f64,
    pub u_norm2: f64,
    pub w_norm: f64,
    /// `|(u, r) + ½‖w‖₂²| / ‖r‖₂²`
    pub mass_identity: f64,
    /// Largest `|(u, ∂ⱼr)_{H¹}| / (‖u‖ ‖r‖)`.
    pub ortho: f64,
    /// `⟨L₊u,u⟩ - (D‖u‖² - D₁‖w‖⁴ - D₂‖w‖³)` for the fitted constants.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeFit {
    pub d: f64,
    pub d1: f64,
    pub d2: f64,
    pub samples: Vec<ProbeSample>,
    pub max_mass_identity: f64,
    pub holds: bool,
}

/// Removes the `∂ⱼr` components of `u` in the H¹ inner product.
fn project_translations<T: Real>(u: &Field3<T>, gs: &GridGroundState<T>) -> Result<Field3<T>> {
    let g = [gs.gradient(0), gs.gradient(1), gs.gradient(2)];
    let mut gram = vec![vec![T::zero(); 3]; 3];
    let mut rhs = vec![T::zero(); 3];
    for a in 0..3 {
        for b in 0..3 {
            gram[a][b] = g[a].inner_h1(g[b])?;
        }
        rhs[a] = u.inner_h1(g[a])?;
    }
    let c = solve_dense(gram, rhs)?;
    let mut out = u.clone();
    for a in 0..3 {
        out = out.axpy(Complex::new(-c[a], T::zero()), g[a])?;
    }
    Field3::from_real(gs.grid().clone(), &out.re())
}

/// Minimises `D₁·B + D₂·C` subject to `D₁ b_i + D₂ c_i ≥ g_i`, `D₁, D₂ ≥ 0`
/// by enumerating the vertices of the feasible region.
fn fit_remainder_constants(rows: &[(f64, f64, f64)]) -> (f64, f64) {
    let bmax = rows
        .iter()
        .map(|r| r.0)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let cmax = rows
        .iter()
        .map(|r| r.1)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let feasible = |d1: f64, d2: f64| {
        d1 >= 0.0
            && d2 >= 0.0
            && rows
                .iter()
                .all(|&(b, c, g)| d1 * b + d2 * c >= g - 1e-12 * g.abs())
    };
    let mut cands = vec![(0.0, 0.0)];
    for &(b, c, g) in rows {
        if g > 0.0 {
            cands.push((g / b, 0.0));
            cands.push((0.0, g / c));
        }
    }
    for (i, &(b1, c1, g1)) in rows.iter().enumerate() {
        for &(b2, c2, g2) in &rows[i + 1..] {
            let det = b1 * c2 - b2 * c1;
            if det.abs() > 1e-14 * (b1 * c2).abs().max((b2 * c1).abs()) {
                cands.push(((g1 * c2 - g2 * c1) / det, (b1 * g2 - b2 * g1) / det));
            }
        }
    }
    cands
        .into_iter()
        .filter(|&(d1, d2)| feasible(d1, d2))
        .min_by(|x, y| (x.0 / bmax + x.1 / cmax).total_cmp(&(y.0 / bmax + y.1 / cmax)))
        .unwrap_or((f64::INFINITY, f64::INFINITY))
}

/// Samples the lower bound and fits `(D, D₁, D₂)`. `D` is half the smallest
/// ratio `⟨L₊u,u⟩/‖u‖²` at the smallest scale; `D₁, D₂` are the least
/// constants making the inequality hold on every sample.
pub fn quadratic_form_probe<T: Real>(
    gs: &GridGroundState<T>,
    opts: &ProbeOptions,
) -> Result<ProbeFit> {
    opts.spec.validate()?;
    if opts.seeds.is_empty() || opts.scales.is_empty() || opts.scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Invalid(
            "probe needs seeds and positive scales".into(),
        ));
    }
    let rn = gs.norm();
    let r_mass = gs.mass2;
    let mut samples = Vec::new();
    for &seed in &opts.seeds {
        let w0 = perturbation_direction(gs, seed, &opts.spec)?;
        let u0 = project_translations(&Field3::from_real(gs.grid().clone(), &w0.re())?, gs)?;
        let v0 = Field3::from_real(gs.grid().clone(), &w0.im())?;
        let dir = u0.axpy(Complex::new(T::zero(), T::one()), &v0)?;
        let n0 = norm_h1(&dir);
        for &scale in &opts.scales {
            let s = cst::<T>(scale) * rn / n0;
            let raw = gs.field.axpy(Complex::new(s, T::zero()), &dir)?;
            let c = (r_mass / raw.mass()).sqrt();
            let w = raw.scale(Complex::new(c, T::zero())).sub(&gs.field)?;
            let u = Field3::from_real(gs.grid().clone(), &w.re())?;
            let ident = (u.inner_l2(&gs.field)? + cst::<T>(0.5) * w.mass()) / r_mass;
            let un = norm_h1(&u);
            let ortho = (0..3)
                .map(|j| {
                    u.inner_h1(gs.gradient(j))
                        .map(|x| (x / (un * rn)).as_f64().abs())
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            samples.push(ProbeSample {
                seed,
                scale,
                qform: gs.quad_form(true, &u.re())?.as_f64(),
                u_norm2: (un * un).as_f64(),
                w_norm: norm_h1(&w).as_f64(),
                mass_identity: ident.as_f64().abs(),
                ortho,
                slack: 0.0,
            });
        }
    }
    let smallest = opts.scales.iter().cloned().fold(f64::INFINITY, f64::min);
    let d = 0.5
        * samples
            .iter()
            .filter(|s| s.scale == smallest)
            .map(|s| s.qform / s.u_norm2)
            .fold(f64::INFINITY, f64::min);
    if !(d > 0.0) {
        return Err(Error::Infeasible(format!(
            "no positive D: smallest ⟨L₊u,u⟩/‖u‖² is {:e}",
            2.0 * d
        )));
    }
    let rows: Vec<(f64, f64, f64)> = samples
        .iter()
        .map(|s| (s.w_norm.powi(4), s.w_norm.powi(3), d * s.u_norm2 - s.qform))
        .collect();
    let (d1, d2) = fit_remainder_constants(&rows);
    if !(d1.is_finite() && d2.is_finite()) {
        return Err(Error::Infeasible("no finite remainder constants".into()));
    }
    for s in samples.iter_mut() {
        s.slack = s.qform - (d * s.u_norm2 - d1 * s.w_norm.powi(4) - d2 * s.w_norm.powi(3));
    }
    let holds = samples
        .iter()
        .all(|s| s.slack >= -1e-9 * s.qform.abs().max(1.0));
    Ok(ProbeFit {
        d,
        d1,
        d2,
        max_mass_identity: samples.iter().map(|s| s.mass_identity).fold(0.0, f64::max),
        samples,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::fit_remainder_constants;

    #[test]
    fn vertex_enumeration_finds_the_cheapest_feasible_pair() {
        // constraints d1 + d2 ≥ 1 and d1 ≥ 0.25 with equal weights
        let rows = [(1.0, 1.0, 1.0), (1.0, 0.0, 0.25)];
        let (d1, d2) = fit_remainder_constants(&rows);
        assert!(d1 + d2 >= 1.0 - 1e-12 && d1 >= 0.25 - 1e-12);
        assert!((d1 + d2 - 1.0).abs() < 1e-12);
        // nothing to absorb
        assert_eq!(fit_remainder_constants(&[(1.0, 1.0, -3.0)]), (0.0, 0.0));
    }
}
