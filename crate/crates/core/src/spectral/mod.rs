//! Linearised operators `L₊`, `L₋` about the ground state, one spherical-harmonic
//! sector at a time.
//!
//! In sector `ℓ` both act on radial coefficients as
//! `-a(∂ρρ + (2/ρ)∂ρ - ℓ(ℓ+1)/ρ²) + 1 - c r^{2p}`, `a = ½(1 + ‖∇r‖²)`, with
//! `c = 2p + 1` for `L₊` and `c = 1` for `L₋`. `L₊` in sector 0 also carries
//! the rank-one term `φ ↦ (∫∇r·∇φ)(-Δr)`.

mod identities;

pub use identities::{identity_checks, IdentityReport};

use num_traits::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ground_state::GroundState;
use crate::linalg::{lowest_eigenpairs, LanczosOptions, RankOne, SymBand};
use crate::radial::{self, derivative, neg_laplacian, stiffness, RadialProfile};
use crate::scalar::{cst, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum Pairing {
    L2,
    H1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum NormKind {
    L2,
    H1,
}

/// Highest sector the operators are assembled for.
pub const MAX_SECTOR: usize = 2;

/// Weighted discretisation `W L` of one sector.
#[derive(Clone, Debug)]
pub struct SectorOperator<T> {
    pub ell: usize,
    pub kind: Kind,
    /// `a K_ℓ + W diag(1 - c r^{2p})`, symmetric.
    pub matrix: SymBand<T>,
    /// `b` with the nonlocal term `b bᵀ` (`b = K₀ r`), only for `L₊`, `ℓ = 0`.
    pub rank_one: Option<Vec<T>>,
    weights: Vec<T>,
    potential: Vec<T>,
    grid: radial::RadialGrid<T>,
}

fn potential<T: Real>(gs: &GroundState<T>, kind: Kind) -> Vec<T> {
    let two = cst::<T>(2.0);
    let c = match kind {
        Kind::Plus => two * gs.p + T::one(),
        Kind::Minus => T::one(),
    };
    gs.r.values()
        .iter()
        .map(|&v| T::one() - c * Float::abs(v).powf(two * gs.p))
        .collect()
}

/// Relative Eq. (lim) residual above which a ground state is refused.
pub const CONVERGENCE_GUARD: f64 = 1e-5;

pub fn assemble_sector<T: Real>(
    gs: &GroundState<T>,
    ell: usize,
    kind: Kind,
) -> Result<SectorOperator<T>> {
    if ell > MAX_SECTOR {
        return Err(Error::Invalid(format!("sector {ell} exceeds {MAX_SECTOR}")));
    }
    let res = crate::ground_state::residual_lim(gs).as_f64();
    let scale = gs.r.values()[0].as_f64();
    if !(res < CONVERGENCE_GUARD * scale) {
        return Err(Error::NonConvergence {
            what: "ground state (refused by operator assembly)",
            iterations: 0,
            residual: res,
        });
    }
    let grid = *gs.grid();
    let w = grid.weights();
    let v = potential(gs, kind);
    let mut matrix = stiffness(&grid, ell).scaled(gs.diffusion());
    let wv: Vec<T> = w.iter().zip(&v).map(|(&a, &b)| a * b).collect();
    matrix.add_diagonal(&wv);
    let rank_one = if kind == Kind::Plus && ell == 0 {
        Some(stiffness(&grid, 0).matvec(gs.r.values()))
    } else {
        None
    };
    Ok(SectorOperator {
        ell,
        kind,
        matrix,
        rank_one,
        weights: w,
        potential: v,
        grid,
    })
}

impl<T: Real> SectorOperator<T> {
    /// `W L f` (the weak form), as a vector.
    pub fn apply_weak(&self, f: &[T]) -> Vec<T> {
        let mut y = self.matrix.matvec(f);
        if let Some(b) = &self.rank_one {
            let s: T = b.iter().zip(f).map(|(&x, &y)| x * y).sum();
            for (yi, &bi) in y.iter_mut().zip(b) {
                *yi = *yi + s * bi;
            }
        }
        y
    }

    /// `L f` pointwise.
    pub fn apply(&self, f: &RadialProfile<T>) -> Result<RadialProfile<T>> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch(
                "profile and operator grids differ".into(),
            ));
        }
        let y = self.apply_weak(f.values());
        RadialProfile::new(
            self.grid,
            y.iter().zip(&self.weights).map(|(&a, &w)| a / w).collect(),
        )
    }

    /// `⟨L f, g⟩` with the quadrature weights.
    pub fn bilinear(&self, f: &[T], g: &[T]) -> T {
        self.apply_weak(f).iter().zip(g).map(|(&a, &b)| a * b).sum()
    }

    pub fn grid(&self) -> &radial::RadialGrid<T> {
        &self.grid
    }

    fn denominator(&self, norm: NormKind) -> SymBand<T> {
        let w = SymBand::diagonal(&self.weights);
        match norm {
            NormKind::L2 => w,
            NormKind::H1 => w.add_scaled(cst(0.5), &stiffness(&self.grid, self.ell)),
        }
    }

    fn shift_hint(&self, norm: NormKind) -> T {
        let vmin = self.potential.iter().fold(T::infinity(), |m, &x| m.min(x));
        match norm {
            NormKind::L2 => vmin - T::one(),
            NormKind::H1 => vmin.min(T::zero()) - T::one(),
        }
    }

    fn rank_terms(&self) -> Vec<RankOne<T>> {
        self.rank_one
            .iter()
            .map(|b| RankOne {
                coef: T::one(),
                vec: b.clone(),
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct Eigen<T> {
    pub value: T,
    /// `‖·‖₂`-normalised eigenfunction.
    pub vector: RadialProfile<T>,
}

fn lanczos_opts(k: usize) -> LanczosOptions {
    LanczosOptions {
        k,
        tol: 1e-11,
        max_iter: 600,
        seed: 0x5eed_0001,
    }
}

/// Lowest `k ≤ 12` eigenpairs, ascending.
pub fn eig_sector<T: Real>(op: &SectorOperator<T>, k: usize) -> Result<Vec<Eigen<T>>> {
    if k == 0 || k > 12 {
        return Err(Error::Invalid(format!(
            "requested {k} eigenpairs, allowed 1..=12"
        )));
    }
    let b = op.denominator(NormKind::L2);
    let pairs = lowest_eigenpairs(
        &op.matrix,
        &op.rank_terms(),
        &b,
        &[],
        op.shift_hint(NormKind::L2),
        lanczos_opts(k),
    )?;
    pairs
        .into_iter()
        .map(|p| {
            Ok(Eigen {
                value: p.value,
                vector: RadialProfile::new(op.grid, p.vector)?,
            })
        })
        .collect()
}

/// Quadratic form `⟨L f, f⟩` of a sector-`ell` coefficient, by quadrature
/// composition (no assembled matrix).
pub fn quad_form_radial<T: Real>(
    gs: &GroundState<T>,
    kind: Kind,
    f: &RadialProfile<T>,
    ell: usize,
) -> Result<T> {
    f.check_same_grid(&gs.r)?;
    let kin = radial::grad_inner_sector(f, f, ell)?;
    let v = potential(gs, kind);
    let pot: T = f
        .grid()
        .weights()
        .iter()
        .zip(&v)
        .zip(f.values())
        .map(|((&w, &vi), &x)| w * vi * x * x)
        .sum();
    let mut q = gs.diffusion() * kin + pot;
    if kind == Kind::Plus && ell == 0 {
        let s = radial::grad_inner(&gs.r, f)?;
        q = q + s * s;
    }
    Ok(q)
}

/// One orthogonality condition of a constrained Rayleigh quotient.
#[derive(Clone, Debug)]
pub struct Constraint<T> {
    /// Radial coefficient of the constraint function.
    pub profile: RadialProfile<T>,
    /// Sector the constraint function lives in.
    pub sector: usize,
    pub pairing: Pairing,
    pub label: String,
}

impl<T: Real> Constraint<T> {
    /// `(u, r)` in the given pairing.
    pub fn ground(gs: &GroundState<T>, pairing: Pairing) -> Self {
        Constraint {
            profile: gs.r.clone(),
            sector: 0,
            pairing,
            label: format!("r/{pairing:?}"),
        }
    }

    /// `(u, ∂ⱼr)`, `j = 1..3`: one radial condition in sector 1.
    pub fn translations(gs: &GroundState<T>, pairing: Pairing) -> Self {
        Constraint {
            profile: derivative(&gs.r),
            sector: 1,
            pairing,
            label: format!("d_j r/{pairing:?}"),
        }
    }

    fn dual(&self, ell: usize) -> Vec<T> {
        let g = self.profile.grid();
        let w = g.weights();
        let wc: Vec<T> = w
            .iter()
            .zip(self.profile.values())
            .map(|(&a, &b)| a * b)
            .collect();
        match self.pairing {
            Pairing::L2 => wc,
            Pairing::H1 => {
                let kc = stiffness(g, ell).matvec(self.profile.values());
                wc.iter()
                    .zip(&kc)
                    .map(|(&a, &b)| a + cst::<T>(0.5) * b)
                    .collect()
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SectorInf {
    pub ell: usize,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstrainedInf {
    pub kind: Kind,
    pub norm: NormKind,
    pub constraints: Vec<String>,
    /// Infimum over sectors `0..=2`; higher sectors only add centrifugal energy.
    pub value: f64,
    pub per_sector: Vec<SectorInf>,
}

/// Minimum Rayleigh quotient of `⟨L u, u⟩ / ‖u‖²` over `u` orthogonal to the constraints.
pub fn constrained_inf<T: Real>(
    gs: &GroundState<T>,
    kind: Kind,
    constraints: &[Constraint<T>],
    norm: NormKind,
) -> Result<ConstrainedInf> {
    let mut per_sector = Vec::new();
    for ell in 0..=MAX_SECTOR {
        let op = assemble_sector(gs, ell, kind)?;
        let cons: Vec<Vec<T>> = constraints
            .iter()
            .filter(|c| c.sector == ell)
            .map(|c| {
                c.profile.check_same_grid(&gs.r)?;
                Ok(c.dual(ell))
            })
            .collect::<Result<_>>()?;
        let b = op.denominator(norm);
        let pairs = lowest_eigenpairs(
            &op.matrix,
            &op.rank_terms(),
            &b,
            &cons,
            op.shift_hint(norm),
            lanczos_opts(1),
        )?;
        per_sector.push(SectorInf {
            ell,
            value: pairs[0].value.as_f64(),
        });
    }
    let value = per_sector
        .iter()
        .map(|s| s.value)
        .fold(f64::INFINITY, f64::min);
    Ok(ConstrainedInf {
        kind,
        norm,
        constraints: constraints.iter().map(|c| c.label.clone()).collect(),
        value,
        per_sector,
    })
}

/// `|⟨f, g⟩| / (‖f‖₂ ‖g‖₂)`.
pub fn overlap<T: Real>(f: &RadialProfile<T>, g: &RadialProfile<T>) -> Result<T> {
    let fg = radial::inner_l2(f, g)?;
    Ok(Float::abs(fg) / (radial::mass(f) * radial::mass(g)).sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct SectorSpectrum {
    pub ell: usize,
    pub kind: Kind,
    pub eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelReport {
    /// `‖L₋ r‖_∞`
    pub minus_r: f64,
    /// `‖L₊ r'‖_∞` in sector 1.
    pub plus_dr: f64,
    pub minus_lowest: f64,
    pub minus_second: f64,
    pub minus_overlap_r: f64,
    pub plus1_lowest: f64,
    pub plus1_overlap_dr: f64,
    pub plus0_negative_count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub sectors: Vec<SectorSpectrum>,
    pub kernel: KernelReport,
    /// Constrained infima: `{(u,r)=0}` for `L₊` (L2 norm), `V₀` for `L₊`
    /// (H¹ norm) and `{(v,r)_{H¹}=0}` for `L₋` (H¹ norm).
    pub infima: Vec<ConstrainedInf>,
    pub identities: IdentityReport,
}

/// Lowest eigenvalues of both operators in the requested sectors plus kernel data.
pub fn spectral_report<T: Real>(
    gs: &GroundState<T>,
    sectors: &[usize],
    k: usize,
) -> Result<SpectralReport> {
    let mut out = Vec::new();
    for &ell in sectors {
        for kind in [Kind::Plus, Kind::Minus] {
            let op = assemble_sector(gs, ell, kind)?;
            let eig = eig_sector(&op, k)?;
            out.push(SectorSpectrum {
                ell,
                kind,
                eigenvalues: eig.iter().map(|e| e.value.as_f64()).collect(),
            });
        }
    }
    Ok(SpectralReport {
        sectors: out,
        kernel: kernel_report(gs)?,
        infima: constrained_infima(gs)?,
        identities: identity_checks(gs)?,
    })
}

pub fn kernel_report<T: Real>(gs: &GroundState<T>) -> Result<KernelReport> {
    let minus0 = assemble_sector(gs, 0, Kind::Minus)?;
    let plus1 = assemble_sector(gs, 1, Kind::Plus)?;
    let plus0 = assemble_sector(gs, 0, Kind::Plus)?;
    let dr = derivative(&gs.r);
    let sup = |p: RadialProfile<T>| crate::scalar::max_abs(p.values()).as_f64();
    let em = eig_sector(&minus0, 2)?;
    let ep1 = eig_sector(&plus1, 1)?;
    let ep0 = eig_sector(&plus0, 12)?;
    Ok(KernelReport {
        minus_r: sup(minus0.apply(&gs.r)?),
        plus_dr: sup(plus1.apply(&dr)?),
        minus_lowest: em[0].value.as_f64(),
        minus_second: em[1].value.as_f64(),
        minus_overlap_r: overlap(&em[0].vector, &gs.r)?.as_f64(),
        plus1_lowest: ep1[0].value.as_f64(),
        plus1_overlap_dr: overlap(&ep1[0].vector, &dr)?.as_f64(),
        plus0_negative_count: ep0.iter().filter(|e| e.value < T::zero()).count(),
    })
}

pub fn constrained_infima<T: Real>(gs: &GroundState<T>) -> Result<Vec<ConstrainedInf>> {
    Ok(vec![
        constrained_inf(
            gs,
            Kind::Plus,
            &[Constraint::ground(gs, Pairing::L2)],
            NormKind::L2,
        )?,
        constrained_inf(
            gs,
            Kind::Plus,
            &[
                Constraint::ground(gs, Pairing::L2),
                Constraint::translations(gs, Pairing::H1),
            ],
            NormKind::H1,
        )?,
        constrained_inf(
            gs,
            Kind::Minus,
            &[Constraint::ground(gs, Pairing::H1)],
            NormKind::H1,
        )?,
    ])
}

/// `-Δr` as a profile (used by identity checks and tests).
pub fn neg_laplacian_r<T: Real>(gs: &GroundState<T>) -> RadialProfile<T> {
    RadialProfile::new(*gs.grid(), neg_laplacian(&gs.r, 0)).expect("finite laplacian")
}

#[cfg(test)]
mod tests;
