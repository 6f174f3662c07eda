use serde::Serialize;

use super::{assemble_sector, neg_laplacian_r, Kind};
use crate::error::Result;
use crate::ground_state::GroundState;
use crate::radial::{dilation, grad_inner, inner_l2, RadialProfile};
use crate::scalar::{cst, max_abs, Real};

/// Operator residuals are taken over nodes at least two stencil widths inside `R`.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    /// `‖L₊(x·∇r) + (1 + ½G)Δr‖_∞`
    pub dilation_residual: f64,
    /// `‖L₊r - ([p + (p-1)G]Δr - 2pr)‖_∞`
    pub ground_residual: f64,
    /// `‖L₊(r/2p + c(x·∇r)) + r‖_∞`, `c = (p + (p-1)G) / (p(2+G))`
    pub combined_residual: f64,
    /// relative error of `∫∇r·∇(x·∇r) = -½G`
    pub grad_dilation_rel: f64,
    /// relative error of `∫(x·∇r) r = -(3/2)‖r‖²`
    pub mass_dilation_rel: f64,
    /// `(2 - 3p) + (4 - 3p)G`
    pub bracket: f64,
    pub bracket_positive: bool,
}

pub fn identity_checks<T: Real>(gs: &GroundState<T>) -> Result<IdentityReport> {
    let op = assemble_sector(gs, 0, Kind::Plus)?;
    let grid = *gs.grid();
    let r = &gs.r;
    let xr = dilation(r);
    let lap: Vec<T> = neg_laplacian_r(gs).values().iter().map(|&v| -v).collect();
    let g = gs.gnorm2;
    let p = gs.p;
    let one = T::one();
    let half = cst::<T>(0.5);
    let two = cst::<T>(2.0);

    // The outermost stencil widths see the artificial Dirichlet wall, where
    // differentiating the O(e^{-R}) boundary value of r amplifies it by h^{-3}.
    let interior = grid.len() - 2 * grid.order().half_width();
    let sup_diff = |a: &RadialProfile<T>, b: &dyn Fn(usize) -> T| -> f64 {
        let d: Vec<T> = a.values()[..interior]
            .iter()
            .enumerate()
            .map(|(i, &x)| x - b(i))
            .collect();
        max_abs(&d).as_f64()
    };

    let l_xr = op.apply(&xr)?;
    let dilation_residual = sup_diff(&l_xr, &|i| -(one + half * g) * lap[i]);

    let l_r = op.apply(r)?;
    let coef = p + (p - one) * g;
    let ground_residual = sup_diff(&l_r, &|i| coef * lap[i] - two * p * r.values()[i]);

    let c = coef / (p * (two + g));
    let mix = RadialProfile::new(
        grid,
        r.values()
            .iter()
            .zip(xr.values())
            .map(|(&a, &b)| a / (two * p) + c * b)
            .collect(),
    )?;
    let l_mix = op.apply(&mix)?;
    let combined_residual = sup_diff(&l_mix, &|i| -r.values()[i]);

    let gd = grad_inner(r, &xr)?.as_f64();
    let md = inner_l2(&xr, r)?.as_f64();
    let gf = g.as_f64();
    let mf = gs.mass2.as_f64();
    let pf = p.as_f64();
    let bracket = (2.0 - 3.0 * pf) + (4.0 - 3.0 * pf) * gf;
    Ok(IdentityReport {
        dilation_residual,
        ground_residual,
        combined_residual,
        grad_dilation_rel: (gd + 0.5 * gf).abs() / (0.5 * gf),
        mass_dilation_rel: (md + 1.5 * mf).abs() / (1.5 * mf),
        bracket,
        bracket_positive: bracket > 0.0,
    })
}
