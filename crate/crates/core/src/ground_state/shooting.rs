//! Initial guess for the classical soliton by shooting on `Q(0)`.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    /// `Q` crossed zero: `Q(0)` too large.
    Crossing,
    /// `Q` turned upward or blew up: `Q(0)` too small.
    Turning,
    /// Reached the outer radius without a decision.
    Undecided,
}

struct Shot {
    outcome: Outcome,
    /// `Q` at grid nodes `h, 2h, ...` up to the event.
    samples: Vec<f64>,
}

fn rhs(p: f64, lambda: f64, rho: f64, q: f64, dq: f64) -> (f64, f64) {
    let f = lambda * q - q.abs().powf(2.0 * p) * q;
    (dq, f - 2.0 * dq / rho)
}

fn rk4(p: f64, lambda: f64, rho: f64, y: (f64, f64), ds: f64) -> (f64, f64) {
    let k1 = rhs(p, lambda, rho, y.0, y.1);
    let k2 = rhs(
        p,
        lambda,
        rho + ds / 2.0,
        y.0 + ds / 2.0 * k1.0,
        y.1 + ds / 2.0 * k1.1,
    );
    let k3 = rhs(
        p,
        lambda,
        rho + ds / 2.0,
        y.0 + ds / 2.0 * k2.0,
        y.1 + ds / 2.0 * k2.1,
    );
    let k4 = rhs(p, lambda, rho + ds, y.0 + ds * k3.0, y.1 + ds * k3.1);
    (
        y.0 + ds / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        y.1 + ds / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

const SUBSTEPS: usize = 4;
const RHO_START: f64 = 1e-6;

fn shoot(p: f64, lambda: f64, q0: f64, h: f64, n: usize) -> Shot {
    let f0 = lambda * q0 - q0.powf(2.0 * p + 1.0);
    let mut rho = RHO_START;
    let mut y = (q0 + f0 * rho * rho / 6.0, f0 * rho / 3.0);
    let mut samples = Vec::with_capacity(n);
    for node in 1..=n {
        let target = node as f64 * h;
        let ds = (target - rho) / SUBSTEPS as f64;
        for _ in 0..SUBSTEPS {
            y = rk4(p, lambda, rho, y, ds);
            rho += ds;
            let outcome = if y.0 < 0.0 {
                Some(Outcome::Crossing)
            } else if y.1 > 0.0 || y.0 > 2.0 * q0 || !y.0.is_finite() {
                Some(Outcome::Turning)
            } else {
                None
            };
            if let Some(outcome) = outcome {
                return Shot { outcome, samples };
            }
        }
        rho = target;
        samples.push(y.0);
    }
    Shot {
        outcome: Outcome::Undecided,
        samples,
    }
}

/// Positive radial solution of `-ΔQ + λQ = Q^{2p+1}` sampled at `h, 2h, ..., nh`,
/// accurate near the origin and continued by the linearised decay law in the tail.
pub(crate) fn shooting_profile(p: f64, lambda: f64, h: f64, n: usize) -> Result<(f64, Vec<f64>)> {
    let mut lo = lambda.powf(0.5 / p) * (1.0 + 1e-6);
    if shoot(p, lambda, lo, h, n).outcome != Outcome::Turning {
        return Err(Error::Bracket(format!(
            "lower bracket Q(0) = {lo} does not turn"
        )));
    }
    let mut hi = 2.0 * lo;
    let mut tries = 0;
    while shoot(p, lambda, hi, h, n).outcome != Outcome::Crossing {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::Bracket("no crossing trajectory found".into()));
        }
    }
    let mut best = shoot(p, lambda, hi, h, n);
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        let shot = shoot(p, lambda, mid, h, n);
        match shot.outcome {
            Outcome::Crossing => hi = mid,
            Outcome::Turning => lo = mid,
            Outcome::Undecided => {
                lo = mid;
                hi = mid;
            }
        }
        best = shot;
    }
    let q0 = 0.5 * (lo + hi);
    if best.samples.len() < 8 {
        return Err(Error::Bracket(format!(
            "grid spacing {h} too coarse to resolve the soliton core"
        )));
    }
    // keep the trajectory only where it is still trustworthy
    let cut = best
        .samples
        .iter()
        .position(|&q| q < 1e-4 * q0)
        .unwrap_or(best.samples.len())
        .min(best.samples.len().saturating_sub(4));
    let cut = cut.max(1);
    let decay = lambda.sqrt();
    let rho_t = cut as f64 * h;
    let q_t = best.samples[cut - 1];
    let values = (1..=n)
        .map(|i| {
            if i <= cut {
                best.samples[i - 1]
            } else {
                let rho = i as f64 * h;
                q_t * rho_t / rho * (-decay * (rho - rho_t)).exp()
            }
        })
        .collect();
    Ok((q0, values))
}
