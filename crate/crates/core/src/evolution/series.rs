use std::io::Write;

use serde::Serialize;

use super::{conserved, EvolveConfig, Propagator};
use crate::error::{Error, Result};
use crate::field3::Field3;
use crate::modulation::{
    mod_distance, sample_perturbation, FitOptions, GridGroundState, PerturbationSpec,
};
use crate::scalar::Real;

/// Diagnostics sampled along a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub mod_dist: Vec<f64>,
    pub center: Vec<[f64; 3]>,
    /// Reason the run stopped early; the samples before it are kept.
    pub aborted: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub dist0: f64,
    pub max_dist: f64,
    /// `max_dist / dist0`, infinite when the run starts on the orbit.
    pub dist_growth: f64,
}

impl TimeSeries {
    fn push(&mut self, t: f64, mass: f64, energy: f64, dist: f64, center: [f64; 3]) {
        self.times.push(t);
        self.mass.push(mass);
        self.energy.push(energy);
        self.mod_dist.push(dist);
        self.center.push(center);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest relative deviations from the first sample, and the distance
    /// statistics.
    pub fn summary(&self) -> Option<RunSummary> {
        let (&m0, &e0, &d0) = (
            self.mass.first()?,
            self.energy.first()?,
            self.mod_dist.first()?,
        );
        let drift =
            |v: &[f64], x0: f64| v.iter().map(|x| ((x - x0) / x0).abs()).fold(0.0, f64::max);
        let max_dist = self.mod_dist.iter().cloned().fold(0.0, f64::max);
        Some(RunSummary {
            mass_drift: drift(&self.mass, m0),
            energy_drift: drift(&self.energy, e0),
            dist0: d0,
            max_dist,
            dist_growth: if d0 > 0.0 {
                max_dist / d0
            } else {
                f64::INFINITY
            },
        })
    }

    /// Columns `t,mass,energy,mod_dist,cx,cy,cz`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,mass,energy,mod_dist,cx,cy,cz")?;
        for i in 0..self.len() {
            let c = self.center[i];
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                self.times[i], self.mass[i], self.energy[i], self.mod_dist[i], c[0], c[1], c[2]
            )?;
        }
        Ok(())
    }
}

/// Evolves `r₃` perturbed by `sample_perturbation(amplitude, seed)` (or
/// unperturbed when `amplitude` is zero) and samples the orbital distance
/// every `cfg.output_every`, warm-starting each fit from the previous one.
pub fn stability_run<T: Real>(
    gs: &GridGroundState<T>,
    amplitude: T,
    seed: u64,
    spec: &PerturbationSpec,
    cfg: &EvolveConfig<T>,
) -> Result<TimeSeries> {
    crate::error::check_subcritical(gs.p.as_f64())?;
    let phi = if amplitude == T::zero() {
        gs.field.clone()
    } else {
        sample_perturbation(gs, amplitude, seed, spec)?
    };
    Ok(evolve_series(gs, &phi, seed, cfg)?.0)
}

/// Evolves `phi` to `cfg.t_end` with the sampling of [`stability_run`] and
/// returns the series together with the last field reached.
pub fn evolve_series<T: Real>(
    gs: &GridGroundState<T>,
    phi: &Field3<T>,
    seed: u64,
    cfg: &EvolveConfig<T>,
) -> Result<(TimeSeries, Field3<T>)> {
    crate::error::check_subcritical(gs.p.as_f64())?;
    if cfg.epsilon != T::one() || cfg.potential.is_some() || cfg.p != gs.p {
        return Err(Error::Invalid(
            "stability runs use ε = 1, V = 0 and the ground-state exponent".into(),
        ));
    }
    let mut prop = Propagator::new(phi, cfg)?;
    let per_output = (cfg.output_every / cfg.dt)
        .round()
        .to_usize()
        .unwrap_or(0)
        .max(1);
    let total = (cfg.t_end / cfg.dt).round().to_usize().unwrap_or(0);
    let mut series = TimeSeries::default();
    let mut fit_opts = FitOptions::<T> {
        seed,
        ..FitOptions::default()
    };
    let sample = |prop: &Propagator<T>,
                  series: &mut TimeSeries,
                  fit_opts: &mut FitOptions<T>|
     -> Result<()> {
        let u = prop.field();
        let (m, e) = conserved(&u, cfg);
        let fit = mod_distance(&u, gs, fit_opts)?;
        fit_opts.warm_start = Some(fit.x0);
        series.push(
            prop.time().as_f64(),
            m.as_f64(),
            e.as_f64(),
            fit.dist.as_f64(),
            u.centroid().map(|c| c.as_f64()),
        );
        Ok(())
    };
    sample(&prop, &mut series, &mut fit_opts)?;
    let mut done = 0;
    while done < total {
        let n = per_output.min(total - done);
        if let Err(e) = prop.advance(n, cfg.dt) {
            series.aborted = Some(e.to_string());
            break;
        }
        done += n;
        sample(&prop, &mut series, &mut fit_opts)?;
    }
    Ok((series, prop.field()))
}
