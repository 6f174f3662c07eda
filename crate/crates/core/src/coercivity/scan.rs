use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{delta_energy, gradient_remainder, quadratic_model};
use crate::error::{Error, Result};
use crate::modulation::{
    mod_distance, orthogonality_residuals, sample_perturbation, FitOptions, GridGroundState,
    PerturbationSpec,
};
use crate::scalar::{cst, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityRecord {
    pub seed: u64,
    pub amplitude: f64,
    pub dist: f64,
    pub delta_e: f64,
    pub qform: f64,
    /// Gradient remainder at `θ = 1`, for reference.
    pub j_exact: f64,
    pub ratio: f64,
    pub residual: f64,
    pub ortho_max: f64,
}

/// Least-squares fit of `log |ΔE - Q|` against `log dist`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub intercept: f64,
    pub std_err: f64,
    /// Two-sided 95% confidence interval of the exponent.
    pub ci95: [f64; 2],
    pub samples: usize,
}

/// Median of `ΔE / Q` over seeds, per amplitude, largest amplitude first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioTrend {
    pub amplitudes: Vec<f64>,
    pub medians: Vec<f64>,
    /// `|median - 1|` never grows as the amplitude shrinks.
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityReport {
    pub p: f64,
    pub grid_nodes: usize,
    pub norm_r: f64,
    pub records: Vec<CoercivityRecord>,
    /// Records dropped because their fit failed, with the reason.
    pub dropped: Vec<(u64, f64, String)>,
    /// `min ΔE / dist²` over records with `dist ≤ small_fraction · ‖r‖`.
    pub c_hat: f64,
    pub small_records: usize,
    pub min_delta_e: f64,
    pub exponent: ExponentFit,
    pub trend: RatioTrend,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanOptions {
    /// Perturbation sizes relative to `‖r‖`.
    pub amplitudes: Vec<f64>,
    pub seeds: Vec<u64>,
    pub spec: PerturbationSpec,
    pub small_fraction: f64,
}

impl ScanOptions {
    pub fn new(amplitudes: Vec<f64>, seeds: Vec<u64>) -> Self {
        ScanOptions {
            amplitudes,
            seeds,
            spec: PerturbationSpec::default(),
            small_fraction: 0.01,
        }
    }

    fn validate(&self) -> Result<()> {
        let hi = self
            .amplitudes
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let lo = self
            .amplitudes
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if self.seeds.is_empty() || self.amplitudes.len() < 3 {
            return Err(Error::Invalid(
                "scan needs seeds and at least three amplitudes".into(),
            ));
        }
        if !(lo > 0.0) || hi > 0.1 * (1.0 + 1e-12) || hi / lo < 100.0 * (1.0 - 1e-12) {
            return Err(Error::Invalid(format!(
                "amplitudes must span two decades below 0.1, got [{lo:e}, {hi:e}]"
            )));
        }
        self.spec.validate()
    }
}

/// `count` amplitudes spaced geometrically from `lo` to `hi`.
pub fn geometric_amplitudes(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && count >= 2) {
        return Err(Error::Invalid(format!(
            "bad amplitude range {lo}:{hi}:{count}"
        )));
    }
    let step = (hi / lo).ln() / (count - 1) as f64;
    Ok((0..count).map(|i| lo * (step * i as f64).exp()).collect())
}

fn record<T: Real>(
    gs: &GridGroundState<T>,
    seed: u64,
    amplitude: f64,
    spec: &PerturbationSpec,
) -> Result<CoercivityRecord> {
    let phi = sample_perturbation(gs, cst::<T>(amplitude), seed, spec)?;
    let fit = mod_distance(
        &phi,
        gs,
        &FitOptions {
            seed,
            ..FitOptions::default()
        },
    )?;
    let delta_e = delta_energy(&phi, gs)?.as_f64();
    let qform = quadratic_model(&fit, gs)?.as_f64();
    let j_exact = gradient_remainder(&fit, gs, T::one())?.as_f64();
    let ortho_max = orthogonality_residuals(&fit, gs)?
        .iter()
        .fold(0.0f64, |m, r| m.max(r.as_f64().abs()));
    let dist = fit.dist.as_f64();
    if !(dist > 0.0) {
        return Err(Error::Invalid("perturbation landed on the orbit".into()));
    }
    Ok(CoercivityRecord {
        seed,
        amplitude,
        dist,
        delta_e,
        qform,
        j_exact,
        ratio: delta_e / (dist * dist),
        residual: delta_e - qform,
        ortho_max,
    })
}

pub(crate) fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Invalid(
            "exponent fit needs at least three records".into(),
        ));
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Invalid(
            "exponent fit needs distinct distances".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let std_err = (sse / (nf - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, nf - 2.0)
        .map_err(|e| Error::Invalid(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(ExponentFit {
        exponent: slope,
        intercept,
        std_err,
        ci95: [slope - t * std_err, slope + t * std_err],
        samples: n,
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn ratio_trend(records: &[CoercivityRecord], amplitudes: &[f64]) -> RatioTrend {
    let mut amps = amplitudes.to_vec();
    amps.sort_by(|a, b| b.total_cmp(a));
    amps.dedup();
    let mut kept = Vec::new();
    let mut medians = Vec::new();
    for a in amps {
        let r: Vec<f64> = records
            .iter()
            .filter(|r| r.amplitude == a && r.qform > 0.0)
            .map(|r| r.delta_e / r.qform)
            .collect();
        if !r.is_empty() {
            kept.push(a);
            medians.push(median(r));
        }
    }
    let monotone = medians
        .windows(2)
        .all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs() + 1e-9);
    RatioTrend {
        amplitudes: kept,
        medians,
        monotone,
    }
}

/// Energy gap, quadratic model and distance over all `(seed, amplitude)`
/// pairs. Records run in parallel; a failed fit drops that record only.
pub fn remainder_scan<T: Real>(
    gs: &GridGroundState<T>,
    opts: &ScanOptions,
) -> Result<CoercivityReport> {
    opts.validate()?;
    let jobs: Vec<(u64, f64)> = opts
        .seeds
        .iter()
        .flat_map(|&s| opts.amplitudes.iter().map(move |&a| (s, a)))
        .collect();
    let outcomes: Vec<((u64, f64), Result<CoercivityRecord>)> = jobs
        .par_iter()
        .map(|&(s, a)| ((s, a), record(gs, s, a, &opts.spec)))
        .collect();
    let mut records = Vec::new();
    let mut dropped = Vec::new();
    for ((s, a), out) in outcomes {
        match out {
            Ok(r) => records.push(r),
            Err(e) => {
                warn!("record seed {s} amplitude {a:e} dropped: {e}");
                dropped.push((s, a, e.to_string()));
            }
        }
    }
    records.sort_by(|x, y| {
        x.seed
            .cmp(&y.seed)
            .then(x.amplitude.total_cmp(&y.amplitude))
    });
    let norm_r = gs.norm().as_f64();
    let small: Vec<&CoercivityRecord> = records
        .iter()
        .filter(|r| r.dist <= opts.small_fraction * norm_r)
        .collect();
    let c_hat = small.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let points: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.residual != 0.0)
        .map(|r| (r.dist.ln(), r.residual.abs().ln()))
        .collect();
    let exponent = fit_exponent(&points)?;
    let trend = ratio_trend(&records, &opts.amplitudes);
    Ok(CoercivityReport {
        p: gs.p.as_f64(),
        grid_nodes: gs.grid().nodes_per_axis(),
        norm_r,
        min_delta_e: records
            .iter()
            .map(|r| r.delta_e)
            .fold(f64::INFINITY, f64::min),
        small_records: small.len(),
        c_hat,
        records,
        dropped,
        exponent,
        trend,
    })
}
