//! Flat JSON run configuration with command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{check_subcritical, Error, Result};

/// Environment variable naming the default output root.
pub const OUTPUT_ENV: &str = "KIRCHHOFF_OUT";

/// Every tunable of a run. Lengths are in units of the ground-state length
/// scale `√d`; perturbation amplitudes are relative to `‖r‖`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub p: f64,
    /// Exponents swept by the multi-exponent checks.
    pub exponents: Vec<f64>,
    /// Exponents on which the mass-of-λ monotonicity is tested.
    pub monotone_exponents: Vec<f64>,
    pub radial_radius: f64,
    pub radial_nodes: usize,
    pub box_half_width: f64,
    pub box_nodes: usize,
    /// Coarser box of the refinement comparison.
    pub coarse_box_nodes: usize,
    pub oracle_half_width: f64,
    pub oracle_box_nodes: usize,
    pub seeds: Vec<u64>,
    pub oracle_seeds: usize,
    pub evolve_seeds: usize,
    pub probe_seeds: usize,
    pub amp_min: f64,
    pub amp_max: f64,
    pub amp_count: usize,
    pub probe_scales: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub output_every: f64,
    pub perturb: f64,
    pub epsilon: f64,
    pub output_dir: Option<PathBuf>,

    pub tol_profile_agreement: f64,
    pub tol_lim_residual: f64,
    pub tol_multiplier: f64,
    pub tol_pohozaev: f64,
    pub tol_d_identity: f64,
    pub tol_kernel: f64,
    pub min_overlap: f64,
    pub tol_infimum_zero: f64,
    pub tol_refinement: f64,
    pub tol_operator_identity: f64,
    pub tol_scalar_identity: f64,
    pub tol_orbit_x: f64,
    pub tol_orbit_theta: f64,
    pub tol_orthogonality: f64,
    pub tol_oracle: f64,
    pub min_small_records: usize,
    pub small_fraction: f64,
    pub ratio_band: f64,
    pub tol_c_hat_refinement: f64,
    pub tol_mass_identity: f64,
    pub tol_mass_drift: f64,
    pub tol_energy_drift: f64,
    pub tol_reversibility: f64,
    pub tol_zero_orbit: f64,
    pub max_dist_growth: f64,

    pub budget_groundstate_s: f64,
    pub budget_spectrum_s: f64,
    pub budget_coercivity_s: f64,
    pub budget_dynamics_s: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            p: 0.5,
            exponents: vec![0.2, 0.4, 0.6],
            monotone_exponents: vec![0.2, 0.4, 0.5, 0.6, 0.65],
            radial_radius: 30.0,
            radial_nodes: 4096,
            box_half_width: 12.0,
            box_nodes: 64,
            coarse_box_nodes: 48,
            oracle_half_width: 6.0,
            oracle_box_nodes: 16,
            seeds: (1..=32).collect(),
            oracle_seeds: 20,
            evolve_seeds: 8,
            probe_seeds: 8,
            amp_min: 1e-3,
            amp_max: 1e-1,
            amp_count: 8,
            probe_scales: vec![1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
            dt: 1e-3,
            t_end: 20.0,
            output_every: 0.1,
            perturb: 1e-2,
            epsilon: 1.0,
            output_dir: None,

            tol_profile_agreement: 1e-5,
            tol_lim_residual: 1e-7,
            tol_multiplier: 1e-4,
            tol_pohozaev: 1e-6,
            tol_d_identity: 1e-12,
            tol_kernel: 1e-6,
            min_overlap: 0.9999,
            tol_infimum_zero: 1e-4,
            tol_refinement: 0.10,
            tol_operator_identity: 1e-6,
            tol_scalar_identity: 1e-8,
            tol_orbit_x: 1e-6,
            tol_orbit_theta: 1e-8,
            tol_orthogonality: 1e-7,
            tol_oracle: 1e-4,
            min_small_records: 60,
            small_fraction: 0.01,
            ratio_band: 0.1,
            tol_c_hat_refinement: 0.25,
            tol_mass_identity: 1e-10,
            tol_mass_drift: 1e-10,
            tol_energy_drift: 1e-8,
            tol_reversibility: 1e-10,
            tol_zero_orbit: 1e-6,
            max_dist_growth: 3.0,

            budget_groundstate_s: 60.0,
            budget_spectrum_s: 120.0,
            budget_coercivity_s: 480.0,
            budget_dynamics_s: 240.0,
        }
    }
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        check_subcritical(self.p)?;
        for &q in self.exponents.iter().chain(&self.monotone_exponents) {
            check_subcritical(q)?;
        }
        for (name, m) in [
            ("box_nodes", self.box_nodes),
            ("coarse_box_nodes", self.coarse_box_nodes),
            ("oracle_box_nodes", self.oracle_box_nodes),
        ] {
            if m < 16 || (m % 2 != 0) || (!m.is_power_of_two() && name == "box_nodes") {
                return Err(config_err(format!(
                    "{name} must be a power of two ≥ 16, got {m}"
                )));
            }
        }
        if !self.radial_nodes.is_power_of_two() || self.radial_nodes < 16 {
            return Err(config_err(format!(
                "radial_nodes must be a power of two ≥ 16, got {}",
                self.radial_nodes
            )));
        }
        let positive = [
            ("radial_radius", self.radial_radius),
            ("box_half_width", self.box_half_width),
            ("oracle_half_width", self.oracle_half_width),
            ("amp_min", self.amp_min),
            ("amp_max", self.amp_max),
            ("dt", self.dt),
            ("t_end", self.t_end),
            ("output_every", self.output_every),
            ("perturb", self.perturb),
            ("epsilon", self.epsilon),
            ("tol_profile_agreement", self.tol_profile_agreement),
            ("tol_lim_residual", self.tol_lim_residual),
            ("tol_multiplier", self.tol_multiplier),
            ("tol_pohozaev", self.tol_pohozaev),
            ("tol_d_identity", self.tol_d_identity),
            ("tol_kernel", self.tol_kernel),
            ("min_overlap", self.min_overlap),
            ("tol_infimum_zero", self.tol_infimum_zero),
            ("tol_refinement", self.tol_refinement),
            ("tol_operator_identity", self.tol_operator_identity),
            ("tol_scalar_identity", self.tol_scalar_identity),
            ("tol_orbit_x", self.tol_orbit_x),
            ("tol_orbit_theta", self.tol_orbit_theta),
            ("tol_orthogonality", self.tol_orthogonality),
            ("tol_oracle", self.tol_oracle),
            ("small_fraction", self.small_fraction),
            ("ratio_band", self.ratio_band),
            ("tol_c_hat_refinement", self.tol_c_hat_refinement),
            ("tol_mass_identity", self.tol_mass_identity),
            ("tol_mass_drift", self.tol_mass_drift),
            ("tol_energy_drift", self.tol_energy_drift),
            ("tol_reversibility", self.tol_reversibility),
            ("tol_zero_orbit", self.tol_zero_orbit),
            ("max_dist_growth", self.max_dist_growth),
            ("budget_groundstate_s", self.budget_groundstate_s),
            ("budget_spectrum_s", self.budget_spectrum_s),
            ("budget_coercivity_s", self.budget_coercivity_s),
            ("budget_dynamics_s", self.budget_dynamics_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_err(format!("{name} must be positive, got {v}")));
            }
        }
        if self.amp_max <= self.amp_min || self.amp_count < 3 {
            return Err(config_err(
                "amplitude range needs amp_min < amp_max and amp_count ≥ 3",
            ));
        }
        if self.t_end < self.dt {
            return Err(config_err("t_end must be at least dt"));
        }
        if self.seeds.is_empty() {
            return Err(config_err("seed set is empty"));
        }
        for (name, k) in [
            ("oracle_seeds", self.oracle_seeds),
            ("evolve_seeds", self.evolve_seeds),
            ("probe_seeds", self.probe_seeds),
        ] {
            if k == 0 || k > self.seeds.len() {
                return Err(config_err(format!(
                    "{name} must lie in 1..={}, got {k}",
                    self.seeds.len()
                )));
            }
        }
        if self.probe_scales.is_empty() || self.probe_scales.iter().any(|s| !(*s > 0.0)) {
            return Err(config_err("probe_scales must be positive"));
        }
        Ok(())
    }

    /// Output directory: the configured one, else `$KIRCHHOFF_OUT`, else `out`.
    pub fn output_root(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Reads `path` (if any), applies `overrides` on top and validates. Each
/// override value is parsed as JSON when possible and kept as a string
/// otherwise, so `--set p=0.4` and `--set output_dir=runs` both work.
pub fn parse_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut map = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| config_err(format!("{}: {e}", p.display())))?;
            if text.trim().is_empty() {
                Map::new()
            } else {
                match serde_json::from_str::<Value>(&text)
                    .map_err(|e| config_err(format!("{}: {e}", p.display())))?
                {
                    Value::Object(m) => m,
                    _ => return Err(config_err("configuration must be a flat JSON object")),
                }
            }
        }
        None => Map::new(),
    };
    if let Some((k, _)) = map.iter().find(|(_, v)| v.is_object()) {
        return Err(config_err(format!(
            "key {k}: nested objects are not allowed"
        )));
    }
    for (k, v) in overrides {
        let value = serde_json::from_str::<Value>(v).unwrap_or_else(|_| Value::String(v.clone()));
        map.insert(k.clone(), value);
    }
    let cfg: RunConfig =
        serde_json::from_value(Value::Object(map)).map_err(|e| config_err(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
