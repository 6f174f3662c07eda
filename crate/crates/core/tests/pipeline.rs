use std::sync::OnceLock;

use kirchhoff_core::coercivity::{delta_energy, quadratic_model};
use kirchhoff_core::evolution::{conserved, stability_run, EvolveConfig, Propagator};
use kirchhoff_core::field3::CartGrid3;
use kirchhoff_core::ground_state::{rescale_to_kirchhoff, solve_nls_soliton, GroundState};
use kirchhoff_core::modulation::{
    mod_distance, sample_perturbation, FitOptions, GridGroundState, PerturbationSpec,
};
use kirchhoff_core::radial::RadialGrid;
use proptest::prelude::*;

fn radial() -> &'static GroundState<f64> {
    static GS: OnceLock<GroundState<f64>> = OnceLock::new();
    GS.get_or_init(|| {
        let grid = RadialGrid::new(30.0, 2048).unwrap();
        rescale_to_kirchhoff(&solve_nls_soliton(0.5, &grid).unwrap()).unwrap()
    })
}

fn state() -> &'static GridGroundState<f64> {
    static S: OnceLock<GridGroundState<f64>> = OnceLock::new();
    S.get_or_init(|| {
        let gs = radial();
        let grid = CartGrid3::new(8.0 * gs.length_scale(), 32).unwrap();
        GridGroundState::new(gs, &grid).unwrap()
    })
}

#[test]
fn box_state_carries_the_radial_scalars() {
    let (gs, s) = (radial(), state());
    assert!(((s.mass2 - gs.mass2) / gs.mass2).abs() < 1e-10);
    assert!(((s.energy - gs.energy) / gs.energy).abs() < 1e-4);
    assert!((s.lambda - 1.0).abs() < 1e-3);
}

#[test]
fn small_perturbation_gap_matches_the_quadratic_model() {
    let s = state();
    let phi = sample_perturbation(s, 2e-3, 3, &PerturbationSpec::default()).unwrap();
    let fit = mod_distance(&phi, s, &FitOptions::default()).unwrap();
    let de = delta_energy(&phi, s).unwrap();
    let q = quadratic_model(&fit, s).unwrap();
    assert!(de > 0.0);
    assert!((de / q - 1.0).abs() < 0.05, "{de} vs {q}");
}

#[test]
fn short_run_stays_near_the_orbit() {
    let s = state();
    let mut cfg = EvolveConfig::new(0.5, 1e-3, 0.2);
    cfg.output_every = 0.05;
    let series = stability_run(s, 1e-2, 4, &PerturbationSpec::default(), &cfg).unwrap();
    assert_eq!(series.len(), 5);
    assert!(series.aborted.is_none());
    let sum = series.summary().unwrap();
    assert!(sum.mass_drift < 1e-11);
    assert!(sum.energy_drift < 1e-7);
    assert!(sum.dist_growth < 3.0);
    assert!((series.times[4] - 0.2).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn fit_recovers_any_orbit_member(
        x in prop::array::uniform3(-0.4f64..0.4),
        theta in 0.0f64..std::f64::consts::TAU,
    ) {
        let s = state();
        let shift = x.map(|c| c * s.length_scale);
        let fit = mod_distance(&s.field.translate_phase(shift, theta), s, &FitOptions::default()).unwrap();
        for (got, want) in fit.x0.iter().zip(&shift) {
            prop_assert!((got - want).abs() < 1e-6);
        }
        let gap = (fit.gamma - theta).rem_euclid(std::f64::consts::TAU);
        prop_assert!(gap.min(std::f64::consts::TAU - gap) < 1e-8);
    }

    #[test]
    fn evolution_conserves_mass_and_reverses(seed in 0u64..1000, amp in 1e-3f64..5e-2) {
        let s = state();
        let phi = sample_perturbation(s, amp, seed, &PerturbationSpec::default()).unwrap();
        let cfg = EvolveConfig::new(0.5, 1e-3, 0.02);
        let mut prop = Propagator::new(&phi, &cfg).unwrap();
        prop.advance(20, 1e-3).unwrap();
        let (m0, _) = conserved(&phi, &cfg);
        let (m1, _) = conserved(&prop.field(), &cfg);
        prop_assert!(((m1 - m0) / m0).abs() < 1e-13);
        prop.advance(20, -1e-3).unwrap();
        let back = prop.field().max_abs_diff(&phi).unwrap();
        prop_assert!(back < 1e-11 * s.field.values()[0].norm().max(1.0));
    }
}
