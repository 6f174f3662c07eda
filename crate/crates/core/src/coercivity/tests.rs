use std::sync::OnceLock;

use num_complex::Complex;

use super::scan::fit_exponent;
use super::*;
use crate::field3::CartGrid3;
use crate::ground_state::{rescale_to_kirchhoff, solve_nls_soliton};
use crate::modulation::{fit_at, mod_distance, sample_perturbation, FitOptions, PerturbationSpec};
use crate::radial::RadialGrid;

fn state() -> &'static GridGroundState<f64> {
    static S: OnceLock<GridGroundState<f64>> = OnceLock::new();
    S.get_or_init(|| {
        let grid = RadialGrid::new(30.0, 4096).unwrap();
        let gs = rescale_to_kirchhoff(&solve_nls_soliton(0.5, &grid).unwrap()).unwrap();
        let g3 = CartGrid3::new(8.0 * gs.length_scale(), 48).unwrap();
        GridGroundState::new(&gs, &g3).unwrap()
    })
}

#[test]
fn orbit_members_have_no_energy_gap() {
    let s = state();
    let phi = s
        .field
        .translate_phase([0.2 * s.length_scale, -0.1 * s.length_scale, 0.0], 2.5);
    let de = delta_energy(&phi, s).unwrap();
    assert!(de.abs() < 1e-10 * s.energy.abs(), "{de}");
}

#[test]
fn off_sphere_fields_are_rejected() {
    let s = state();
    let phi = s.field.scale(Complex::new(1.001, 0.0));
    assert!(matches!(
        delta_energy(&phi, s),
        Err(crate::Error::MassMismatch { .. })
    ));
}

#[test]
fn gap_is_quadratic_at_small_amplitude() {
    let s = state();
    for seed in 0..3 {
        let phi = sample_perturbation(s, 1e-3, seed, &PerturbationSpec::default()).unwrap();
        let fit = mod_distance(&phi, s, &FitOptions::default()).unwrap();
        let de = delta_energy(&phi, s).unwrap();
        let q = quadratic_model(&fit, s).unwrap();
        assert!(de > 0.0);
        assert!((0.9..=1.1).contains(&(de / q)), "seed {seed}: {}", de / q);
    }
}

#[test]
fn kernel_directions_are_flat() {
    let s = state();
    let r = s.field.re();
    let scale = s.lambda * s.mass2;
    assert!(s.quad_form(false, &r).unwrap().abs() < 1e-8 * scale);
    for j in 0..3 {
        let d = s.gradient(j).re();
        let q = s.quad_form(true, &d).unwrap();
        let n: f64 = d.iter().map(|x| x * x).sum::<f64>() * s.grid().cell_volume();
        assert!(q.abs() < 1e-6 * n, "{q} vs {n}");
    }
    assert!(s.quad_form(true, &r[..10]).is_err());
}

#[test]
fn model_requires_a_stationary_fit() {
    let s = state();
    let phi = s
        .field
        .translate_phase([0.1 * s.length_scale, 0.0, 0.0], 0.0);
    let fit = fit_at(&phi, s, [0.0; 3], 0.0).unwrap();
    assert!(matches!(
        quadratic_model(&fit, s),
        Err(crate::Error::NonStationaryFit(_))
    ));
}

#[test]
fn gradient_remainder_is_cubic() {
    let s = state();
    let j = |a: f64| {
        let phi = sample_perturbation(s, a, 4, &PerturbationSpec::default()).unwrap();
        let fit = mod_distance(&phi, s, &FitOptions::default()).unwrap();
        assert!(gradient_remainder(&fit, s, 0.0).unwrap().abs() < 1e-9 * s.gnorm2);
        (fit.dist, gradient_remainder(&fit, s, 1.0).unwrap())
    };
    let (d1, j1) = j(4e-3);
    let (d2, j2) = j(2e-3);
    let order = (j1 / j2).ln() / (d1 / d2).ln();
    assert!((order - 3.0).abs() < 0.1, "{order}");
}

#[test]
fn exponent_fit_recovers_a_power_law() {
    let pts: Vec<(f64, f64)> = (0..10)
        .map(|i| {
            let x = 0.3 * i as f64;
            (x, 3.0 * x - 1.0 + if i % 2 == 0 { 1e-3 } else { -1e-3 })
        })
        .collect();
    let f = fit_exponent(&pts).unwrap();
    assert!((f.exponent - 3.0).abs() < 1e-3);
    assert!(f.ci95[0] < 3.0 && 3.0 < f.ci95[1]);
    assert!(fit_exponent(&pts[..2]).is_err());
}

#[test]
fn amplitude_lists() {
    let a = geometric_amplitudes(1e-3, 1e-1, 8).unwrap();
    assert_eq!(a.len(), 8);
    assert!((a[0] - 1e-3).abs() < 1e-18 && (a[7] - 1e-1).abs() < 1e-15);
    assert!(geometric_amplitudes(1e-1, 1e-3, 8).is_err());
    let s = state();
    let narrow = ScanOptions::new(geometric_amplitudes(1e-2, 1e-1, 4).unwrap(), vec![0]);
    assert!(remainder_scan(s, &narrow).is_err());
    let large = ScanOptions::new(geometric_amplitudes(1e-3, 0.5, 4).unwrap(), vec![0]);
    assert!(remainder_scan(s, &large).is_err());
}

#[test]
fn small_scan_shows_coercivity() {
    let s = state();
    let opts = ScanOptions::new(geometric_amplitudes(1e-3, 1e-1, 5).unwrap(), vec![1, 2]);
    let rep = remainder_scan(s, &opts).unwrap();
    assert_eq!(rep.records.len(), 10);
    assert!(rep.dropped.is_empty());
    assert!(rep.c_hat > 0.0 && rep.small_records >= 4);
    assert!(rep.min_delta_e > 0.0);
    assert!(rep.exponent.ci95[0] > 2.0, "{:?}", rep.exponent);
    assert!(rep.trend.monotone);
    assert!(rep
        .records
        .windows(2)
        .all(|w| (w[0].seed, w[0].amplitude) < (w[1].seed, w[1].amplitude)));
}

#[test]
fn lower_bound_probe() {
    let s = state();
    let opts = ProbeOptions {
        seeds: vec![0, 1],
        scales: vec![1e-3, 1e-2, 1e-1],
        spec: PerturbationSpec::default(),
    };
    let z = quadratic_form_probe(s, &opts).unwrap();
    assert!(z.d > 0.0);
    assert!(z.holds);
    assert!(z.max_mass_identity < 1e-10);
    assert!(z.samples.iter().all(|x| x.ortho < 1e-8));
    // the bound approaches D‖u‖² from above as ‖w‖ shrinks
    let small = z
        .samples
        .iter()
        .filter(|x| x.scale == 1e-3)
        .all(|x| x.slack >= z.d * x.u_norm2 * 0.99);
    assert!(small);
}
