use std::sync::OnceLock;

use num_complex::Complex;

use super::*;
use crate::field3::{CartGrid3, Field3};
use crate::functional::{energy, norm_h1, Integrals};
use crate::ground_state::{rescale_to_kirchhoff, solve_nls_soliton, GroundState};
use crate::radial::RadialGrid;

fn radial() -> &'static GroundState<f64> {
    static GS: OnceLock<GroundState<f64>> = OnceLock::new();
    GS.get_or_init(|| {
        let grid = RadialGrid::new(30.0, 4096).unwrap();
        rescale_to_kirchhoff(&solve_nls_soliton(0.5, &grid).unwrap()).unwrap()
    })
}

fn box_state(m: usize) -> &'static GridGroundState<f64> {
    static S48: OnceLock<GridGroundState<f64>> = OnceLock::new();
    static S16: OnceLock<GridGroundState<f64>> = OnceLock::new();
    let (cell, width) = match m {
        48 => (&S48, 12.0),
        16 => (&S16, 6.0),
        _ => unreachable!(),
    };
    cell.get_or_init(|| {
        let gs = radial();
        let grid = CartGrid3::new(width * gs.length_scale(), m).unwrap();
        GridGroundState::new(gs, &grid).unwrap()
    })
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn phase_gap(a: f64, b: f64) -> f64 {
    let t = std::f64::consts::TAU;
    let d = (a - b).rem_euclid(t);
    d.min(t - d)
}

#[test]
fn embedding_matches_radial_integrals() {
    let gs = radial();
    let grid = CartGrid3::new(12.0 * gs.length_scale(), 64).unwrap();
    let f = embed_ground(gs, &grid).unwrap();
    assert!(((f.mass() - gs.mass2) / gs.mass2).abs() < 1e-6);
    assert!(((energy(&f, 0.5) - gs.energy) / gs.energy).abs() < 1e-5);
    let v = f.values();
    let m = 64;
    let mut worst: f64 = 0.0;
    for i in 1..m {
        for j in 1..m {
            for l in 1..m {
                let a = v[(i * m + j) * m + l];
                let b = v[((m - i) * m + (m - j)) * m + (m - l)];
                worst = worst.max((a - b).norm());
                assert!(a.re >= 0.0 && a.im == 0.0);
            }
        }
    }
    assert!(worst < 1e-12 * v[(32 * m + 32) * m + 32].re, "{worst}");
}

#[test]
fn embedding_rejects_coarse_boxes() {
    let gs = radial();
    let grid = CartGrid3::new(40.0 * gs.length_scale(), 16).unwrap();
    assert!(embed_ground(gs, &grid).is_err());
}

#[test]
fn polished_state_is_stationary() {
    let s = box_state(48);
    assert!(s.residual < 1e-9, "{}", s.residual);
    assert!((s.lambda - 1.0).abs() < 1e-5);
    assert!(((s.mass2 - radial().mass2) / s.mass2).abs() < 1e-12);
    let a = 0.5 * (1.0 + s.gnorm2);
    assert!((s.diffusion - a).abs() < 1e-12 * a);
}

#[test]
fn recovers_orbit_members() {
    let s = box_state(48);
    let ls = s.length_scale;
    for (x, theta) in [
        ([0.3 * ls, -0.2 * ls, 0.1 * ls], 1.0),
        ([-0.05 * ls, 0.45 * ls, -0.7 * ls], 5.5),
        ([0.0, 0.0, 0.0], std::f64::consts::FRAC_PI_3),
    ] {
        let phi = s.field.translate_phase(x, theta);
        let fit = mod_distance(&phi, s, &FitOptions::default()).unwrap();
        assert!(dist(fit.x0, x) < 1e-6, "{:?} vs {x:?}", fit.x0);
        assert!(
            phase_gap(fit.gamma, theta) < 1e-8,
            "{} vs {theta}",
            fit.gamma
        );
        assert!(fit.dist < 1e-7, "{}", fit.dist);
        assert!(fit.warnings.is_empty());
        assert!((0.0..std::f64::consts::TAU).contains(&fit.gamma));
    }
}

#[test]
fn fit_is_equivariant() {
    let s = box_state(48);
    let phi = sample_perturbation(s, 0.02, 11, &PerturbationSpec::default()).unwrap();
    let base = mod_distance(&phi, s, &FitOptions::default()).unwrap();
    let a = [
        0.4 * s.length_scale,
        0.1 * s.length_scale,
        -0.3 * s.length_scale,
    ];
    let beta = 2.0;
    let moved = mod_distance(&phi.translate_phase(a, beta), s, &FitOptions::default()).unwrap();
    let expect = [base.x0[0] + a[0], base.x0[1] + a[1], base.x0[2] + a[2]];
    assert!(dist(moved.x0, expect) < 1e-6);
    assert!(phase_gap(moved.gamma, base.gamma + beta) < 1e-8);
    assert!(((moved.dist - base.dist) / base.dist).abs() < 1e-10);
}

#[test]
fn converged_fits_are_orthogonal() {
    let s = box_state(48);
    for seed in 0..4 {
        let phi = sample_perturbation(s, 0.01, seed, &PerturbationSpec::default()).unwrap();
        let fit = mod_distance(&phi, s, &FitOptions::default()).unwrap();
        let res = orthogonality_residuals(&fit, s).unwrap();
        assert!(res.iter().all(|r| r.abs() < 1e-7), "seed {seed}: {res:?}");
        let raw = norm_h1(&phi.sub(&s.field).unwrap());
        assert!(fit.dist <= raw);
        // w + r carries the mass of φ
        let w = Field3::new(
            s.grid().clone(),
            fit.u
                .values()
                .iter()
                .zip(fit.v.values())
                .map(|(a, b)| Complex::new(a.re, b.re))
                .collect(),
        )
        .unwrap();
        let back = w.axpy(Complex::new(1.0, 0.0), &s.field).unwrap();
        assert!(((back.mass() - phi.mass()) / phi.mass()).abs() < 1e-12);
    }
}

#[test]
fn frozen_parameters_are_not_stationary() {
    let s = box_state(48);
    let shift = 0.05 * s.length_scale;
    let phi = s.field.translate_phase([shift, 0.0, 0.0], 0.0);
    let fit = fit_at(&phi, s, [0.0; 3], 0.0).unwrap();
    let res = orthogonality_residuals(&fit, s).unwrap();
    assert!(res[1].abs() > 1e-3, "{res:?}");
    assert!(res[0].abs() < 1e-3 * res[1].abs(), "{res:?}");
}

#[test]
fn perturbations_are_deterministic_and_on_the_mass_sphere() {
    let s = box_state(48);
    let spec = PerturbationSpec::default();
    let a = sample_perturbation(s, 0.01, 5, &spec).unwrap();
    let b = sample_perturbation(s, 0.01, 5, &spec).unwrap();
    let c = sample_perturbation(s, 0.01, 6, &spec).unwrap();
    assert_eq!(a, b);
    assert!(norm_h1(&a.sub(&c).unwrap()) > 0.0);
    for seed in 0..8 {
        let phi = sample_perturbation(s, 0.05, seed, &spec).unwrap();
        assert!(((phi.mass() - s.mass2) / s.mass2).abs() < 1e-12);
    }
    assert!(sample_perturbation(s, 0.0, 1, &spec).is_err());
    let bad = PerturbationSpec {
        width: -1.0,
        ..spec
    };
    assert!(sample_perturbation(s, 0.01, 1, &bad).is_err());
}

#[test]
fn distance_vanishes_linearly_with_amplitude() {
    let s = box_state(48);
    let spec = PerturbationSpec::default();
    let d: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&a| {
            mod_distance(
                &sample_perturbation(s, a, 2, &spec).unwrap(),
                s,
                &FitOptions::default(),
            )
            .unwrap()
            .dist
        })
        .collect();
    for w in d.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 10.0).abs() < 0.5, "{d:?}");
    }
}

#[test]
fn matches_exhaustive_search_on_a_coarse_box() {
    let s = box_state(16);
    let opts = OracleOptions {
        phases: 32,
        zoom_levels: 30,
    };
    for seed in [1, 2] {
        let phi = sample_perturbation(s, 0.02, seed, &PerturbationSpec::default()).unwrap();
        let fit = mod_distance(&phi, s, &FitOptions::default()).unwrap();
        let oracle = exhaustive_fit(&phi, s, &opts).unwrap();
        assert!(
            (fit.dist - oracle.dist).abs() < 1e-4,
            "{} vs {}",
            fit.dist,
            oracle.dist
        );
        assert!(fit.dist <= oracle.dist + 1e-6);
    }
}

#[test]
fn far_translations_are_flagged() {
    let s = box_state(48);
    let far = 0.3 * s.grid().half_width();
    let phi = s.field.translate_phase([far, far, 0.0], 0.0);
    let fit = mod_distance(&phi, s, &FitOptions::default()).unwrap();
    assert!(fit.warnings.iter().any(|w| w.contains("untrusted")));
    let heavy = s.field.scale(Complex::new(1.1, 0.0));
    let fit = mod_distance(&heavy, s, &FitOptions::default()).unwrap();
    assert!(fit.warnings.iter().any(|w| w.contains("mass")));
}
