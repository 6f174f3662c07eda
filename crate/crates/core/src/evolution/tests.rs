use std::sync::OnceLock;

use num_complex::Complex;

use super::*;
use crate::field3::CartGrid3;
use crate::functional::{energy, Integrals};
use crate::ground_state::{rescale_to_kirchhoff, solve_nls_soliton};
use crate::modulation::{sample_perturbation, GridGroundState, PerturbationSpec};
use crate::radial::RadialGrid;

fn state() -> &'static GridGroundState<f64> {
    static S: OnceLock<GridGroundState<f64>> = OnceLock::new();
    S.get_or_init(|| {
        let grid = RadialGrid::new(30.0, 4096).unwrap();
        let gs = rescale_to_kirchhoff(&solve_nls_soliton(0.5, &grid).unwrap()).unwrap();
        let g3 = CartGrid3::new(8.0 * gs.length_scale(), 32).unwrap();
        GridGroundState::new(&gs, &g3).unwrap()
    })
}

fn perturbed(amplitude: f64, seed: u64) -> Field3<f64> {
    sample_perturbation(state(), amplitude, seed, &PerturbationSpec::default()).unwrap()
}

fn rel_diff(a: &Field3<f64>, b: &Field3<f64>) -> f64 {
    let scale = a.values().iter().fold(0.0f64, |m, v| m.max(v.norm()));
    a.max_abs_diff(b).unwrap() / scale
}

#[test]
fn ground_state_rotates_in_phase() {
    let s = state();
    // i∂ₜu = -aΔu - |u|^{2p}u = -λu on the ground state, so u(t) = e^{iλt} r
    let err = |dt: f64| {
        let next = step_strang(&s.field, &EvolveConfig::new(0.5, dt, dt)).unwrap();
        next.max_abs_diff(&s.field.scale(Complex::from_polar(1.0, s.lambda * dt)))
            .unwrap()
    };
    let (a, b) = (err(1e-3), err(5e-4));
    assert!(a < 1e-7, "{a}");
    assert!(((a / b).log2() - 3.0).abs() < 0.05, "{a} {b}");
}

#[test]
fn plane_wave_is_exact() {
    let grid = CartGrid3::new(5.0f64, 16).unwrap();
    let k = [
        2.0 * std::f64::consts::PI / 10.0,
        0.0,
        -4.0 * std::f64::consts::PI / 10.0,
    ];
    let amp = 0.7;
    let u = Field3::from_fn(grid.clone(), |x, y, z| {
        Complex::from_polar(amp, k[0] * x + k[1] * y + k[2] * z)
    });
    let k2 = k.iter().map(|a| a * a).sum::<f64>();
    let g = u.grad_sq();
    assert!((g - k2 * amp * amp * 1000.0).abs() < 1e-9 * g);
    let cfg = EvolveConfig::new(0.4, 0.01, 0.5);
    let mut prop = Propagator::new(&u, &cfg).unwrap();
    prop.advance(50, cfg.dt).unwrap();
    let t = 0.5;
    let omega = 0.5 * (1.0 + g) * k2 - amp.powf(0.8);
    let expect = u.scale(Complex::from_polar(1.0, -omega * t));
    assert!(rel_diff(&prop.field(), &expect) < 1e-11);
}

#[test]
fn strang_local_error_is_third_order() {
    let u = perturbed(0.05, 3);
    let defect = |dt: f64| {
        let full = step_strang(&u, &EvolveConfig::new(0.5, dt, dt)).unwrap();
        let cfg = EvolveConfig::new(0.5, dt / 2.0, dt);
        let halves = step_strang(&step_strang(&u, &cfg).unwrap(), &cfg).unwrap();
        full.max_abs_diff(&halves).unwrap()
    };
    let (a, b) = (defect(2e-2), defect(1e-2));
    let order = (a / b).log2();
    assert!((order - 3.0).abs() < 0.2, "{a} {b} {order}");
}

#[test]
fn conserved_matches_the_energy_functional() {
    let u = perturbed(0.05, 1);
    let cfg = EvolveConfig::new(0.5, 1e-3, 1e-3);
    let (m, e) = conserved(&u, &cfg);
    assert!((m - u.mass()).abs() < 1e-14 * m);
    assert!((e - energy(&u, 0.5)).abs() < 1e-12 * e.abs());
    let zero = Field3::zeros(u.grid().clone());
    assert_eq!(conserved(&zero, &cfg), (0.0, 0.0));
}

#[test]
fn rhs_is_the_energy_gradient() {
    use rand::{Rng, SeedableRng};
    let grid = CartGrid3::new(4.0f64, 16).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    // smooth random fields: random low modes under a Gaussian
    let smooth = |rng: &mut rand_chacha::ChaCha8Rng| {
        let c: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        Field3::from_fn(grid.clone(), move |x, y, z| {
            let env = (-(x * x + y * y + z * z) / 2.0).exp();
            Complex::new(
                c[0] + c[1] * x + c[2] * y * z + c[3] * z,
                c[4] + c[5] * y + c[6] * x * x + c[7] * z,
            ) * env
        })
    };
    for eps in [1.0, 0.3] {
        let u = smooth(&mut rng);
        let eta = smooth(&mut rng);
        let cfg = EvolveConfig {
            epsilon: eps,
            ..EvolveConfig::new(0.3, 1e-3, 1e-3)
        }
        .with_potential(&grid, |x, y, z| 0.2 * (x * x + y * y + z * z).sin());
        let e = |h: f64| conserved(&u.axpy(Complex::new(h, 0.0), &eta).unwrap(), &cfg).1;
        let h = 1e-5;
        let fd = (e(h) - e(-h)) / (2.0 * h);
        let g = equation_rhs(&u, &cfg);
        let exact = 2.0 * g.inner_l2(&eta).unwrap();
        assert!(((fd - exact) / exact).abs() < 1e-6, "{fd} vs {exact}");
    }
}

#[test]
fn mass_is_conserved_and_steps_reverse() {
    let u = perturbed(0.05, 2);
    let grid = u.grid().clone();
    let cfg =
        EvolveConfig::new(0.5, 1e-3, 1.0).with_potential(&grid, |x, _, _| 1e-3 * (x / 200.0).cos());
    let mut prop = Propagator::new(&u, &cfg).unwrap();
    prop.advance(100, cfg.dt).unwrap();
    let mid = prop.field();
    assert!(((mid.mass() - u.mass()) / u.mass()).abs() < 1e-13);
    assert!(rel_diff(&mid, &u) > 1e-4);
    prop.advance(100, -cfg.dt).unwrap();
    assert!(rel_diff(&prop.field(), &u) < 1e-10);
    assert_eq!(prop.steps(), 200);
}

#[test]
fn energy_error_is_second_order() {
    let u = perturbed(0.05, 4);
    let drift = |dt: f64| {
        let cfg = EvolveConfig::new(0.5, dt, 0.2);
        let e0 = conserved(&u, &cfg).1;
        let mut prop = Propagator::new(&u, &cfg).unwrap();
        prop.advance((0.2 / dt).round() as usize, dt).unwrap();
        (conserved(&prop.field(), &cfg).1 - e0).abs()
    };
    let ratio = drift(1e-2) / drift(5e-3);
    assert!((ratio - 4.0).abs() < 0.6, "{ratio}");
}

#[test]
fn phase_wrap_guard() {
    let u = perturbed(0.05, 5);
    let cfg = EvolveConfig::new(0.5, 1.0, 1.0);
    assert!(matches!(
        step_strang(&u, &cfg),
        Err(crate::Error::StepRejected { .. })
    ));
}

#[test]
fn config_validation() {
    let s = state();
    let grid = s.grid();
    assert!(EvolveConfig::new(0.5, 0.0, 1.0).validate(grid).is_err());
    assert!(EvolveConfig::new(0.5, 0.1, 0.01).validate(grid).is_err());
    assert!(EvolveConfig {
        epsilon: -1.0,
        ..EvolveConfig::new(0.5, 0.1, 1.0)
    }
    .validate(grid)
    .is_err());
    assert!(EvolveConfig {
        potential: Some(vec![0.0; 3]),
        ..EvolveConfig::new(0.5, 0.1, 1.0)
    }
    .validate(grid)
    .is_err());
    assert!(EvolveConfig::new(2.5, 0.1, 1.0).validate(grid).is_err());
    let cfg = EvolveConfig {
        epsilon: 0.5,
        ..EvolveConfig::new(0.5, 1e-3, 0.01)
    };
    assert!(stability_run(s, 0.0, 0, &PerturbationSpec::default(), &cfg).is_err());
}

#[test]
fn short_stability_run() {
    let s = state();
    let mut cfg = EvolveConfig::new(0.5, 1e-3, 0.2);
    cfg.output_every = 0.05;
    let series = stability_run(s, 0.0, 0, &PerturbationSpec::default(), &cfg).unwrap();
    assert_eq!(series.len(), 5);
    assert!(series.times.windows(2).all(|w| w[1] > w[0]));
    let sum = series.summary().unwrap();
    assert!(sum.mass_drift < 1e-12 && sum.energy_drift < 1e-9);
    assert!(sum.max_dist < 1e-6 * s.norm());
    let mut csv = Vec::new();
    series.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("t,mass,energy,mod_dist,cx,cy,cz\n"));
    assert_eq!(text.lines().count(), 6);
}
