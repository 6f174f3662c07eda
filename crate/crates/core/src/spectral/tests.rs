use super::*;
use crate::ground_state::{rescale_to_kirchhoff, solve_nls_soliton};
use crate::radial::RadialGrid;
use rand::{Rng, SeedableRng};

fn ground(p: f64, n: usize) -> GroundState<f64> {
    let grid = RadialGrid::new(30.0, n).unwrap();
    rescale_to_kirchhoff(&solve_nls_soliton(p, &grid).unwrap()).unwrap()
}

#[test]
fn kernels_and_negative_direction() {
    let gs = ground(0.5, 4096);
    let k = kernel_report(&gs).unwrap();
    assert!(k.minus_r < 1e-7, "{}", k.minus_r);
    assert!(k.plus_dr < 1e-7, "{}", k.plus_dr);
    assert!(k.minus_lowest.abs() < 1e-6);
    assert!(k.minus_second > 0.0);
    assert!(k.minus_overlap_r > 0.9999);
    assert!(k.plus1_lowest.abs() < 1e-6, "{}", k.plus1_lowest);
    assert!(k.plus1_overlap_dr > 0.9999);
    assert_eq!(k.plus0_negative_count, 1);
}

#[test]
fn operators_are_symmetric_and_sectors_decouple() {
    let gs = ground(0.5, 512);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for ell in 0..=2 {
        for kind in [Kind::Plus, Kind::Minus] {
            let op = assemble_sector(&gs, ell, kind).unwrap();
            assert_eq!(op.rank_one.is_some(), kind == Kind::Plus && ell == 0);
            let f: Vec<f64> = (0..512).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g: Vec<f64> = (0..512).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fg = op.bilinear(&f, &g);
            let gf = op.bilinear(&g, &f);
            let norm = op.bilinear(&f, &f).abs().sqrt() * op.bilinear(&g, &g).abs().sqrt();
            assert!((fg - gf).abs() < 1e-10 * norm.max(1.0));
        }
    }
    // matrix form equals the quadrature form
    let op = assemble_sector(&gs, 0, Kind::Plus).unwrap();
    let f = gs.r.map(|v| v * v.sqrt());
    let q1 = op.bilinear(f.values(), f.values());
    let q2 = quad_form_radial(&gs, Kind::Plus, &f, 0).unwrap();
    assert!((q1 - q2).abs() < 1e-10 * q1.abs());
}

#[test]
fn quadratic_form_values() {
    let gs = ground(0.5, 4096);
    let dr = derivative(&gs.r);
    let scale = gs.mass2;
    assert!(quad_form_radial(&gs, Kind::Plus, &dr, 1).unwrap().abs() < 1e-8 * scale);
    assert!(quad_form_radial(&gs, Kind::Minus, &gs.r, 0).unwrap().abs() < 1e-8 * scale);
    let p = gs.p;
    let g = gs.gnorm2;
    let expected = -p * g - 2.0 * p * gs.mass2 + (1.0 - p) * g * g;
    let got = quad_form_radial(&gs, Kind::Plus, &gs.r, 0).unwrap();
    assert!(
        (got - expected).abs() < 1e-6 * expected.abs(),
        "{got} {expected}"
    );
}

#[test]
fn identities_hold() {
    for p in [0.2, 0.4, 0.5, 0.6] {
        let rep = identity_checks(&ground(p, 4096)).unwrap();
        assert!(rep.dilation_residual < 1e-6, "{p}: {rep:?}");
        assert!(rep.ground_residual < 1e-6, "{p}: {rep:?}");
        assert!(rep.combined_residual < 1e-6, "{p}: {rep:?}");
        assert!(rep.grad_dilation_rel < 1e-8, "{p}: {rep:?}");
        assert!(rep.mass_dilation_rel < 1e-8, "{p}: {rep:?}");
        assert!(rep.bracket_positive);
    }
}

#[test]
fn constrained_infima_signs_and_monotonicity() {
    let gs = ground(0.5, 2048);
    let inf = constrained_infima(&gs).unwrap();
    assert!(inf[0].value.abs() < 1e-4, "{:?}", inf[0]);
    assert!(inf[1].value > 0.0, "{:?}", inf[1]);
    assert!(inf[2].value > 0.0, "{:?}", inf[2]);
    // dropping the translation constraints can only lower the infimum
    let fewer = constrained_inf(
        &gs,
        Kind::Plus,
        &[Constraint::ground(&gs, Pairing::L2)],
        NormKind::H1,
    )
    .unwrap();
    assert!(fewer.value <= inf[1].value + 1e-12);
}

#[test]
fn rejects_bad_requests() {
    let gs = ground(0.5, 256);
    assert!(assemble_sector(&gs, 3, Kind::Plus).is_err());
    let op = assemble_sector(&gs, 0, Kind::Minus).unwrap();
    assert!(eig_sector(&op, 13).is_err());
    let c = Constraint::ground(&gs, Pairing::L2);
    let dup = vec![c.clone(), c];
    assert!(matches!(
        constrained_inf(&gs, Kind::Plus, &dup, NormKind::L2),
        Err(Error::RankDeficient { .. })
    ));
    let noisy = crate::ground_state::GroundState::from_profile(gs.r.map(|v| 1.1 * v), 0.5).unwrap();
    assert!(assemble_sector(&noisy, 0, Kind::Plus).is_err());
}
