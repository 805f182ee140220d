mod common;

use common::rk4;
use nalgebra::Vector2;
use proptest::prelude::*;
use prs_core::phasespace::{
    evolve_and_overlap_cat, evolve_and_overlap_fock, evolve_gaussian, overlap_gaussian, pde_oracle, CatState,
    FPParams, FockSuperposition, GaussianState, MotionalState, OracleConfig, PhaseGrid, WignerGrid,
};

fn psq(r: f64, theta: f64, kappa: f64) -> f64 {
    let a = (2.0 * r).exp();
    let u = 1.0 + kappa * a;
    u.powf(-0.5) * (-0.5 * a * theta * theta / u).exp()
}

fn self_overlap(s: &GaussianState, fp: &FPParams) -> f64 {
    overlap_gaussian(s, &evolve_gaussian(s, fp).unwrap()).unwrap()
}

fn via_pde(state: &MotionalState, fp: &FPParams) -> (f64, f64) {
    let grid = PhaseGrid::covering(state, fp);
    let w0 = WignerGrid::of_state(state, grid);
    let out = pde_oracle(&w0, fp, &OracleConfig::default()).unwrap();
    (out.overlap, out.mass)
}

#[test]
fn damped_moments_match_rk4() {
    let fp = FPParams::new(0.02, 0.003, 0.01, 10.0).unwrap();
    let s = GaussianState::squeezed(1.44, 1.1).unwrap();
    let out = evolve_gaussian(&s, &fp).unwrap();
    // y = (M_x, M_p, g_xx, g_xp, g_pp) under dp = -(alpha + g p) dt + sqrt(d) dW
    let f = |_t: f64, y: &[f64]| {
        vec![0.0, -fp.alpha - fp.g * y[1], 0.0, -fp.g * y[3], -2.0 * fp.g * y[4] + fp.d]
    };
    let y0 = [s.mean()[0], s.mean()[1], s.cov()[(0, 0)], s.cov()[(0, 1)], s.cov()[(1, 1)]];
    let y = rk4(f, 0.0, fp.tbar, &y0, 2000);
    let got = [out.mean()[0], out.mean()[1], out.cov()[(0, 0)], out.cov()[(0, 1)], out.cov()[(1, 1)]];
    for (a, b) in got.iter().zip(&y) {
        assert!((a - b).abs() < 1e-8, "{got:?} vs {y:?}");
    }
}

#[test]
fn pure_displacement_of_vacuum() {
    let fp = FPParams::from_totals(1.0, 0.0).unwrap();
    let out = evolve_gaussian(&GaussianState::vacuum(), &fp).unwrap();
    assert_eq!(out.mean()[0], 0.0);
    assert!((out.mean()[1].abs() - 1.0).abs() < 1e-15);
    assert_eq!(*out.cov(), *GaussianState::vacuum().cov());
    let half = FPParams::from_totals((2.0 * 2f64.ln()).sqrt(), 0.0).unwrap();
    assert!((self_overlap(&GaussianState::vacuum(), &half) - 0.5).abs() < 1e-15);
}

#[test]
fn zero_time_leaves_state_unchanged() {
    let s = GaussianState::squeezed(0.8, 0.3).unwrap();
    let fp = FPParams::new(0.03, 0.01, 0.02, 0.0).unwrap();
    assert_eq!(evolve_gaussian(&s, &fp).unwrap(), s);
}

#[test]
fn cat_without_amplitude_is_vacuum() {
    for (theta, kappa) in [(0.0, 0.0), (0.7, 0.1), (2.0, 0.3)] {
        let fp = FPParams::from_totals(theta, kappa).unwrap();
        let cat = evolve_and_overlap_cat(&CatState::new(0.0).unwrap(), &fp).unwrap();
        assert!((cat - psq(0.0, theta, kappa)).abs() < 1e-14);
    }
    let fp = FPParams::new(0.02, 0.003, 1e-3, 5.0).unwrap();
    assert!(evolve_and_overlap_cat(&CatState::new(2.0).unwrap(), &fp).is_err());
}

#[test]
fn fock_ground_state_is_vacuum() {
    for (theta, kappa) in [(0.3, 0.0), (1.2, 0.2), (2.0, 0.3)] {
        let fp = FPParams::from_totals(theta, kappa).unwrap();
        let f = evolve_and_overlap_fock(&FockSuperposition::basis(0).unwrap(), &fp).unwrap();
        assert!((f - psq(0.0, theta, kappa)).abs() < 1e-10);
    }
    let still = FPParams::from_totals(0.0, 0.0).unwrap();
    assert!((evolve_and_overlap_fock(&FockSuperposition::basis(1).unwrap(), &still).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn pde_oracle_reproduces_half_overlap_for_vacuum() {
    let fp = FPParams::from_totals((2.0 * 2f64.ln()).sqrt(), 0.0).unwrap();
    let (p, mass) = via_pde(&MotionalState::vacuum(), &fp);
    assert!((p - 0.5).abs() < 1e-4, "{p}");
    assert!((mass - 1.0).abs() < 1e-6);
}

#[test]
fn pde_oracle_matches_squeezed_closed_form() {
    let fp = FPParams::from_totals(0.3, 0.02).unwrap();
    let (p, _) = via_pde(&MotionalState::squeezed(1.44).unwrap(), &fp);
    assert!((p - psq(1.44, 0.3, 0.02)).abs() < 1e-4, "{p}");
}

#[test]
fn pde_oracle_matches_cat() {
    let fp = FPParams::from_totals(0.5, 0.05).unwrap();
    let cat = CatState::new(2.0).unwrap();
    let (p, _) = via_pde(&MotionalState::Cat(cat), &fp);
    let closed = evolve_and_overlap_cat(&cat, &fp).unwrap();
    assert!((p - closed).abs() < 1e-4, "{p} vs {closed}");
}

#[test]
fn pde_oracle_matches_fock_superposition() {
    let fp = FPParams::from_totals(0.3, 0.03).unwrap();
    let f = FockSuperposition::from_real(&[(2, 0.5), (4, 0.75f64.sqrt())]).unwrap();
    let closed = evolve_and_overlap_fock(&f, &fp).unwrap();
    let (p, _) = via_pde(&MotionalState::Fock(f), &fp);
    assert!((p - closed).abs() < 1e-4, "{p} vs {closed}");
}

#[test]
fn pde_oracle_with_damping_matches_exact_gaussian() {
    let s = GaussianState::squeezed(0.6, 1.0).unwrap();
    let fp = FPParams::new(0.05, 0.004, 0.01, 20.0).unwrap();
    let (p, _) = via_pde(&MotionalState::Gaussian(s), &fp);
    assert!((p - self_overlap(&s, &fp)).abs() < 1e-4);
}

#[test]
fn momentum_variance_grows_linearly_without_damping() {
    let s = GaussianState::squeezed(1.0, 0.4).unwrap();
    for (d, t) in [(0.003, 10.0), (0.1, 2.5)] {
        let out = evolve_gaussian(&s, &FPParams::new(0.02, d, 0.0, t).unwrap()).unwrap();
        assert!((out.cov()[(1, 1)] - s.cov()[(1, 1)] - d * t).abs() < 1e-14);
    }
}

proptest! {
    #[test]
    fn squeezed_overlap_matches_closed_form(r in 0.0..2.5f64, theta in 0.0..3.0f64, kappa in 0.0..0.5f64) {
        let s = GaussianState::momentum_squeezed(r).unwrap();
        let got = self_overlap(&s, &FPParams::from_totals(theta, kappa).unwrap());
        prop_assert!((got - psq(r, theta, kappa)).abs() < 1e-12);
    }

    #[test]
    fn overlap_never_exceeds_one(
        r in 0.0..2.0f64, phi in 0.0..3.2f64, mx in -1.0..1.0f64, mp in -1.0..1.0f64,
        alpha in 0.0..0.1f64, d in 0.0..0.02f64, g in -0.01..0.01f64, t in 0.0..30.0f64,
    ) {
        let sq = GaussianState::squeezed(r, phi).unwrap();
        let s = GaussianState::new(Vector2::new(mx, mp), *sq.cov()).unwrap();
        let fp = FPParams::new(alpha, d, g, t).unwrap();
        let other = evolve_gaussian(&s, &fp).unwrap();
        // damping without enough diffusion squeezes below the uncertainty bound
        prop_assume!(other.cov().determinant() >= 0.25);
        prop_assert!(overlap_gaussian(&s, &other).unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn non_gaussian_overlaps_never_exceed_one(beta in 0.0..3.0f64, c2 in -1.0..1.0f64, theta in 0.0..2.0f64, kappa in 0.0..0.3f64) {
        let fp = FPParams::from_totals(theta, kappa).unwrap();
        prop_assert!(evolve_and_overlap_cat(&CatState::new(beta).unwrap(), &fp).unwrap() <= 1.0 + 1e-12);
        let c4 = (1.0 - c2 * c2).sqrt();
        let f = FockSuperposition::from_real(&[(2, c2), (4, c4)]).unwrap();
        prop_assert!(evolve_and_overlap_fock(&f, &fp).unwrap() <= 1.0 + 1e-10);
    }

    #[test]
    fn overlap_decreases_with_time(r in 0.0..2.0f64, alpha in 0.001..0.1f64, d in 0.0..0.01f64, t in 0.1..50.0f64) {
        let s = GaussianState::momentum_squeezed(r).unwrap();
        let p = |t: f64| self_overlap(&s, &FPParams::new(alpha, d, 0.0, t).unwrap());
        prop_assert!(p(t * 1.001) < p(t));
    }
}
