mod common;

use common::{d2w_y, dw_y, fixture, refined, w_y};
use fch_pearl::bilayer::{compute_u0, compute_u1, compute_v0, RadialGrid};
use fch_pearl::potential::{eval_well, validate_well, Well, WellSpec};
use fch_pearl::Error;
use proptest::prelude::*;

proptest! {
    #[test]
    fn cubic_well_matches_expanded_polynomial(u in -2.0f64..3.0) {
        let w = Well::new(WellSpec::default()).unwrap();
        let y = u + 1.0;
        let scale = 1.0 + y.abs().powi(4);
        prop_assert!((w.w(u) - w_y(y)).abs() <= 1e-13 * scale);
        prop_assert!((w.dw(u) - dw_y(y)).abs() <= 1e-13 * scale);
        prop_assert!((w.d2w(u) - d2w_y(y)).abs() <= 1e-13 * scale);
        prop_assert!((w.d3w(u) - (6.0 * y - 7.0)).abs() <= 1e-13 * scale);
        prop_assert!((w.d4w(u) - 6.0).abs() <= 1e-13);
    }

    #[test]
    fn tail_keeps_relative_precision(k in 1i32..30) {
        let w = Well::new(WellSpec::default()).unwrap();
        let y = 10f64.powi(-k);
        let expect = w_y(y);
        prop_assert!((w.w_of_y(y) - expect).abs() <= 1e-14 * expect);
    }
}

#[test]
fn well_constants() {
    let w = Well::new(WellSpec::default()).unwrap();
    assert!((w.mu_minus() - 2.5).abs() < 1e-14);
    assert!((w.mu_plus() - (3.0 * 2.25 - 1.5 - 1.5)).abs() < 1e-14);
    assert!((w.mu_zero() + 1.5).abs() < 1e-14);
    assert_eq!(w.w(-1.0), 0.0);
    assert!(validate_well(w.spec()).passed());
}

#[test]
fn turning_point_agrees_with_bisection() {
    let w = Well::new(WellSpec::default()).unwrap();
    let (mut a, mut b) = (0.1, 1.4);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if w_y(m + 1.0) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let u_star = w.turning_point().unwrap();
    assert!((u_star - 0.5 * (a + b)).abs() < 1e-14);
    assert!((u_star - 2.0 / 3.0).abs() < 1e-14);
}

#[test]
fn eval_rejects_high_order() {
    assert!(matches!(eval_well(&WellSpec::default(), 0.0, 5), Err(Error::InvalidArgument(_))));
}

#[test]
fn malformed_wells_fail_validation() {
    // W'(0) != 0
    let shifted = WellSpec::polynomial(1.5, vec![0.1, -1.5, -0.5, 1.0]);
    let r = validate_well(&shifted);
    assert!(!r.passed());
    assert!(r.failures().contains(&"W'(0) = 0"));
    // equal depths: W(m) = 0 for m = 1
    assert!(validate_well(&WellSpec::cubic(1.0)).failures().contains(&"W(m) < 0"));
    assert!(matches!(Well::new(WellSpec::cubic(-1.0)), Err(Error::InvalidWell(_))));
}

#[test]
fn profile_residuals() {
    let b = &fixture().bilayer;
    assert!(b.hamiltonian_residual() <= 1e-8, "{}", b.hamiltonian_residual());
    assert!(b.ode_residual() <= 1e-6, "{}", b.ode_residual());
    assert!(b.asymmetry(&b.u0) < 1e-12);
    let c = b.grid.center();
    assert!((b.u0[c] - 2.0 / 3.0).abs() < 1e-12);
    assert!((b.u0[0] + 1.0).abs() < 1e-8);
    // u0 + 1 decays like exp(-sqrt(mu_minus) r)
    assert!((b.tail_slope() + 2.5f64.sqrt()).abs() < 1e-3, "{}", b.tail_slope());
}

#[test]
fn profile_converges_under_refinement() {
    let b = &fixture().bilayer;
    let (fine, _) = refined();
    let worst = (0..b.grid.n).map(|i| (b.u0[i] - fine.u0[2 * i]).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn corrections_tend_to_their_far_field_constants() {
    let f = fixture();
    let (b, op) = (&f.bilayer, &f.spectral);
    let (gamma, eta_d) = (0.8, -1.3);
    let v0 = compute_v0(b, op, gamma, eta_d).unwrap();
    let u1 = compute_u1(op, &v0).unwrap();
    // L0 acts as -mu_minus on constants in the far field.
    let mu = 2.5;
    assert!((v0[0] + gamma / mu).abs() < 1e-8, "{}", v0[0]);
    assert!((u1[0] - gamma / (mu * mu)).abs() < 5e-8, "{}", u1[0]);
    assert!(b.asymmetry(&v0) < 1e-10 && b.asymmetry(&u1) < 1e-10);
    let r = op.apply(&v0);
    let worst = (0..b.grid.n).map(|i| (r[i] - (gamma - eta_d * b.well.dw(b.u0[i]))).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn u1_converges_under_refinement() {
    let f = fixture();
    let (fb, fop) = refined();
    let u1 = compute_u1(&f.spectral, &compute_v0(&f.bilayer, &f.spectral, 1.0, -1.0).unwrap()).unwrap();
    let u1f = compute_u1(fop, &compute_v0(fb, fop, 1.0, -1.0).unwrap()).unwrap();
    let worst = (0..u1.len()).map(|i| (u1[i] - u1f[2 * i]).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn short_domain_is_rejected() {
    let w = Well::new(WellSpec::default()).unwrap();
    let r = compute_u0(&w, RadialGrid::new(3.0, 401).unwrap());
    assert!(matches!(r, Err(Error::DomainTooSmall(_))), "{r:?}");
}

#[test]
fn grid_rejects_even_or_tiny_n() {
    assert!(RadialGrid::new(10.0, 2048).is_err());
    assert!(RadialGrid::new(10.0, 101).is_err());
    assert!(RadialGrid::new(-1.0, 2049).is_err());
}
