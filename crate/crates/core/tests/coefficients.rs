mod common;

use common::{fixture, refined};
use fch_pearl::coefficients::{
    alpha0, alpha0_parts, alpha2, beta0, gamma1, verify_alpha1, CoefficientInputs, CoefficientTable,
};
use fch_pearl::runner::affine_residual;

#[test]
fn alpha0_is_affine_in_gamma_and_eta_d() {
    let f = fixture();
    let (b, op) = (&f.bilayer, &f.spectral);
    assert!(affine_residual(b, op).unwrap() <= 1e-9);
    let (a1, a2) = alpha0_parts(b, op).unwrap();
    let direct = alpha0(b, op, 2.0, 3.0).unwrap();
    assert!((direct - (2.0 * a1 - 3.0 * a2)).abs() <= 1e-9);
    assert_eq!(alpha0(b, op, 1.0, 0.0).unwrap(), a1);
}

#[test]
fn table_identities() {
    let t = &fixture().table;
    assert!((t.alpha0 + t.mu[1]).abs() <= 1e-9);
    assert!((t.omega[1] - t.mu[1]).abs() <= 1e-9);
    assert!((4.0 * t.beta0 - t.mu[4]).abs() <= 1e-9);
    assert!((t.omega[2] - t.mu[4]).abs() <= 1e-9);
    assert!((t.omega[0] - 0.5 * (t.mu[0] + t.mu[2])).abs() <= 1e-15);
    assert!((t.omega[3] - (t.mu[3] + t.mu[5])).abs() <= 1e-15);
    assert!((t.alpha0 - (t.alpha01 * t.gamma - t.alpha02 * t.eta_d)).abs() <= 1e-9);
    assert_eq!(t.eta_d, t.eta1 - t.eta2);
}

#[test]
fn beta0_vanishes_for_the_symmetric_bilayer() {
    let f = fixture();
    for (g, e) in [(1.0, -1.0), (0.3, 2.0), (2.0, 0.0)] {
        let b0 = beta0(&f.bilayer, &f.spectral, g, e).unwrap();
        assert!(b0.abs() < 1e-10, "beta0({g}, {e}) = {b0}");
    }
}

#[test]
fn alpha1_vanishes() {
    let f = fixture();
    let c = verify_alpha1(&f.bilayer, &f.spectral).unwrap();
    assert!(c.alpha1.abs() <= 1e-6, "{c:?}");
    assert!((c.bracket - c.bracket_closed_form).abs() <= 1e-6 * c.bracket.abs().max(1.0));
}

#[test]
fn gamma1_by_direct_quadrature() {
    let f = fixture();
    let b = &f.bilayer;
    let h = b.grid.h();
    // plain Riemann sum: the integrands vanish at both ends to 1e-8
    let num: f64 = b.du0.iter().map(|d| d * d).sum::<f64>() * h;
    let den: f64 = b.u0.iter().map(|u| u + 1.0).sum::<f64>() * h;
    let expect = (-1.0 - 2.0) * num / (2.0 * den);
    assert!((gamma1(b, 1.0, -1.0) - expect).abs() < 1e-9);
}

#[test]
fn coefficients_converge_under_refinement() {
    let f = fixture();
    let (fb, fop) = refined();
    let coarse = alpha0_parts(&f.bilayer, &f.spectral).unwrap();
    let fine = alpha0_parts(fb, fop).unwrap();
    assert!((coarse.0 - fine.0).abs() < 1e-9, "{coarse:?} {fine:?}");
    assert!((coarse.1 - fine.1).abs() < 1e-9, "{coarse:?} {fine:?}");
    let a2 = alpha2(&f.bilayer, &f.spectral).unwrap();
    let a2f = alpha2(fb, fop).unwrap();
    assert!((a2 - a2f).abs() < 1e-8, "{a2} {a2f}");
    let fine_table = CoefficientTable::compute(fb, fop, CoefficientInputs { gamma: 1.0, eta1: 1.0, eta2: 2.0 }).unwrap();
    for (k, (x, y)) in f.table.nu.iter().zip(&fine_table.nu).enumerate() {
        assert!((x - y).abs() < 1e-9, "nu{}: {x} {y}", k + 1);
    }
    for (k, (x, y)) in f.table.mu.iter().zip(&fine_table.mu).enumerate() {
        assert!((x - y).abs() < 1e-8, "mu{}: {x} {y}", k + 1);
    }
}

#[test]
fn default_values_are_stable() {
    let t = &fixture().table;
    assert!((t.lambda0 - 0.874104173270964).abs() < 1e-12);
    assert!((t.alpha01 - 0.65905).abs() < 1e-5);
    assert!((t.alpha02 + 0.28601).abs() < 1e-5);
    assert!((t.alpha2 - 0.49117).abs() < 1e-5);
    assert!(t.alpha0 > 0.0);
    assert_eq!(t.rows().len(), 10 + 8 + 6 + 4 + 2);
}

#[test]
fn pearling_sign_follows_eta_d() {
    let f = fixture();
    let (a1, a2) = alpha0_parts(&f.bilayer, &f.spectral).unwrap();
    let root = a1 / a2;
    let below = alpha0(&f.bilayer, &f.spectral, 1.0, root - 0.1).unwrap();
    let above = alpha0(&f.bilayer, &f.spectral, 1.0, root + 0.1).unwrap();
    assert!(below < 0.0 && above > 0.0, "{below} {above}");
    assert!(alpha0(&f.bilayer, &f.spectral, 1.0, root).unwrap().abs() < 1e-12);
}
