mod common;

use common::fixture;
use fch_pearl::coefficients::{CoefficientInputs, CoefficientTable};
use fch_pearl::pearl::{
    circular_pearl, circular_radii, circular_radius, flat_pearl, pearl_amplitude, pearl_period, supercriticality_bound,
    PearlBounds, PearlKind,
};
use fch_pearl::runner::sample_pearl;
use fch_pearl::simulator::extract_pearl_metrics;
use fch_pearl::Error;

const EPS: f64 = 0.1;
const KAPPA: f64 = 0.05;

#[test]
fn flat_pearl_period_round_trip() {
    let f = fixture();
    let t = &f.table;
    let bounds = PearlBounds::default_for(t);
    let sol = flat_pearl(&f.bilayer, &f.spectral, t, EPS, KAPPA, &bounds).unwrap();
    let tp = 2.0 * std::f64::consts::PI * EPS / t.lambda0.sqrt() * (1.0 - (t.alpha0 * EPS).sqrt());
    assert!((sol.period() - tp).abs() < 1e-15);
    assert!((pearl_period(t.lambda0, t.alpha0, EPS) - tp).abs() < 1e-15);
    let (field, interface) = sample_pearl(&sol, 256, 4).unwrap();
    let m = extract_pearl_metrics(&field, &interface).unwrap();
    assert_eq!(m.mode, 4);
    assert!((m.period - tp).abs() < 1e-12, "{} vs {tp}", m.period);
    assert!((sol.amplitude - pearl_amplitude(t.alpha0, EPS, KAPPA)).abs() < 1e-15);
    assert!((sol.amplitude - 2.0 * (EPS * KAPPA).sqrt() / t.alpha0.powf(0.25)).abs() < 1e-15);
}

#[test]
fn circular_bead_count_round_trip() {
    let f = fixture();
    let t = &f.table;
    let bounds = PearlBounds::default_for(t);
    for n in [12, 40] {
        let sol = circular_pearl(&f.bilayer, &f.spectral, t, n, EPS, KAPPA, &bounds).unwrap();
        let PearlKind::Circular { beads, radius } = sol.kind else { panic!("expected a circular pearl") };
        assert_eq!(beads, n);
        assert!((radius - circular_radius(t, EPS, n)).abs() < 1e-15);
        let (field, interface) = sample_pearl(&sol, 512, 1).unwrap();
        let m = extract_pearl_metrics(&field, &interface).unwrap();
        assert_eq!(m.mode, n, "constructed {n}, measured {}", m.mode);
        assert!((m.location - radius).abs() < 2.0 * field.lx / field.nx as f64, "{} vs {radius}", m.location);
    }
}

#[test]
fn admissible_radii_are_equally_spaced() {
    let f = fixture();
    let t = &f.table;
    let bounds = PearlBounds::default_for(t);
    let radii = circular_radii(t, EPS, KAPPA, 1.0, &bounds, 12).unwrap();
    assert_eq!(radii.len(), 12);
    let gap = EPS / t.lambda0.sqrt() * (1.0 - (t.alpha0 * EPS).sqrt());
    assert!(radii[0].1 >= 1.0);
    assert!(radii[0].0 >= (bounds.n_minus / EPS).ceil() as usize);
    assert!(circular_radius(t, EPS, radii[0].0 - 1) < 1.0);
    for w in radii.windows(2) {
        assert_eq!(w[1].0, w[0].0 + 1);
        assert!((w[1].1 - w[0].1 - gap).abs() <= 4.0 * f64::EPSILON * w[1].1);
    }
}

#[test]
fn no_pearls_without_positive_alpha0() {
    let f = fixture();
    let t = CoefficientTable::compute(&f.bilayer, &f.spectral, CoefficientInputs { gamma: 0.1, eta1: 1.0, eta2: 4.0 })
        .unwrap();
    assert!(t.alpha0 < 0.0);
    let bounds = PearlBounds { epsilon0: 0.2, kappa0: 1.0, n_minus: 1.0 };
    assert!(matches!(flat_pearl(&f.bilayer, &f.spectral, &t, EPS, KAPPA, &bounds), Err(Error::NoPearling(_))));
    assert!(matches!(circular_radii(&t, EPS, KAPPA, 1.0, &bounds, 4), Err(Error::NoPearling(_))));
}

#[test]
fn parameter_bounds_are_enforced() {
    let f = fixture();
    let t = &f.table;
    let bounds = PearlBounds::default_for(t);
    assert!(flat_pearl(&f.bilayer, &f.spectral, t, 0.3, KAPPA, &bounds).is_err());
    assert!(flat_pearl(&f.bilayer, &f.spectral, t, EPS, 2.0 * bounds.kappa0, &bounds).is_err());
    assert!(circular_pearl(&f.bilayer, &f.spectral, t, 0, EPS, KAPPA, &bounds).is_err());
    assert!(supercriticality_bound(t, bounds.epsilon0, bounds.kappa0).pass);
    let loose = PearlBounds { kappa0: 10.0, ..bounds };
    assert!(!supercriticality_bound(t, loose.epsilon0, loose.kappa0).pass);
    assert!(matches!(
        flat_pearl(&f.bilayer, &f.spectral, t, EPS, KAPPA, &loose),
        Err(Error::Supercriticality { .. })
    ));
}
