mod common;

use common::fixture;
use fch_pearl::normal_form::{
    first_integrals, integrate_nf, nf8_rhs, pnf_periodic_orbit, pnf_rhs, reversible_shoot, NFCoefficients, NFState,
    NFSystem, ShootGuess,
};
use fch_pearl::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn table_coefficients() -> NFCoefficients {
    NFCoefficients::from_table(&fixture().table, 0.1).unwrap()
}

fn state() -> impl Strategy<Value = NFState> {
    prop::array::uniform8(-1.0f64..1.0).prop_map(|v| NFState::from_slice(&v, 0.0))
}

fn coefficients() -> impl Strategy<Value = NFCoefficients> {
    (prop::collection::vec(-2.0f64..2.0, 29), 0.01f64..0.3).prop_map(|(v, eps)| {
        let mut map = serde_json::Map::new();
        let names = [
            "omega1", "omega2", "omega3", "omega4", "alpha0", "alpha2", "alpha3", "alpha4", "alpha5", "alpha6",
            "alpha7", "alpha8", "alpha9", "alpha10", "alpha11", "alpha12", "beta1", "beta2", "beta3", "beta4",
            "beta5", "beta6", "beta7", "beta8", "beta9", "beta10", "beta11", "beta12", "beta13",
        ];
        for (n, x) in names.iter().zip(v) {
            map.insert((*n).into(), x.into());
        }
        map.insert("epsilon".into(), eps.into());
        serde_json::from_value(map.into()).unwrap()
    })
}

fn max_diff(a: &NFState, b: &NFState) -> f64 {
    a.distance(b)
}

fn scale(s: &NFState) -> f64 {
    s.to_vec().iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn nf8_is_s1_reversible(s in state(), c in coefficients()) {
        let lhs = nf8_rhs(&s.s1(), &c);
        let rhs = nf8_rhs(&s, &c).s1();
        let neg = NFState::from_slice(&rhs.to_vec().iter().map(|v| -v).collect::<Vec<_>>(), 0.0);
        prop_assert!(max_diff(&lhs, &neg) <= 1e-12 * scale(&lhs));
    }

    #[test]
    fn pnf_is_s1_reversible(s in state(), c in coefficients()) {
        let lhs = pnf_rhs(&s.s1(), &c);
        let neg: Vec<f64> = pnf_rhs(&s, &c).s1().to_vec().iter().map(|v| -v).collect();
        prop_assert!(max_diff(&lhs, &NFState::from_slice(&neg, 0.0)) <= 1e-12 * scale(&lhs));
    }

    #[test]
    fn nf8_is_rotation_equivariant(s in state(), c in coefficients(), theta in 0.0f64..6.3) {
        let lhs = nf8_rhs(&s.rotate(theta), &c);
        let rhs = nf8_rhs(&s, &c).rotate(theta);
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-12 * scale(&lhs));
    }

    #[test]
    fn first_integrals_are_invariant_under_symmetries(s in state(), c in coefficients(), theta in 0.0f64..6.3) {
        let (k, h) = first_integrals(&s, &c);
        let (k1, h1) = first_integrals(&s.rotate(theta), &c);
        let (k2, h2) = first_integrals(&s.s1(), &c);
        prop_assert!((k - k1).abs() < 1e-14 && (h - h1).abs() < 1e-13);
        prop_assert!((k - k2).abs() < 1e-14 && (h - h2).abs() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// `dK/dt = dH/dt = 0` along the PNF vector field.
    #[test]
    fn first_integrals_have_zero_derivative(s in state(), c in coefficients()) {
        let c = NFCoefficients { alpha7: c.alpha7, alpha8: c.alpha8, ..c.pearling_only() };
        let f = pnf_rhs(&s, &c);
        let h = 1e-6;
        let fwd = NFState::from_slice(&s.to_vec().iter().zip(f.to_vec()).map(|(a, b)| a + h * b).collect::<Vec<_>>(), 0.0);
        let bwd = NFState::from_slice(&s.to_vec().iter().zip(f.to_vec()).map(|(a, b)| a - h * b).collect::<Vec<_>>(), 0.0);
        let (kp, hp) = first_integrals(&fwd, &c);
        let (km, hm) = first_integrals(&bwd, &c);
        prop_assert!(((kp - km) / (2.0 * h)).abs() < 1e-6);
        prop_assert!(((hp - hm) / (2.0 * h)).abs() < 1e-6);
    }
}

#[test]
fn first_integral_drift_over_long_run() {
    let c = table_coefficients().pearling_only();
    let s0 = NFState::new(Complex64::new(0.05, 0.01), Complex64::new(-0.01, 0.02), [0.0; 4]);
    let tr = integrate_nf(NFSystem::Pnf, &c, &s0, 100.0, 1e-12).unwrap();
    let (k0, h0) = first_integrals(&s0, &c);
    let drift = tr.y.iter().fold(0.0f64, |m, y| {
        let (k, h) = first_integrals(&NFState::from_slice(y, 0.0), &c);
        m.max((k - k0).abs()).max((h - h0).abs())
    });
    assert!(drift <= 1e-10, "{drift}");
}

#[test]
fn closed_form_orbit() {
    let c = table_coefficients();
    let kappa = 0.05;
    let orbit = pnf_periodic_orbit(&c, kappa).unwrap();
    assert!(orbit.residual(&c, 4001) <= 1e-12);
    let s = orbit.state_at(0.3);
    let (k, _) = first_integrals(&s, &c);
    let target = c.epsilon.powf(1.5) * kappa;
    assert!((k - target).abs() <= 4.0 * f64::EPSILON * target);
    // integrating over one period returns to the start
    let tr = integrate_nf(NFSystem::Pnf, &c, &orbit.state_at(0.0), orbit.period, 1e-12).unwrap();
    let back = NFState::from_slice(tr.last(), 0.0);
    assert!(back.distance(&orbit.state_at(0.0)) < 1e-9);
}

#[test]
fn negative_alpha0_has_no_pearled_orbit() {
    let c = NFCoefficients { alpha0: -0.2, omega2: 0.2, alpha2: 0.5, ..Default::default() };
    assert!(matches!(pnf_periodic_orbit(&c, 0.05), Err(Error::NoPearling(_))));
    assert!(reversible_shoot(&c, 0.05, None).is_err());
}

#[test]
fn supercriticality_bound_is_enforced() {
    let c = NFCoefficients { alpha0: 0.2, omega2: -0.2, alpha2: 0.5, ..Default::default() };
    // sqrt(eps) |kappa| >= alpha0 / 2 alpha2 = 0.2
    assert!(matches!(pnf_periodic_orbit(&c, 0.7), Err(Error::Supercriticality { .. })));
    assert!(pnf_periodic_orbit(&c, 0.5).is_ok());
}

/// Determinant of a complex 4x4 matrix by elimination with partial pivoting.
fn det4(mut a: [[Complex64; 4]; 4]) -> Complex64 {
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..4 {
        let p = (k..4).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm())).unwrap();
        if a[p][k].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != k {
            a.swap(k, p);
            det = -det;
        }
        det *= a[k][k];
        for i in k + 1..4 {
            let l = a[i][k] / a[k][k];
            for j in k..4 {
                let t = a[k][j];
                a[i][j] -= l * t;
            }
        }
    }
    det
}

/// Real Jacobian of the PNF at the origin by central differences.
fn jacobian(c: &NFCoefficients) -> [[f64; 4]; 4] {
    let mut j = [[0.0; 4]; 4];
    let h = 1e-7;
    for col in 0..4 {
        let mut p = [0.0; 8];
        let mut m = [0.0; 8];
        p[col] = h;
        m[col] = -h;
        let fp = pnf_rhs(&NFState::from_slice(&p, 0.0), c).to_vec();
        let fm = pnf_rhs(&NFState::from_slice(&m, 0.0), c).to_vec();
        for row in 0..4 {
            j[row][col] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    j
}

fn char_poly(j: &[[f64; 4]; 4], z: Complex64) -> Complex64 {
    let mut a = [[Complex64::new(0.0, 0.0); 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            a[r][c] = Complex64::new(j[r][c], 0.0) - if r == c { z } else { Complex64::new(0.0, 0.0) };
        }
    }
    det4(a)
}

#[test]
fn linearization_has_versal_spectrum() {
    for alpha0 in [0.37, -0.25] {
        let c = NFCoefficients { epsilon: 0.1, omega1: -0.04, alpha0, omega2: -alpha0, alpha2: 0.49, ..Default::default() };
        let j = jacobian(&c);
        let w = Complex64::i() * (1.0 + c.omega1 * c.epsilon);
        let root = Complex64::new(-alpha0 * c.epsilon, 0.0).sqrt();
        for z in [w + root, w - root, (w + root).conj(), (w - root).conj()] {
            let d = char_poly(&j, z);
            assert!(d.norm() < 1e-8, "alpha0 {alpha0}: det at {z} = {d}");
        }
        assert!(char_poly(&j, w).norm() > 1e-3);
    }
}

#[test]
fn meander_subspace_is_invariant() {
    let c = NFCoefficients { beta1: 0.3, beta4: -0.2, alpha9: 0.1, ..table_coefficients() };
    let s0 = NFState::new(Complex64::new(0.05, 0.01), Complex64::new(-0.01, 0.02), [0.0; 4]);
    let tr = integrate_nf(NFSystem::Nf8, &c, &s0, 100.0, 1e-12).unwrap();
    let worst = tr.y.iter().map(|y| NFState::from_slice(y, 0.0).d_norm()).fold(0.0, f64::max);
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn shooting_recovers_the_closed_form_orbit() {
    let c = table_coefficients().pearling_only();
    let kappa = 0.05;
    let orbit = pnf_periodic_orbit(&c, kappa).unwrap();
    let s = orbit.state_at(0.0);
    for (scale, frac) in [(1.0, 0.5), (1.05, 0.51), (0.9, 0.48)] {
        let guess = ShootGuess { c2_imag: scale * s.c2.im, d1: 0.0, d3: -1e-3, half_period: frac * orbit.period };
        let shot = reversible_shoot(&c, kappa, Some(guess)).unwrap();
        assert!(shot.start.distance(&s) <= 1e-8, "{scale}: {}", shot.start.distance(&s));
        assert!((shot.period - orbit.period).abs() <= 1e-8);
    }
}

#[test]
fn orbit_persists_under_meander_coupling() {
    let base = table_coefficients().pearling_only();
    let kappa = 0.05;
    let orbit = pnf_periodic_orbit(&base, kappa).unwrap();
    let beta1 = 0.1;
    let c = NFCoefficients { beta1, ..base };
    let shot = reversible_shoot(&c, kappa, None).unwrap();
    assert!(shot.residual <= 1e-9);
    let correction = shot.start.distance(&orbit.state_at(0.0));
    assert!(correction <= 5.0 * beta1, "{correction}");
    // the full table (omega3, omega4 active) also admits a reversible orbit
    let full = reversible_shoot(&table_coefficients(), kappa, None).unwrap();
    assert!(full.residual <= 1e-9);
}

#[test]
fn shooting_rejects_zero_kappa() {
    assert!(matches!(reversible_shoot(&table_coefficients(), 0.0, None), Err(Error::InvalidArgument(_))));
}
