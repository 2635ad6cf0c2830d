mod common;

use std::f64::consts::PI;

use common::fixture;
use fch_pearl::simulator::{
    default_stabilization, extract_pearl_metrics, gradient_check, init_field, read_checkpoint, run, write_checkpoint,
    CheckpointHeader, FchModel, Field2D, InitKind, Interface, SimConfig, Transverse,
};
use fch_pearl::Error;
use proptest::prelude::*;

fn small_config() -> SimConfig {
    SimConfig {
        nx: 128,
        ny: 128,
        lx: 3.2,
        ly: 3.2,
        init: InitKind::FlatBilayer,
        perturbation: 1e-2,
        perturbation_modes: 8,
        t_end: 0.2,
        sample_every: 0.05,
        ..SimConfig::default()
    }
}

fn bilayer_field(cfg: &SimConfig) -> Field2D {
    let f = fixture();
    let tr = Transverse::new(&f.bilayer, &f.spectral, cfg.epsilon, cfg.gamma, cfg.eta_d()).unwrap();
    init_field(&cfg.init, &tr, cfg).unwrap()
}

#[test]
fn gradient_matches_finite_differences() {
    let cfg = small_config();
    let u = bilayer_field(&cfg);
    let model = FchModel::for_config(fixture().well.clone(), &cfg);
    let errs = gradient_check(&model, &u, 20, 7, 1e-6).unwrap();
    let worst = errs.iter().copied().fold(0.0, f64::max);
    assert!(worst <= 1e-5, "{errs:?}");
}

#[test]
fn mass_is_conserved_and_energy_decreases() {
    let cfg = small_config();
    let u = bilayer_field(&cfg);
    let model = FchModel::for_config(fixture().well.clone(), &cfg);
    let interface = Interface::for_init(&cfg.init, &cfg);
    let out = run(&model, &cfg, u, &interface, |_, _| Ok(())).unwrap();
    assert!(out.max_mass_drift <= 1e-13, "{}", out.max_mass_drift);
    assert!(out.max_energy_increase <= 1e-8, "{}", out.max_energy_increase);
    assert_eq!(out.halvings, 0);
    let first = out.series.first().unwrap();
    let last = out.series.last().unwrap();
    assert!(last.energy <= first.energy);
    assert!((last.mass - first.mass).abs() <= 1e-12);
}

#[test]
fn far_field_state_is_a_fixed_point() {
    let cfg = small_config();
    let model = FchModel::for_config(fixture().well.clone(), &cfg);
    let u = Field2D::constant(cfg.nx, cfg.ny, cfg.lx, cfg.ly, -1.0).unwrap();
    let a = default_stabilization(&model.well);
    let mut v = u.clone();
    for _ in 0..50 {
        v = model.step(&v, 1e-2, a).unwrap();
    }
    let worst = v.values.iter().map(|x| (x + 1.0).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-14, "{worst}");
    assert!(model.variational_derivative(&u).values.iter().all(|m| m.abs() < 1e-14));
}

#[test]
fn stabilization_default() {
    assert!((default_stabilization(&fixture().well) - 7.5).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn energy_of_constant_state(c in -1.2f64..1.8) {
        let cfg = small_config();
        let model = FchModel::for_config(fixture().well.clone(), &cfg);
        let u = Field2D::constant(16, 16, 1.0, 2.0, c).unwrap();
        let model16 = FchModel::new(model.well.clone(), cfg.epsilon, cfg.eta1, cfg.eta2, 16, 16, 1.0, 2.0);
        let w = &model.well;
        let expect = 2.0 * (0.5 * w.dw(c).powi(2) - cfg.epsilon * cfg.eta2 * w.w(c));
        prop_assert!((model16.energy(&u) - expect).abs() <= 1e-12 * expect.abs().max(1.0));
    }
}

/// Quadratic energy of `-1 + delta cos(k x)`, averaged over one period.
#[test]
fn energy_of_small_cosine_mode() {
    let (eps, eta1, eta2) = (0.1, 1.0, 2.0);
    let (nx, ny, lx, ly) = (64usize, 8usize, 1.6, 0.4);
    let model = FchModel::new(fixture().well.clone(), eps, eta1, eta2, nx, ny, lx, ly);
    let delta = 1e-5;
    let k = 2.0 * PI * 3.0 / lx;
    let values = (0..nx * ny).map(|idx| -1.0 + delta * (k * lx * (idx % nx) as f64 / nx as f64).cos()).collect();
    let u = Field2D::new(nx, ny, lx, ly, values).unwrap();
    let mu = 2.5;
    let e2k2 = eps * eps * k * k;
    let expect = lx * ly * delta * delta / 4.0 * ((e2k2 + mu).powi(2) - eps * eta1 * e2k2 - eps * eta2 * mu);
    let got = model.energy(&u);
    assert!((got - expect).abs() <= 1e-4 * expect.abs(), "{got} vs {expect}");
}

#[test]
fn checkpoint_round_trip() {
    let cfg = small_config();
    let u = bilayer_field(&cfg);
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("field_00001");
    let header = CheckpointHeader {
        nx: u.nx,
        ny: u.ny,
        lx: u.lx,
        ly: u.ly,
        t: 0.25,
        epsilon: cfg.epsilon,
        eta1: cfg.eta1,
        eta2: cfg.eta2,
        seed: cfg.seed,
    };
    write_checkpoint(&base, &u, &header).unwrap();
    let (back, h) = read_checkpoint(&base.with_extension("bin")).unwrap();
    assert_eq!(back, u);
    assert_eq!(h, header);
    // custom init resumes from the checkpoint
    let resumed = SimConfig { init: InitKind::Custom { path: base.display().to_string() }, ..cfg.clone() };
    assert_eq!(bilayer_field(&resumed), u);
    std::fs::write(base.with_extension("bin"), [0u8; 16]).unwrap();
    assert!(matches!(read_checkpoint(&base), Err(Error::Config { .. })));
}

#[test]
fn midline_mode_of_a_synthetic_pattern() {
    let (nx, ny, lx, ly) = (256usize, 64usize, 6.4, 1.6);
    let values = (0..nx * ny)
        .map(|idx| {
            let (i, j) = (idx % nx, idx / nx);
            let (x, y) = (lx * i as f64 / nx as f64, ly * j as f64 / ny as f64);
            (-((y - 0.8) / 0.1).powi(2)).exp() * (1.0 + 0.2 * (2.0 * PI * 7.0 * x / lx).cos()) - 1.0
        })
        .collect();
    let u = Field2D::new(nx, ny, lx, ly, values).unwrap();
    let m = extract_pearl_metrics(&u, &Interface::Flat { y0: 0.8 }).unwrap();
    assert_eq!(m.mode, 7);
    assert!((m.period - lx / 7.0).abs() < 1e-12);
    assert!((m.amplitude - 0.2).abs() < 1e-3, "{}", m.amplitude);
    let flat = Field2D::constant(nx, ny, lx, ly, -1.0).unwrap();
    assert!(matches!(extract_pearl_metrics(&flat, &Interface::Flat { y0: 0.8 }), Err(Error::NoInterface)));
}

#[test]
fn unresolved_grid_is_rejected() {
    let cfg = SimConfig { nx: 32, ..small_config() };
    assert!(matches!(cfg.validate(), Err(Error::Config { .. })));
    let cfg = SimConfig { nx: 100, ..small_config() };
    assert!(cfg.validate().is_err());
}

#[test]
fn circle_that_does_not_fit_is_rejected() {
    let f = fixture();
    let cfg = SimConfig { init: InitKind::CircularBilayer { radius: 1.5 }, ..small_config() };
    let tr = Transverse::new(&f.bilayer, &f.spectral, cfg.epsilon, cfg.gamma, cfg.eta_d()).unwrap();
    assert!(matches!(init_field(&cfg.init, &tr, &cfg), Err(Error::Geometry(_))));
}
