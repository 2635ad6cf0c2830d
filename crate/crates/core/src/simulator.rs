//! Pseudo-spectral simulation of the FCH `H^{-1}` gradient flow
//! `u_t = Lap mu(u)` on a periodic rectangle.
//!
//! Time stepping is first-order IMEX: the sixth-order term and a stabilizing
//! `A Lap u` are implicit, everything else explicit. The zero mode is never
//! touched, so mass is conserved to round-off.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::bilayer::{compute_u1, compute_v0, BilayerData, RadialGrid};
use crate::error::{Error, Result};
use crate::operator::SpectralData;
use crate::potential::Well;

/// Real field on `[0, lx) x [0, ly)`, row-major with `ny` rows of `nx` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field2D {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub values: Vec<f64>,
}

impl Field2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64, values: Vec<f64>) -> Result<Self> {
        if !nx.is_power_of_two() || !ny.is_power_of_two() || nx < 4 || ny < 4 {
            return Err(Error::InvalidGrid(format!("nx, ny must be powers of two >= 4, got {nx} x {ny}")));
        }
        if !(lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidGrid(format!("domain lengths must be positive, got {lx} x {ly}")));
        }
        if values.len() != nx * ny {
            return Err(Error::InvalidGrid(format!("expected {} values, got {}", nx * ny, values.len())));
        }
        Ok(Self { nx, ny, lx, ly, values })
    }

    pub fn constant(nx: usize, ny: usize, lx: f64, ly: f64, c: f64) -> Result<Self> {
        Self::new(nx, ny, lx, ly, vec![c; nx * ny])
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn mean(&self) -> f64 {
        neumaier_sum(&self.values) / self.values.len() as f64
    }

    pub fn range(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Periodic bicubic (Catmull-Rom) interpolation.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let sx = (x / self.hx()).rem_euclid(self.nx as f64);
        let sy = (y / self.hy()).rem_euclid(self.ny as f64);
        let (i0, j0) = (sx.floor() as isize, sy.floor() as isize);
        let (fx, fy) = (sx - i0 as f64, sy - j0 as f64);
        let w = |t: f64| {
            [
                0.5 * (-t * t * t + 2.0 * t * t - t),
                0.5 * (3.0 * t * t * t - 5.0 * t * t + 2.0),
                0.5 * (-3.0 * t * t * t + 4.0 * t * t + t),
                0.5 * (t * t * t - t * t),
            ]
        };
        let (wx, wy) = (w(fx), w(fy));
        let (nx, ny) = (self.nx as isize, self.ny as isize);
        let mut acc = 0.0;
        for (b, wyb) in wy.iter().enumerate() {
            let j = (j0 + b as isize - 1).rem_euclid(ny) as usize;
            let row = &self.values[j * self.nx..(j + 1) * self.nx];
            let mut r = 0.0;
            for (a, wxa) in wx.iter().enumerate() {
                r += wxa * row[(i0 + a as isize - 1).rem_euclid(nx) as usize];
            }
            acc += wyb * r;
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitKind {
    /// Interface along `y = ly/2`.
    FlatBilayer,
    /// Circle of the given radius centred in the box.
    CircularBilayer { radius: f64 },
    /// Field read from a checkpoint (`.json` header next to a `.bin` payload).
    Custom { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub epsilon: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// Sets the far field of the initial bilayer through `u1`; not imposed during the run.
    pub gamma: f64,
    pub dt: f64,
    pub t_end: f64,
    /// `A` in the implicit `A Lap u`; `None` picks the default from the well.
    pub stabilization: Option<f64>,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub init: InitKind,
    pub perturbation: f64,
    /// Highest tangential mode in the random perturbation.
    pub perturbation_modes: usize,
    pub seed: u64,
    pub sample_every: f64,
    pub checkpoint_every: Option<f64>,
    /// Allowed energy increase per step after the start-up transient.
    pub energy_tol: f64,
    pub max_halvings: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            eta1: 1.0,
            eta2: 2.0,
            gamma: 1.0,
            dt: 2e-3,
            t_end: 10.0,
            stabilization: None,
            nx: 256,
            ny: 256,
            lx: 6.4,
            ly: 6.4,
            init: InitKind::CircularBilayer { radius: 1.6 },
            perturbation: 1e-2,
            perturbation_modes: 64,
            seed: 1,
            sample_every: 0.5,
            checkpoint_every: None,
            energy_tol: 1e-8,
            max_halvings: 8,
        }
    }
}

impl SimConfig {
    pub fn eta_d(&self) -> f64 {
        self.eta1 - self.eta2
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::Config { key: format!("sim.{key}"), msg });
        if !(self.epsilon > 0.0 && self.epsilon <= 0.5) {
            return bad("epsilon", format!("must lie in (0, 0.5], got {}", self.epsilon));
        }
        if !(self.dt > 0.0) {
            return bad("dt", format!("must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0) {
            return bad("t_end", format!("must be non-negative, got {}", self.t_end));
        }
        if !self.nx.is_power_of_two() || !self.ny.is_power_of_two() {
            return bad("nx", format!("nx, ny must be powers of two, got {} x {}", self.nx, self.ny));
        }
        let h = (self.lx / self.nx as f64).max(self.ly / self.ny as f64);
        if h > self.epsilon / 4.0 + 1e-12 {
            return bad("nx", format!("grid spacing {h} does not resolve eps/4 = {}", self.epsilon / 4.0));
        }
        if let Some(a) = self.stabilization {
            if !(a >= 0.0) {
                return bad("stabilization", format!("must be non-negative, got {a}"));
            }
        }
        if !(self.sample_every > 0.0) {
            return bad("sample_every", "must be positive".into());
        }
        Ok(())
    }
}

/// `2 max |W''|` over `[-1, m]`.
pub fn default_stabilization(well: &Well) -> f64 {
    let m = well.m();
    let k = 400;
    2.0 * (0..=k)
        .map(|i| well.d2w(-1.0 + (m + 1.0) * i as f64 / k as f64).abs())
        .fold(0.0, f64::max)
}

/// The FCH energy, its gradient and the time stepper on a fixed grid.
///
/// Spectra are stored transposed over the half plane `kx = 0..=nx/2`:
/// entry `kx * ny + ky`.
pub struct FchModel {
    pub well: Well,
    pub epsilon: f64,
    pub eta1: f64,
    pub eta2: f64,
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    k2: Vec<f64>,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fy: Arc<dyn Fft<f64>>,
    ify: Arc<dyn Fft<f64>>,
}

fn wavenumbers(n: usize, l: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let k = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
            2.0 * PI * k / l
        })
        .collect()
}

/// Compensated sum.
fn neumaier_sum(v: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for &x in v {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

/// Spectral data of the current state reused between energy and step.
struct Spectra {
    u_hat: Vec<Complex64>,
    lap: Vec<f64>,
    energy: f64,
}

impl FchModel {
    pub fn new(well: Well, epsilon: f64, eta1: f64, eta2: f64, nx: usize, ny: usize, lx: f64, ly: f64) -> Self {
        let mut planner = FftPlanner::new();
        let mut real_planner = RealFftPlanner::new();
        let kx = wavenumbers(nx, lx);
        let ky = wavenumbers(ny, ly);
        let k2 = kx[..=nx / 2].iter().flat_map(|&p| ky.iter().map(move |q| p * p + q * q)).collect();
        Self {
            well,
            epsilon,
            eta1,
            eta2,
            nx,
            ny,
            lx,
            ly,
            k2,
            r2c: real_planner.plan_fft_forward(nx),
            c2r: real_planner.plan_fft_inverse(nx),
            fy: planner.plan_fft_forward(ny),
            ify: planner.plan_fft_inverse(ny),
        }
    }

    pub fn for_config(well: Well, cfg: &SimConfig) -> Self {
        Self::new(well, cfg.epsilon, cfg.eta1, cfg.eta2, cfg.nx, cfg.ny, cfg.lx, cfg.ly)
    }

    fn check_shape(&self, u: &Field2D) {
        assert!(u.nx == self.nx && u.ny == self.ny, "field shape does not match the model");
    }

    fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        let (nx, ny) = (self.nx, self.ny);
        let nh = nx / 2 + 1;
        let mut out = vec![Complex64::new(0.0, 0.0); nh * ny];
        let mut rin = self.r2c.make_input_vec();
        let mut rout = self.r2c.make_output_vec();
        let mut scratch = self.r2c.make_scratch_vec();
        for y in 0..ny {
            rin.copy_from_slice(&f[y * nx..(y + 1) * nx]);
            self.r2c.process_with_scratch(&mut rin, &mut rout, &mut scratch).expect("buffer sizes match the plan");
            for (kx, v) in rout.iter().enumerate() {
                out[kx * ny + y] = *v;
            }
        }
        self.fy.process(&mut out);
        out
    }

    fn inverse(&self, mut hat: Vec<Complex64>) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        self.ify.process(&mut hat);
        let mut out = vec![0.0; nx * ny];
        let mut cin = self.c2r.make_input_vec();
        let mut scratch = self.c2r.make_scratch_vec();
        let scale = 1.0 / (nx * ny) as f64;
        for y in 0..ny {
            for (kx, c) in cin.iter_mut().enumerate() {
                *c = hat[kx * ny + y];
            }
            cin[0].im = 0.0;
            cin[nx / 2].im = 0.0;
            let row = &mut out[y * nx..(y + 1) * nx];
            self.c2r.process_with_scratch(&mut cin, row, &mut scratch).expect("buffer sizes match the plan");
            row.iter_mut().for_each(|v| *v *= scale);
        }
        out
    }

    /// Multiplicity of a half-plane entry in the full spectrum.
    fn weight(&self, idx: usize) -> f64 {
        let kx = idx / self.ny;
        if kx == 0 || kx == self.nx / 2 {
            1.0
        } else {
            2.0
        }
    }

    fn lap_of_hat(&self, h: &[Complex64]) -> Vec<f64> {
        self.inverse(h.iter().zip(&self.k2).map(|(v, k2)| -k2 * v).collect())
    }

    fn spectra(&self, u: &Field2D) -> Spectra {
        let u_hat = self.forward(&u.values);
        let lap = self.lap_of_hat(&u_hat);
        let energy = self.energy_from(u, &u_hat, &lap);
        Spectra { u_hat, lap, energy }
    }

    fn energy_from(&self, u: &Field2D, u_hat: &[Complex64], lap: &[f64]) -> f64 {
        let e2 = self.epsilon * self.epsilon;
        let cell = u.hx() * u.hy();
        let density: Vec<f64> = u
            .values
            .iter()
            .zip(lap)
            .map(|(&v, &l)| {
                let w = e2 * l - self.well.dw(v);
                0.5 * w * w - self.epsilon * self.eta2 * self.well.w(v)
            })
            .collect();
        let local = neumaier_sum(&density);
        let n = u.values.len() as f64;
        let grad2: f64 =
            u_hat.iter().zip(&self.k2).enumerate().map(|(i, (c, k2))| self.weight(i) * k2 * c.norm_sqr()).sum::<f64>() / n;
        cell * (local - 0.5 * self.epsilon * self.eta1 * e2 * grad2)
    }

    /// `int 1/2 (eps^2 Lap u - W'(u))^2 - eps (eta1 eps^2 |grad u|^2 / 2 + eta2 W(u))`.
    pub fn energy(&self, u: &Field2D) -> f64 {
        self.check_shape(u);
        self.spectra(u).energy
    }

    /// Spectrum of `mu`: `-eps^2 k^2 w_hat + F[(eps eta1 - W''(u)) w + eps eta_d W'(u)]`
    /// with `w = eps^2 Lap u - W'(u)`.
    fn mu_hat(&self, u: &Field2D, lap: &[f64]) -> Vec<Complex64> {
        let e2 = self.epsilon * self.epsilon;
        let eta_d = self.eta1 - self.eta2;
        let w: Vec<f64> = u.values.iter().zip(lap).map(|(&v, &l)| e2 * l - self.well.dw(v)).collect();
        let rest: Vec<f64> = (0..w.len())
            .map(|k| {
                let v = u.values[k];
                (self.epsilon * self.eta1 - self.well.d2w(v)) * w[k] + self.epsilon * eta_d * self.well.dw(v)
            })
            .collect();
        let w_hat = self.forward(&w);
        let mut out = self.forward(&rest);
        for (k, o) in out.iter_mut().enumerate() {
            *o -= e2 * self.k2[k] * w_hat[k];
        }
        out
    }

    /// `(eps^2 Lap - W''(u) + eps eta1)(eps^2 Lap u - W'(u)) + eps eta_d W'(u)`.
    pub fn variational_derivative(&self, u: &Field2D) -> Field2D {
        self.check_shape(u);
        let s = self.spectra(u);
        Field2D { values: self.inverse(self.mu_hat(u, &s.lap)), ..u.clone() }
    }

    /// Effective Lagrange multiplier `gamma = mean(mu) / eps`; `mu` is uniform at equilibrium.
    pub fn gamma_eff(&self, u: &Field2D) -> f64 {
        self.variational_derivative(u).mean() / self.epsilon
    }

    fn step_from(&self, u: &Field2D, s: &Spectra, dt: f64, a: f64) -> Result<Field2D> {
        let e4 = self.epsilon.powi(4);
        let mu_hat = self.mu_hat(u, &s.lap);
        let next: Vec<Complex64> = (0..mu_hat.len())
            .map(|k| {
                let k2 = self.k2[k];
                let implicit = e4 * k2 * k2 + a;
                let n_hat = mu_hat[k] - implicit * s.u_hat[k];
                (s.u_hat[k] - dt * k2 * n_hat) / (1.0 + dt * k2 * implicit)
            })
            .collect();
        let out = Field2D { values: self.inverse(next), ..u.clone() };
        if !out.is_finite() {
            return Err(Error::BlowUp(dt));
        }
        Ok(out)
    }

    /// One IMEX step of size `dt` with stabilization `a`.
    pub fn step(&self, u: &Field2D, dt: f64, a: f64) -> Result<Field2D> {
        self.check_shape(u);
        self.step_from(u, &self.spectra(u), dt, a)
    }

    pub fn shape(&self) -> (usize, usize, f64, f64) {
        (self.nx, self.ny, self.lx, self.ly)
    }
}

/// Transverse structure used to build initial data: `u0 + eps u1` and `psi0`.
#[derive(Debug, Clone)]
pub struct Transverse {
    pub grid: RadialGrid,
    pub base: Vec<f64>,
    pub psi0: Vec<f64>,
    /// Stretched distance beyond which `base` and `psi0` are within `1e-8` of their far-field values.
    pub reach: f64,
}

impl Transverse {
    pub fn new(b: &BilayerData, op: &SpectralData, epsilon: f64, gamma: f64, eta_d: f64) -> Result<Self> {
        let v0 = compute_v0(b, op, gamma, eta_d)?;
        let u1 = compute_u1(op, &v0)?;
        let base: Vec<f64> = b.u0.iter().zip(&u1).map(|(a, c)| a + epsilon * c).collect();
        let n = b.grid.n;
        let far = base[n - 1];
        let pmax = op.psi0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let last = (b.grid.center()..n)
            .rev()
            .find(|&i| (base[i] - far).abs() > 1e-8 || op.psi0[i].abs() > 1e-8 * pmax)
            .unwrap_or(b.grid.center());
        Ok(Self { grid: b.grid, base, psi0: op.psi0.clone(), reach: b.grid.r(last) })
    }

    pub fn far_field(&self) -> f64 {
        self.base[self.base.len() - 1]
    }

    pub fn psi0_max(&self) -> f64 {
        self.psi0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Seeded random tangential profile `sum_k a_k cos(k s + phi_k)`, `k = 1..modes`,
/// scaled to unit maximum over `samples` points of `[0, 2 pi)`.
fn random_modulation(seed: u64, modes: usize) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms: Vec<(f64, f64)> = (0..modes).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..2.0 * PI))).collect();
    let samples = 8 * modes.max(1);
    let peak = (0..samples)
        .map(|j| {
            let s = 2.0 * PI * j as f64 / samples as f64;
            eval_modulation(&terms, s).abs()
        })
        .fold(0.0, f64::max);
    if peak > 0.0 {
        terms.iter_mut().for_each(|t| t.0 /= peak);
    }
    terms
}

fn eval_modulation(terms: &[(f64, f64)], s: f64) -> f64 {
    terms.iter().enumerate().map(|(k, (a, p))| a * ((k + 1) as f64 * s + p).cos()).sum()
}

/// Initial field: a bilayer with optional random pearling-mode perturbation.
pub fn init_field(kind: &InitKind, tr: &Transverse, cfg: &SimConfig) -> Result<Field2D> {
    let (nx, ny, lx, ly) = (cfg.nx, cfg.ny, cfg.lx, cfg.ly);
    let eps = cfg.epsilon;
    let terms = if cfg.perturbation != 0.0 { random_modulation(cfg.seed, cfg.perturbation_modes) } else { Vec::new() };
    let pscale = if tr.psi0_max() > 0.0 { cfg.perturbation / tr.psi0_max() } else { 0.0 };
    let margin = eps * tr.reach;
    let values = match kind {
        InitKind::FlatBilayer => {
            if ly / 2.0 < margin {
                return Err(Error::Geometry(format!("strip half-width {} below bilayer reach {margin}", ly / 2.0)));
            }
            let y0 = ly / 2.0;
            let mut v = vec![0.0; nx * ny];
            for j in 0..ny {
                let r = (j as f64 * ly / ny as f64 - y0) / eps;
                let (base, psi) = (tr.grid.interpolate(&tr.base, r), tr.grid.interpolate(&tr.psi0, r));
                for i in 0..nx {
                    let s = 2.0 * PI * i as f64 / nx as f64;
                    v[j * nx + i] = base + pscale * psi * eval_modulation(&terms, s);
                }
            }
            v
        }
        InitKind::CircularBilayer { radius } => {
            let (cx, cy) = (lx / 2.0, ly / 2.0);
            if !(*radius > margin) || radius + margin > cx.min(cy) {
                return Err(Error::Geometry(format!(
                    "radius {radius} with bilayer reach {margin} does not fit the {lx} x {ly} box"
                )));
            }
            let mut v = vec![0.0; nx * ny];
            for j in 0..ny {
                let y = j as f64 * ly / ny as f64 - cy;
                for i in 0..nx {
                    let x = i as f64 * lx / nx as f64 - cx;
                    let r = (x.hypot(y) - radius) / eps;
                    let psi = tr.grid.interpolate(&tr.psi0, r);
                    let pert = if psi != 0.0 { pscale * psi * eval_modulation(&terms, y.atan2(x)) } else { 0.0 };
                    v[j * nx + i] = tr.grid.interpolate(&tr.base, r) + pert;
                }
            }
            v
        }
        InitKind::Custom { path } => {
            let (field, _) = read_checkpoint(Path::new(path))?;
            if field.nx != nx || field.ny != ny {
                return Err(Error::Geometry(format!("checkpoint is {} x {}, config wants {nx} x {ny}", field.nx, field.ny)));
            }
            return Ok(Field2D { lx, ly, ..field });
        }
    };
    Field2D::new(nx, ny, lx, ly, values)
}

/// Where to look for the interface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Interface {
    /// Horizontal midline `y = y0`.
    Flat { y0: f64 },
    /// Circle about `(cx, cy)`; the radius is located as the ridge of the angular mean.
    Circular { cx: f64, cy: f64 },
}

impl Interface {
    pub fn for_init(kind: &InitKind, cfg: &SimConfig) -> Self {
        match kind {
            InitKind::CircularBilayer { .. } => Self::Circular { cx: cfg.lx / 2.0, cy: cfg.ly / 2.0 },
            _ => Self::Flat { y0: cfg.ly / 2.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PearlMetrics {
    /// Dominant nonzero tangential mode (bead count on a circle).
    pub mode: usize,
    /// Tangential length of one period of the dominant mode.
    pub period: f64,
    /// Cosine amplitude of the dominant mode along the midline.
    pub amplitude: f64,
    /// Root-sum-square of all nonzero mode amplitudes.
    pub modulation: f64,
    /// Circle radius or strip position of the sampled midline.
    pub location: f64,
}

fn midline_spectrum(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let mut d: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut d);
    (0..=n / 2).map(|k| if k == 0 || k == n / 2 { d[k].norm() / n as f64 } else { 2.0 * d[k].norm() / n as f64 }).collect()
}

/// Cosine amplitudes of the tangential modes `0..=n/2` along the interface
/// midline, with the midline length and location.
#[derive(Debug, Clone, PartialEq)]
pub struct MidlineSpectrum {
    pub amplitudes: Vec<f64>,
    pub length: f64,
    pub location: f64,
}

pub fn midline_spectrum_of(u: &Field2D, interface: &Interface) -> Result<MidlineSpectrum> {
    let (lo, hi) = u.range();
    if hi - lo < 1e-3 {
        return Err(Error::NoInterface);
    }
    let (samples, length, location) = match *interface {
        Interface::Flat { y0 } => {
            let row: Vec<f64> = (0..u.nx).map(|i| u.sample(u.x(i), y0)).collect();
            (row, u.lx, y0)
        }
        Interface::Circular { cx, cy } => {
            let h = u.hx().min(u.hy());
            let rmax = 0.5 * u.lx.min(u.ly);
            let angles = 64;
            let mean_at = |r: f64| {
                (0..angles)
                    .map(|a| {
                        let t = 2.0 * PI * a as f64 / angles as f64;
                        u.sample(cx + r * t.cos(), cy + r * t.sin())
                    })
                    .sum::<f64>()
                    / angles as f64
            };
            let steps = (rmax / (0.5 * h)) as usize;
            let (mut best_r, mut best) = (h, f64::NEG_INFINITY);
            for s in 2..steps {
                let r = s as f64 * 0.5 * h;
                let m = mean_at(r);
                if m > best {
                    best = m;
                    best_r = r;
                }
            }
            let m = 1024;
            let ring: Vec<f64> = (0..m)
                .map(|a| {
                    let t = 2.0 * PI * a as f64 / m as f64;
                    u.sample(cx + best_r * t.cos(), cy + best_r * t.sin())
                })
                .collect();
            (ring, 2.0 * PI * best_r, best_r)
        }
    };
    Ok(MidlineSpectrum { amplitudes: midline_spectrum(&samples), length, location })
}

/// Samples the interface midline and returns its dominant tangential mode.
pub fn extract_pearl_metrics(u: &Field2D, interface: &Interface) -> Result<PearlMetrics> {
    let spec = midline_spectrum_of(u, interface)?;
    let a = &spec.amplitudes;
    let (mode, amplitude) =
        a.iter().enumerate().skip(1).fold((1, 0.0), |(bk, ba), (k, &v)| if v > ba { (k, v) } else { (bk, ba) });
    let modulation = a[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(PearlMetrics { mode, period: spec.length / mode as f64, amplitude, modulation, location: spec.location })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    pub dt: f64,
    pub mass: f64,
    pub energy: f64,
    pub mode: usize,
    pub amplitude: f64,
    pub modulation: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: Vec<SeriesRow>,
    pub field: Field2D,
    /// Largest `|mean(u_{n+1}) - mean(u_n)|` relative to `max(1, |mean|)`.
    pub max_mass_drift: f64,
    /// Largest per-step energy increase after the start-up transient.
    pub max_energy_increase: f64,
    pub steps: usize,
    pub halvings: u32,
}

/// Integrates to `cfg.t_end`, sampling metrics every `cfg.sample_every` and
/// calling `checkpoint(t, field)` every `cfg.checkpoint_every`.
///
/// After a transient of ten steps an energy increase above `cfg.energy_tol`
/// rejects the step and halves `dt`.
pub fn run(
    model: &FchModel,
    cfg: &SimConfig,
    u0: Field2D,
    interface: &Interface,
    mut checkpoint: impl FnMut(f64, &Field2D) -> Result<()>,
) -> Result<RunOutput> {
    cfg.validate()?;
    let a = cfg.stabilization.unwrap_or_else(|| default_stabilization(&model.well));
    let mut dt = cfg.dt;
    let mut t = 0.0;
    let mut u = u0;
    let mut s = model.spectra(&u);
    let mut series = Vec::new();
    let mut next_sample = 0.0;
    let mut next_ckpt = cfg.checkpoint_every.map(|_| 0.0);
    let mut max_mass_drift: f64 = 0.0;
    let mut max_energy_increase: f64 = 0.0;
    let mut steps = 0;
    let mut halvings = 0;
    let transient = 10.0 * cfg.dt;
    loop {
        if t + 1e-12 * dt >= next_sample {
            let m = extract_pearl_metrics(&u, interface).ok();
            series.push(SeriesRow {
                t,
                dt,
                mass: u.mean(),
                energy: s.energy,
                mode: m.map_or(0, |m| m.mode),
                amplitude: m.map_or(0.0, |m| m.amplitude),
                modulation: m.map_or(0.0, |m| m.modulation),
            });
            next_sample += cfg.sample_every;
        }
        if let (Some(next), Some(every)) = (next_ckpt, cfg.checkpoint_every) {
            if t + 1e-12 * dt >= next {
                checkpoint(t, &u)?;
                next_ckpt = Some(next + every);
            }
        }
        if t >= cfg.t_end - 1e-12 * dt {
            break;
        }
        let h = dt.min(cfg.t_end - t);
        let cand = model.step_from(&u, &s, h, a).map_err(|_| Error::BlowUp(t))?;
        let cs = model.spectra(&cand);
        let increase = cs.energy - s.energy;
        if t > transient && increase > cfg.energy_tol {
            if halvings >= cfg.max_halvings {
                return Err(Error::StepUnderflow(t));
            }
            halvings += 1;
            dt *= 0.5;
            continue;
        }
        if t > transient {
            max_energy_increase = max_energy_increase.max(increase);
        }
        let mean0 = u.mean();
        let drift = (cand.mean() - mean0).abs() / mean0.abs().max(1.0);
        max_mass_drift = max_mass_drift.max(drift);
        u = cand;
        s = cs;
        t += h;
        steps += 1;
    }
    Ok(RunOutput { series, field: u, max_mass_drift, max_energy_increase, steps, halvings })
}

/// Header stored next to a binary checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub t: f64,
    pub epsilon: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub seed: u64,
}

/// Writes `<base>.bin` (little-endian f64, row-major) and `<base>.json`.
pub fn write_checkpoint(base: &Path, field: &Field2D, header: &CheckpointHeader) -> Result<()> {
    let bytes: Vec<u8> = field.values.iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(base.with_extension("bin"), bytes)?;
    let json = serde_json::to_string_pretty(header).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    std::fs::write(base.with_extension("json"), json)?;
    Ok(())
}

/// Reads a checkpoint given either of its two paths or the common base.
pub fn read_checkpoint(path: &Path) -> Result<(Field2D, CheckpointHeader)> {
    let text = std::fs::read_to_string(path.with_extension("json"))?;
    let header: CheckpointHeader = serde_json::from_str(&text).map_err(|e| Error::Config {
        key: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let bytes = std::fs::read(path.with_extension("bin"))?;
    if bytes.len() != 8 * header.nx * header.ny {
        return Err(Error::Config { key: path.display().to_string(), msg: "payload size does not match header".into() });
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok((Field2D::new(header.nx, header.ny, header.lx, header.ly, values)?, header))
}

/// Exponential rate of the midline modulation over `[t_from, t_end]` by least squares on its log.
pub fn modulation_growth_rate(series: &[SeriesRow], t_from: f64) -> f64 {
    let pts: Vec<(f64, f64)> =
        series.iter().filter(|r| r.t >= t_from && r.modulation > 0.0).map(|r| (r.t, r.modulation.ln())).collect();
    let k = pts.len() as f64;
    if pts.len() < 2 {
        return 0.0;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Smooth seeded random field: a sum of Fourier modes with `|kx|, |ky| <= 4`, scaled to unit maximum.
pub fn random_smooth_field(nx: usize, ny: usize, lx: f64, ly: f64, rng: &mut impl Rng) -> Result<Field2D> {
    let terms: Vec<(f64, f64, f64, f64)> = (0..12)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-4..=4) as f64,
                rng.gen_range(-4..=4) as f64,
                rng.gen_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let mut values = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (i as f64 / nx as f64, j as f64 / ny as f64);
            values[j * nx + i] =
                terms.iter().map(|&(a, p, q, ph)| a * (2.0 * PI * (p * x + q * y) + ph).cos()).sum::<f64>();
        }
    }
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    values.iter_mut().for_each(|v| *v /= peak);
    Field2D::new(nx, ny, lx, ly, values)
}

/// Relative mismatch between `<mu(u), v>` and `(F(u + hv) - F(u - hv)) / 2h` over
/// `directions` random smooth directions.
pub fn gradient_check(model: &FchModel, u: &Field2D, directions: usize, seed: u64, h: f64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = model.variational_derivative(u);
    let cell = u.hx() * u.hy();
    (0..directions)
        .map(|_| {
            let v = random_smooth_field(u.nx, u.ny, u.lx, u.ly, &mut rng)?;
            let shifted = |s: f64| Field2D {
                values: u.values.iter().zip(&v.values).map(|(a, b)| a + s * b).collect(),
                ..u.clone()
            };
            let fd = (model.energy(&shifted(h)) - model.energy(&shifted(-h))) / (2.0 * h);
            let exact = cell * neumaier_sum(&mu.values.iter().zip(&v.values).map(|(a, b)| a * b).collect::<Vec<_>>());
            Ok((fd - exact).abs() / exact.abs().max(fd.abs()).max(1e-12))
        })
        .collect()
}
