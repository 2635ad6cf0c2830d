//! Scalar coefficients of the pearling reduction: bifurcation coefficient
//! `alpha0` and its affine parts, meander coefficient `beta0`, curvature
//! correction `gamma1`, the quadratic/cubic integrals `nu1..nu8`, linear
//! coefficients `mu1..mu6`, the versal frequencies `omega1..omega4`, the
//! cubic coefficient `alpha2`, and a numerical check that `alpha1` vanishes.
//!
//! All integrals use the composite trapezoid rule on the radial grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bilayer::{compute_u1, compute_v0, BilayerData};
use crate::error::Result;
use crate::operator::SpectralData;

/// Physical parameters entering the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientInputs {
    pub gamma: f64,
    pub eta1: f64,
    pub eta2: f64,
}

impl CoefficientInputs {
    pub fn eta_d(&self) -> f64 {
        self.eta1 - self.eta2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub gamma: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta_d: f64,
    pub lambda0: f64,
    pub alpha0: f64,
    pub alpha01: f64,
    pub alpha02: f64,
    pub beta0: f64,
    pub gamma1: f64,
    pub nu: [f64; 8],
    pub mu: [f64; 6],
    pub omega: [f64; 4],
    pub alpha2: f64,
    pub alpha1_residual: f64,
    pub grid_n: usize,
    pub grid_half_width: f64,
}

/// `integrand(i)` summed with trapezoid weights.
fn quad(b: &BilayerData, f: impl Fn(usize) -> f64) -> f64 {
    let v: Vec<f64> = (0..b.grid.n).map(f).collect();
    b.grid.integrate(&v)
}

/// `(1/4 lambda0^2) int (W'''(u0) v0 - eta_d W''(u0)) psi^2` for a given `v0`.
fn bifurcation_integral(b: &BilayerData, op: &SpectralData, v0: &[f64], eta_d: f64, psi: &[f64]) -> f64 {
    let w = &b.well;
    let l2 = op.lambda0 * op.lambda0;
    quad(b, |i| (w.d3w(b.u0[i]) * v0[i] - eta_d * w.d2w(b.u0[i])) * psi[i] * psi[i]) / (4.0 * l2)
}

pub fn alpha0(b: &BilayerData, op: &SpectralData, gamma: f64, eta_d: f64) -> Result<f64> {
    let v0 = compute_v0(b, op, gamma, eta_d)?;
    Ok(bifurcation_integral(b, op, &v0, eta_d, &op.psi0))
}

/// `(alpha01, alpha02)` with `alpha0 = alpha01 gamma - alpha02 eta_d`, by probing.
pub fn alpha0_parts(b: &BilayerData, op: &SpectralData) -> Result<(f64, f64)> {
    Ok((alpha0(b, op, 1.0, 0.0)?, -alpha0(b, op, 0.0, 1.0)?))
}

pub fn beta0(b: &BilayerData, op: &SpectralData, gamma: f64, eta_d: f64) -> Result<f64> {
    let v0 = compute_v0(b, op, gamma, eta_d)?;
    Ok(bifurcation_integral(b, op, &v0, eta_d, &op.psi1))
}

/// `(eta_d - 2 eta1) int u0'^2 / (2 int (u0 + 1))`.
pub fn gamma1(b: &BilayerData, eta1: f64, eta_d: f64) -> f64 {
    let num = quad(b, |i| b.du0[i] * b.du0[i]);
    let den = quad(b, |i| b.u0[i] + 1.0);
    (eta_d - 2.0 * eta1) * num / (2.0 * den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearCubic {
    pub nu: [f64; 8],
    pub mu: [f64; 6],
    pub omega: [f64; 4],
}

pub fn nu_coefficients(b: &BilayerData, op: &SpectralData) -> [f64; 8] {
    let w = &b.well;
    let l = op.lambda0;
    let (p0, p1) = (&op.psi0, &op.psi1);
    let w3 = |i: usize| w.d3w(b.u0[i]);
    let w4 = |i: usize| w.d4w(b.u0[i]);
    [
        -quad(b, |i| w3(i) * p0[i].powi(3)) / (4.0 * l),
        -quad(b, |i| w3(i) * p0[i] * p1[i] * p1[i]) / (4.0 * l),
        -quad(b, |i| w4(i) * p0[i].powi(4)) / l,
        -quad(b, |i| w4(i) * p0[i] * p0[i] * p1[i] * p1[i]) / l,
        -quad(b, |i| w4(i) * p1[i].powi(4)) / l,
        quad(b, |i| w3(i).powi(2) * p0[i].powi(4)) / (l * l),
        quad(b, |i| w3(i).powi(2) * p0[i] * p0[i] * p1[i] * p1[i]) / (l * l),
        quad(b, |i| w3(i).powi(2) * p1[i].powi(4)) / (l * l),
    ]
}

/// `mu1..mu6` from `u1` (with `L0 u1` applied by the discrete operator).
pub fn mu_coefficients(b: &BilayerData, op: &SpectralData, u1: &[f64], eta1: f64, eta_d: f64) -> [f64; 6] {
    let w = &b.well;
    let l = op.lambda0;
    let lu1 = op.apply(u1);
    let (p0, p1) = (&op.psi0, &op.psi1);
    let w3 = |i: usize| w.d3w(b.u0[i]);
    let w2 = |i: usize| w.d2w(b.u0[i]);
    let s0 = |i: usize| p0[i] * p0[i];
    let s1 = |i: usize| p1[i] * p1[i];
    [
        -quad(b, |i| w3(i) * u1[i] * s0(i)) / (2.0 * l),
        -quad(b, |i| (w3(i) * lu1[i] - eta_d * w2(i)) * s0(i)) / (4.0 * l * l),
        eta1 / (2.0 * l)
            - quad(b, |i| (w3(i) * (lu1[i] + 2.0 * l * u1[i]) - eta_d * w2(i)) * s0(i)) / (4.0 * l * l),
        quad(b, |i| w3(i) * u1[i] * s1(i)) / l,
        quad(b, |i| (w3(i) * lu1[i] - eta_d * w2(i)) * s1(i)) / (l * l),
        -eta1 / l + quad(b, |i| w3(i) * u1[i] * s1(i)) / l,
    ]
}

pub fn omega_from_mu(mu: &[f64; 6]) -> [f64; 4] {
    [0.5 * (mu[0] + mu[2]), mu[1], mu[4], mu[3] + mu[5]]
}

pub fn nu_mu_omega(b: &BilayerData, op: &SpectralData, gamma: f64, eta1: f64, eta_d: f64) -> Result<LinearCubic> {
    let v0 = compute_v0(b, op, gamma, eta_d)?;
    let u1 = compute_u1(op, &v0)?;
    let mu = mu_coefficients(b, op, &u1, eta1, eta_d);
    Ok(LinearCubic { nu: nu_coefficients(b, op), mu, omega: omega_from_mu(&mu) })
}

/// `g = W'''(u0) psi0^2 + 4 lambda0 nu1 psi0`, orthogonal to `psi0` by the
/// definition of `nu1`.
pub fn cubic_source(b: &BilayerData, op: &SpectralData, nu1: f64) -> Vec<f64> {
    let p0 = &op.psi0;
    (0..b.grid.n).map(|i| b.well.d3w(b.u0[i]) * p0[i] * p0[i] + 4.0 * op.lambda0 * nu1 * p0[i]).collect()
}

/// `Lt f = (1/3 l^2)(f/2 + 2l L0^{-1} f + 2l R f - l R^2 f)`, `R = (L0 - 4l)^{-1}`.
pub fn apply_lt(op: &SpectralData, f: &[f64]) -> Result<Vec<f64>> {
    let l = op.lambda0;
    let inv = op.solve_shifted(0.0, f)?;
    let r1 = op.solve_shifted(4.0 * l, f)?;
    let r2 = op.solve_shifted(4.0 * l, &r1)?;
    Ok((0..f.len())
        .map(|i| (0.5 * f[i] + 2.0 * l * inv[i] + 2.0 * l * r1[i] - l * r2[i]) / (3.0 * l * l))
        .collect())
}

/// `alpha2 = -nu3/3 + (80/9) nu1^2 + <g, Lt g>`.
pub fn alpha2(b: &BilayerData, op: &SpectralData) -> Result<f64> {
    let nu = nu_coefficients(b, op);
    let g = cubic_source(b, op, nu[0]);
    let lg = apply_lt(op, &g)?;
    Ok(-nu[2] / 3.0 + 80.0 / 9.0 * nu[0] * nu[0] + b.grid.dot(&g, &lg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alpha1Check {
    /// Coefficient of `C1^2 conj(C1)` in `rho(C)`.
    pub bracket: f64,
    /// `6 nu1^2 - (3/8) nu6`, the closed form of the bracket.
    pub bracket_closed_form: f64,
    /// `-6 nu1^2 + (3/8) nu6 + bracket`.
    pub alpha1: f64,
}

/// Assembles the `C1^2 conj(C1)` coefficient of `rho(C) = int Z(C).(C^T X C)`
/// with `C2 = 0` and no meander amplitudes. Only `X11 C1^2 + 2 X13 C1 conj(C1)`
/// contributes: `Z` is linear with coefficients `z` (of `C1`) and `zb` (of
/// `conj(C1)`), so the coefficient is `zb . X11 + 2 z . X13`. The operator
/// entry of `Z` acts on the first component it is paired with.
pub fn verify_alpha1(b: &BilayerData, op: &SpectralData) -> Result<Alpha1Check> {
    let l = op.lambda0;
    let nu = nu_coefficients(b, op);
    let g = cubic_source(b, op, nu[0]);
    let n = b.grid.n;
    let i = Complex64::i();

    let inv_g = op.solve_shifted(0.0, &g)?;
    let res_g = op.solve_shifted(4.0 * l, &g)?;
    let half = Complex64::new(0.5, 0.0);
    let x13: [Vec<Complex64>; 4] = [
        inv_g.iter().map(|&v| half * v).collect(),
        vec![Complex64::new(0.0, 0.0); n],
        g.iter().map(|&v| half * v).collect(),
        vec![Complex64::new(0.0, 0.0); n],
    ];
    let x11: [Vec<Complex64>; 4] = [
        res_g.iter().map(|&v| half * v).collect(),
        res_g.iter().map(|&v| half * 2.0 * i * v).collect(),
        g.iter().map(|&v| half * v).collect(),
        g.iter().map(|&v| half * 2.0 * i * v).collect(),
    ];

    // a1+ = (C1 + conj C1)/2, a1- = (C1 - conj C1)/(2i).
    let da_plus = [Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)];
    let da_minus = [Complex64::new(0.5, 0.0) / i, -Complex64::new(0.5, 0.0) / i];

    let weight: Vec<f64> = (0..n)
        .map(|k| b.well.d3w(b.u0[k]) * op.psi0[k] * op.psi0[k] / (2.0 * l * l))
        .collect();

    // Z . X for the part of Z multiplying a variable with derivative (dp, dm).
    let pair = |x: &[Vec<Complex64>; 4], dp: Complex64, dm: Complex64| -> Complex64 {
        let re: Vec<f64> = x[0].iter().map(|c| c.re).collect();
        let im: Vec<f64> = x[0].iter().map(|c| c.im).collect();
        let (lre, lim) = (op.apply(&re), op.apply(&im));
        let mut acc_re = vec![0.0; n];
        let mut acc_im = vec![0.0; n];
        for k in 0..n {
            let l0x = Complex64::new(lre[k], lim[k]);
            let v = dp * (l0x - 2.0 * x[2][k]) + dm * (2.0 * l * x[1][k]);
            acc_re[k] = weight[k] * v.re;
            acc_im[k] = weight[k] * v.im;
        }
        Complex64::new(b.grid.integrate(&acc_re), b.grid.integrate(&acc_im))
    };

    let zb_x11 = pair(&x11, da_plus[1], da_minus[1]);
    let z_x13 = pair(&x13, da_plus[0], da_minus[0]);
    let coeff = zb_x11 + 2.0 * z_x13;
    let bracket = coeff.re;
    let closed = 6.0 * nu[0] * nu[0] - 0.375 * nu[5];
    Ok(Alpha1Check { bracket, bracket_closed_form: closed, alpha1: -6.0 * nu[0] * nu[0] + 0.375 * nu[5] + bracket })
}

impl CoefficientTable {
    pub fn compute(b: &BilayerData, op: &SpectralData, inputs: CoefficientInputs) -> Result<Self> {
        let eta_d = inputs.eta_d();
        let v0 = compute_v0(b, op, inputs.gamma, eta_d)?;
        let u1 = compute_u1(op, &v0)?;
        let alpha0 = bifurcation_integral(b, op, &v0, eta_d, &op.psi0);
        let beta0 = bifurcation_integral(b, op, &v0, eta_d, &op.psi1);
        let (alpha01, alpha02) = alpha0_parts(b, op)?;
        let nu = nu_coefficients(b, op);
        let mu = mu_coefficients(b, op, &u1, inputs.eta1, eta_d);
        let a1 = verify_alpha1(b, op)?;
        Ok(Self {
            gamma: inputs.gamma,
            eta1: inputs.eta1,
            eta2: inputs.eta2,
            eta_d,
            lambda0: op.lambda0,
            alpha0,
            alpha01,
            alpha02,
            beta0,
            gamma1: gamma1(b, inputs.eta1, eta_d),
            nu,
            mu,
            omega: omega_from_mu(&mu),
            alpha2: alpha2(b, op)?,
            alpha1_residual: a1.alpha1,
            grid_n: b.grid.n,
            grid_half_width: b.grid.half_width,
        })
    }

    /// `(name, value)` pairs in a fixed order, for CSV output.
    pub fn rows(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("gamma".to_string(), self.gamma),
            ("eta1".into(), self.eta1),
            ("eta2".into(), self.eta2),
            ("eta_d".into(), self.eta_d),
            ("lambda0".into(), self.lambda0),
            ("alpha0".into(), self.alpha0),
            ("alpha01".into(), self.alpha01),
            ("alpha02".into(), self.alpha02),
            ("beta0".into(), self.beta0),
            ("gamma1".into(), self.gamma1),
        ];
        out.extend(self.nu.iter().enumerate().map(|(k, v)| (format!("nu{}", k + 1), *v)));
        out.extend(self.mu.iter().enumerate().map(|(k, v)| (format!("mu{}", k + 1), *v)));
        out.extend(self.omega.iter().enumerate().map(|(k, v)| (format!("omega{}", k + 1), *v)));
        out.push(("alpha2".into(), self.alpha2));
        out.push(("alpha1_residual".into(), self.alpha1_residual));
        out
    }
}
