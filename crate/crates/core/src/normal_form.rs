//! The pearling normal form (PNF) on `(C1, C2)`, the truncated eight-dimensional
//! cubic normal form with meander modes `D1..D4`, their first integrals,
//! the closed-form PNF periodic orbits, and reversible shooting for periodic
//! orbits of the full system.
//!
//! States are stored as `(C1, C2, D1..D4)`; the conjugate equations are implied.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientTable;
use crate::error::{Error, Result};
use crate::ode::{integrate, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NFState {
    pub c1: Complex64,
    pub c2: Complex64,
    pub d: [f64; 4],
    pub t: f64,
}

impl NFState {
    pub fn new(c1: Complex64, c2: Complex64, d: [f64; 4]) -> Self {
        Self { c1, c2, d, t: 0.0 }
    }

    pub fn zero() -> Self {
        Self::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), [0.0; 4])
    }

    /// `(Re C1, Im C1, Re C2, Im C2, D1, D2, D3, D4)`.
    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.c1.re, self.c1.im, self.c2.re, self.c2.im, self.d[0], self.d[1], self.d[2], self.d[3]]
    }

    pub fn from_slice(y: &[f64], t: f64) -> Self {
        Self {
            c1: Complex64::new(y[0], y[1]),
            c2: Complex64::new(y[2], y[3]),
            d: [y[4], y[5], y[6], y[7]],
            t,
        }
    }

    /// Reversibility `S1 (C1, C2, D) = (conj C1, -conj C2, D1, -D2, D3, -D4)`.
    pub fn s1(&self) -> Self {
        Self {
            c1: self.c1.conj(),
            c2: -self.c2.conj(),
            d: [self.d[0], -self.d[1], self.d[2], -self.d[3]],
            t: self.t,
        }
    }

    /// Phase rotation `R_theta` of the pearling modes.
    pub fn rotate(&self, theta: f64) -> Self {
        let e = Complex64::from_polar(1.0, theta);
        Self { c1: e * self.c1, c2: e * self.c2, ..*self }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|v| v.is_finite())
    }

    /// Max-norm distance over the eight real components.
    pub fn distance(&self, other: &Self) -> f64 {
        self.to_vec().iter().zip(other.to_vec()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn d_norm(&self) -> f64 {
        self.d.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Normal-form coefficients. Higher-order entries default to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NFCoefficients {
    pub epsilon: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub omega4: f64,
    pub alpha0: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
    pub alpha5: f64,
    pub alpha6: f64,
    pub alpha7: f64,
    pub alpha8: f64,
    pub alpha9: f64,
    pub alpha10: f64,
    pub alpha11: f64,
    pub alpha12: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub beta4: f64,
    pub beta5: f64,
    pub beta6: f64,
    pub beta7: f64,
    pub beta8: f64,
    pub beta9: f64,
    pub beta10: f64,
    pub beta11: f64,
    pub beta12: f64,
    pub beta13: f64,
}

impl Default for NFCoefficients {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            omega1: 0.0,
            omega2: 0.0,
            omega3: 0.0,
            omega4: 0.0,
            alpha0: 0.0,
            alpha2: 0.0,
            alpha3: 0.0,
            alpha4: 0.0,
            alpha5: 0.0,
            alpha6: 0.0,
            alpha7: 0.0,
            alpha8: 0.0,
            alpha9: 0.0,
            alpha10: 0.0,
            alpha11: 0.0,
            alpha12: 0.0,
            beta1: 0.0,
            beta2: 0.0,
            beta3: 0.0,
            beta4: 0.0,
            beta5: 0.0,
            beta6: 0.0,
            beta7: 0.0,
            beta8: 0.0,
            beta9: 0.0,
            beta10: 0.0,
            beta11: 0.0,
            beta12: 0.0,
            beta13: 0.0,
        }
    }
}

impl NFCoefficients {
    /// `alpha0`, `alpha2` and `omega1..omega4` from a computed table; all other
    /// cubic coefficients zero.
    pub fn from_table(table: &CoefficientTable, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self {
            epsilon,
            omega1: table.omega[0],
            omega2: table.omega[1],
            omega3: table.omega[2],
            omega4: table.omega[3],
            alpha0: table.alpha0,
            alpha2: table.alpha2,
            ..Self::default()
        })
    }

    /// Every coefficient that only acts on or through the meander modes set to zero.
    pub fn pearling_only(&self) -> Self {
        Self {
            epsilon: self.epsilon,
            omega1: self.omega1,
            omega2: self.omega2,
            alpha0: self.alpha0,
            alpha2: self.alpha2,
            alpha7: self.alpha7,
            alpha8: self.alpha8,
            ..Self::default()
        }
    }

    /// Effective coupling `-alpha0 eps + 2 alpha2 K` multiplying `C1` in the `C2` equation.
    fn coupling(&self, k: f64) -> f64 {
        -self.alpha0 * self.epsilon + 2.0 * self.alpha2 * k
    }
}

/// `K = (i/2)(C1 conj C2 - conj C1 C2) = -Im(C1 conj C2)`.
fn k_of(c1: Complex64, c2: Complex64) -> f64 {
    -(c1 * c2.conj()).im
}

/// Derivative of the PNF system; the `D` components of the result are zero.
pub fn pnf_rhs(s: &NFState, c: &NFCoefficients) -> NFState {
    let i = Complex64::i();
    let k = k_of(s.c1, s.c2);
    let phase = 1.0 + c.omega1 * c.epsilon + c.alpha7 * s.c1.norm_sqr() + 2.0 * c.alpha8 * k;
    NFState {
        c1: i * phase * s.c1 + s.c2,
        c2: i * phase * s.c2 + c.coupling(k) * s.c1,
        d: [0.0; 4],
        t: s.t,
    }
}

/// Derivative of the truncated eight-dimensional normal form.
pub fn nf8_rhs(s: &NFState, c: &NFCoefficients) -> NFState {
    let i = Complex64::i();
    let (c1, c2) = (s.c1, s.c2);
    let [d1, d2, d3, d4] = s.d;
    let eps = c.epsilon;
    let rot = 1.0 + c.omega1 * eps;
    let n1 = c1.norm_sqr();
    let n2 = c2.norm_sqr();
    // i (C1 conj C2 - conj C1 C2) = 2K and C1 conj C2 + conj C1 C2 = 2 Re(C1 conj C2).
    let two_k = 2.0 * k_of(c1, c2);
    let two_re = 2.0 * (c1 * c2.conj()).re;
    let q1 = 2.0 * d1 * d3 - d2 * d2;
    let q2 = d2 * d3 - 3.0 * d1 * d4;
    let q3 = 3.0 * d1 * d4 - d2 * d3;
    let q4 = 2.0 * d3 * d3 - 3.0 * d2 * d4;
    let phase = c.alpha7 * n1 + c.alpha8 * two_k;

    let r31 = i * (c1 * phase
        + c.alpha9 * c1 * d1 * d1
        + c.alpha10 * i * d1 * (c2 * d1 - c1 * d2)
        + c.alpha11 * c1 * q1
        + c.alpha12 * i * (c1 * q2 + c2 * q1));
    let r32 = c1 * (c.alpha2 * two_k)
        + c.alpha3 * c1 * d1 * d1
        + c.alpha4 * i * d1 * (c2 * d1 - c1 * d2)
        + c.alpha5 * c1 * q1
        + c.alpha6 * i * (c1 * q2 + c2 * q1)
        + i * (c2 * phase
            + c.alpha9 * c2 * d1 * d1
            + c.alpha10 * i * d2 * (c2 * d1 - c1 * d2)
            + c.alpha11 * c1 * q3
            + c.alpha12 * i * (2.0 * c1 * q4 + c2 * q3));
    let r38 = d1 * (c.beta1 * n1 + c.beta2 * n2)
        + two_k * (c.beta3 * d1 + c.beta4 * d3)
        + c.beta5 * n1 * d3
        + c.beta6 * d2 * two_re
        + c.beta7 * (3.0 * two_re * d4 - 2.0 * n2 * d3)
        + c.beta8 * d1 * d2 * d2
        + d1 * d1 * (c.beta9 * d1 + c.beta10 * d3)
        + c.beta11 * (d2 * d2 * d3 - 2.0 * d1 * d3 * d3)
        + c.beta12 * (d2 * d2 * d3 - 3.0 * d1 * d2 * d4)
        + c.beta13 * (9.0 * d2 * d3 * d4 - 9.0 * d1 * d4 * d4 - 4.0 * d3 * d3 * d3);

    NFState {
        c1: i * rot * c1 + c2 + r31,
        c2: c.omega2 * eps * c1 + i * rot * c2 + r32,
        d: [d2, d3, d4, c.omega3 * eps * d1 + c.omega4 * eps * d3 + r38],
        t: s.t,
    }
}

/// `(K, H)` with `K = -Im(C1 conj C2)` and `H = |C2|^2 - (-alpha0 eps + 2 alpha2 K)|C1|^2`,
/// both conserved by the PNF flow.
pub fn first_integrals(s: &NFState, c: &NFCoefficients) -> (f64, f64) {
    let k = k_of(s.c1, s.c2);
    (k, s.c2.norm_sqr() - c.coupling(k) * s.c1.norm_sqr())
}

/// Which right-hand side to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NFSystem {
    Pnf,
    Nf8,
}

impl NFSystem {
    pub fn rhs(self, s: &NFState, c: &NFCoefficients) -> NFState {
        match self {
            Self::Pnf => pnf_rhs(s, c),
            Self::Nf8 => nf8_rhs(s, c),
        }
    }
}

pub fn integrate_nf(system: NFSystem, c: &NFCoefficients, s0: &NFState, t_end: f64, tol: f64) -> Result<Trajectory> {
    let f = |t: f64, y: &[f64]| system.rhs(&NFState::from_slice(y, t), c).to_vec();
    integrate(f, &s0.to_vec(), s0.t, s0.t + t_end, tol)
}

/// Closed-form periodic orbit of the PNF at first-integral level `K = eps^{3/2} kappa`,
/// phased so that `C1(0)` is real and positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PnfOrbit {
    pub epsilon: f64,
    pub kappa: f64,
    pub r1: f64,
    pub r2: f64,
    pub omega: f64,
    pub period: f64,
}

impl PnfOrbit {
    pub fn state_at(&self, t: f64) -> NFState {
        let eps = self.epsilon;
        let ak = self.kappa.abs();
        let sgn = if self.kappa < 0.0 { -1.0 } else { 1.0 };
        let e = Complex64::from_polar(1.0, self.omega * t);
        NFState {
            c1: (eps * ak).sqrt() * self.r1 * e,
            c2: Complex64::new(0.0, sgn * eps * ak.sqrt() * self.r2) * e,
            d: [0.0; 4],
            t,
        }
    }

    /// Max-norm residual of the orbit in the PNF over `samples` points of one period.
    pub fn residual(&self, c: &NFCoefficients, samples: usize) -> f64 {
        (0..samples)
            .map(|j| {
                let t = self.period * j as f64 / samples as f64;
                let s = self.state_at(t);
                let f = pnf_rhs(&s, c);
                let i = Complex64::i();
                let exact = (i * self.omega * s.c1, i * self.omega * s.c2);
                (f.c1 - exact.0).norm().max((f.c2 - exact.1).norm())
            })
            .fold(0.0, f64::max)
    }
}

pub fn pnf_periodic_orbit(c: &NFCoefficients, kappa: f64) -> Result<PnfOrbit> {
    if !(c.alpha0 > 0.0) {
        return Err(Error::NoPearling(c.alpha0));
    }
    if !(c.epsilon.is_finite() && c.epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", c.epsilon)));
    }
    let se = c.epsilon.sqrt();
    let lhs = se * kappa.abs();
    let rhs = if c.alpha2 == 0.0 { f64::INFINITY } else { c.alpha0 / (2.0 * c.alpha2.abs()) };
    if lhs >= rhs {
        return Err(Error::Supercriticality { lhs, rhs });
    }
    let r1 = (c.alpha0 - 2.0 * c.alpha2 * se * kappa).powf(-0.25);
    let r2 = 1.0 / r1;
    let sgn = if kappa < 0.0 { -1.0 } else { 1.0 };
    let eps = c.epsilon;
    let omega = 1.0
        + c.omega1 * eps
        + sgn * se * r2 * r2
        + c.alpha7 * eps * kappa.abs() * r1 * r1
        + 2.0 * c.alpha8 * eps.powf(1.5) * kappa;
    Ok(PnfOrbit { epsilon: eps, kappa, r1, r2, omega, period: 2.0 * std::f64::consts::PI / omega })
}

/// Initial point on `Fix(S1)` and half-period for shooting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootGuess {
    /// `Im C2` at `t = 0`; `C1 = K / Im C2` keeps the level set of `K`.
    pub c2_imag: f64,
    pub d1: f64,
    pub d3: f64,
    pub half_period: f64,
}

impl ShootGuess {
    fn to_array(self) -> [f64; 4] {
        [self.c2_imag, self.d1, self.d3, self.half_period]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootResult {
    pub start: NFState,
    pub half_state: NFState,
    pub period: f64,
    pub residual: f64,
    pub iterations: usize,
}

pub const SHOOT_TOL: f64 = 1e-9;
const SHOOT_MAX_ITER: usize = 40;
const SHOOT_ODE_TOL: f64 = 1e-13;

fn fix_state(k: f64, z: &[f64; 4]) -> NFState {
    NFState::new(Complex64::new(k / z[0], 0.0), Complex64::new(0.0, z[0]), [z[1], 0.0, z[2], 0.0])
}

/// S1-antisymmetric part `(Im C1, Re C2, D2, D4)` of the state at `t = T/2`.
fn shoot_residual(c: &NFCoefficients, k: f64, z: &[f64; 4], max_half: f64) -> Result<([f64; 4], NFState)> {
    if !(z[3] > 0.0 && z[3] <= max_half) || z[0] == 0.0 {
        return Err(Error::NoConvergence("shooting left the admissible region".into()));
    }
    let tr = integrate_nf(NFSystem::Nf8, c, &fix_state(k, z), z[3], SHOOT_ODE_TOL)?;
    let s = NFState::from_slice(tr.last(), z[3]);
    if !s.is_finite() {
        return Err(Error::NoConvergence("trajectory blew up".into()));
    }
    Ok(([s.c1.im, s.c2.re, s.d[1], s.d[3]], s))
}

fn norm4(r: &[f64; 4]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Solves the 4x4 system `a x = b` by Gaussian elimination with partial pivoting.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for k in 0..4 {
        let p = (k..4).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k] == 0.0 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..4 {
            let l = a[i][k] / a[k][k];
            for j in k..4 {
                a[i][j] -= l * a[k][j];
            }
            b[i] -= l * b[k];
        }
    }
    let mut x = [0.0; 4];
    for k in (0..4).rev() {
        let s: f64 = (k + 1..4).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}

/// Finds a reversible periodic orbit of the eight-dimensional normal form on the
/// level set `K = eps^{3/2} kappa`: a start point in `Fix(S1)` whose trajectory
/// returns to `Fix(S1)` at `t = T/2`.
///
/// Newton with a central-difference Jacobian. The step is Levenberg-Marquardt
/// regularized because the meander block can be singular (a neutral `D1` mode
/// when `omega3 = 0`); it is halved while the residual grows.
pub fn reversible_shoot(c: &NFCoefficients, kappa: f64, guess: Option<ShootGuess>) -> Result<ShootResult> {
    let k = c.epsilon.powf(1.5) * kappa;
    if k == 0.0 {
        return Err(Error::InvalidArgument("kappa must be nonzero for a nontrivial orbit".into()));
    }
    let guess = match guess {
        Some(g) => g,
        None => {
            let orbit = pnf_periodic_orbit(c, kappa).map_err(|e| match e {
                Error::NoPearling(a) => Error::NoConvergence(format!("no periodic orbit to seed from: alpha0 = {a}")),
                other => other,
            })?;
            let s = orbit.state_at(0.0);
            ShootGuess { c2_imag: s.c2.im, d1: 0.0, d3: 0.0, half_period: 0.5 * orbit.period }
        }
    };
    let mut z = guess.to_array();
    // Keeps a wandering Newton iterate from requesting arbitrarily long integrations.
    let max_half = 4.0 * guess.half_period;
    let (mut r, mut half) = shoot_residual(c, k, &z, max_half)?;
    let mut rn = norm4(&r);
    let scale = [z[0].abs().max(1e-8), 1e-3, 1e-3, z[3].abs().max(1e-8)];
    for iter in 0..SHOOT_MAX_ITER {
        if rn <= SHOOT_TOL {
            let start = fix_state(k, &z);
            return Ok(ShootResult { start, half_state: half, period: 2.0 * z[3], residual: rn, iterations: iter });
        }
        let mut jac = [[0.0; 4]; 4];
        for j in 0..4 {
            let h = 1e-6 * scale[j];
            let (mut zp, mut zm) = (z, z);
            zp[j] += h;
            zm[j] -= h;
            let (rp, _) = shoot_residual(c, k, &zp, max_half)?;
            let (rm, _) = shoot_residual(c, k, &zm, max_half)?;
            for i in 0..4 {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for a in 0..4 {
            for b in 0..4 {
                jtj[a][b] = (0..4).map(|i| jac[i][a] * jac[i][b]).sum();
            }
            jtr[a] = -(0..4).map(|i| jac[i][a] * r[i]).sum::<f64>();
        }
        let damp = 1e-12 * (0..4).map(|a| jtj[a][a]).fold(0.0, f64::max).max(1e-300);
        for (a, row) in jtj.iter_mut().enumerate() {
            row[a] += damp;
        }
        let step = solve4(jtj, jtr).ok_or_else(|| Error::NoConvergence("singular shooting Jacobian".into()))?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut zn = z;
            for a in 0..4 {
                zn[a] += t * step[a];
            }
            if let Ok((rn_vec, hs)) = shoot_residual(c, k, &zn, max_half) {
                let n_new = norm4(&rn_vec);
                if n_new < rn {
                    z = zn;
                    r = rn_vec;
                    rn = n_new;
                    half = hs;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence(format!("shooting stagnated at residual {rn:e}")));
        }
    }
    if rn <= SHOOT_TOL {
        let start = fix_state(k, &z);
        return Ok(ShootResult { start, half_state: half, period: 2.0 * z[3], residual: rn, iterations: SHOOT_MAX_ITER });
    }
    Err(Error::NoConvergence(format!("no convergence after {SHOOT_MAX_ITER} iterations, residual {rn:e}")))
}
