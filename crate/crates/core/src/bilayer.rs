//! The bilayer homoclinic `u0` of `u'' = W'(u)` and its first-order corrections.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::SpectralData;
use crate::potential::Well;

/// Uniform symmetric grid on `[-L, L]` with an odd number of nodes, so that
/// `r = 0` is a node and reflection maps nodes onto nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub half_width: f64,
    pub n: usize,
}

impl RadialGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half-width must be positive, got {half_width}")));
        }
        if n < 201 || n % 2 == 0 {
            return Err(Error::InvalidGrid(format!("n must be odd and >= 201, got {n}")));
        }
        Ok(Self { half_width, n })
    }

    /// `L = 26/sqrt(mu_minus)`, `n = 2049`: puts `|u0(L) + 1|` near `1e-11`
    /// for the default well.
    pub fn default_for(well: &Well) -> Self {
        Self { half_width: 26.0 / well.mu_minus().sqrt(), n: 2049 }
    }

    /// Same half-width, spacing halved.
    pub fn refined(&self) -> Self {
        Self { half_width: self.half_width, n: 2 * self.n - 1 }
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    pub fn center(&self) -> usize {
        (self.n - 1) / 2
    }

    pub fn r(&self, i: usize) -> f64 {
        (i as f64 - self.center() as f64) * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.r(i)).collect()
    }

    /// Composite trapezoid rule.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let n = f.len();
        let inner: f64 = f[1..n - 1].iter().sum();
        self.h() * (inner + 0.5 * (f[0] + f[n - 1]))
    }

    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        self.integrate(&prod)
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.dot(a, a).sqrt()
    }

    /// Four-point Lagrange interpolation of node values `f` at `r`; outside
    /// `[-L, L]` the end value is returned.
    pub fn interpolate(&self, f: &[f64], r: f64) -> f64 {
        let n = self.n;
        if r <= -self.half_width {
            return f[0];
        }
        if r >= self.half_width {
            return f[n - 1];
        }
        let s = (r + self.half_width) / self.h();
        let i = (s.floor() as usize).clamp(1, n - 3);
        let x = s - i as f64;
        let (xm, x0, x1, x2) = (x + 1.0, x, x - 1.0, x - 2.0);
        -f[i - 1] * x0 * x1 * x2 / 6.0 + f[i] * xm * x1 * x2 / 2.0 - f[i + 1] * xm * x0 * x2 / 2.0
            + f[i + 2] * xm * x0 * x1 / 6.0
    }
}

#[derive(Debug, Clone)]
pub struct BilayerData {
    pub grid: RadialGrid,
    pub well: Well,
    pub u0: Vec<f64>,
    pub du0: Vec<f64>,
    pub u_star: f64,
    /// `v0`, `u1` for the `(gamma, eta_d)` they were computed with.
    pub corrections: Option<Corrections>,
}

#[derive(Debug, Clone)]
pub struct Corrections {
    pub gamma: f64,
    pub eta_d: f64,
    pub v0: Vec<f64>,
    pub u1: Vec<f64>,
}

fn rk4<const N: usize>(f: &impl Fn(&[f64; N]) -> [f64; N], x: &mut [f64; N], dt: f64) {
    let add = |a: &[f64; N], b: &[f64; N], s: f64| {
        let mut o = *a;
        for i in 0..N {
            o[i] += s * b[i];
        }
        o
    };
    let k1 = f(x);
    let k2 = f(&add(x, &k1, 0.5 * dt));
    let k3 = f(&add(x, &k2, 0.5 * dt));
    let k4 = f(&add(x, &k3, dt));
    for i in 0..N {
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

const SUBSTEPS: usize = 16;

/// Leading-order bilayer profile.
///
/// Near the turning point the second-order system `(u, p)` is integrated from
/// `(u*, 0)`; once `u` is halfway down to `-1` the first integral
/// `u' = -sqrt(2 W(u))` takes over in the variable `y = u + 1`, which is
/// contracting toward the far field and keeps relative precision in the tail.
pub fn compute_u0(well: &Well, grid: RadialGrid) -> Result<BilayerData> {
    let grid = RadialGrid::new(grid.half_width, grid.n)?;
    let report = well.validate();
    if let Some(c) = report.get("W(m) < 0") {
        if !c.pass {
            return Err(Error::NoHomoclinic(format!("W(m) = {:e} is not negative", c.value)));
        }
    }
    if !report.passed() {
        return Err(Error::InvalidWell(report.failures().join(", ")));
    }
    let u_star = well
        .turning_point()
        .ok_or_else(|| Error::NoHomoclinic("W has no simple zero in (0, m)".into()))?;

    let n = grid.n;
    let c = grid.center();
    let dt = grid.h() / SUBSTEPS as f64;
    let mut u0 = vec![0.0; n];
    let mut du0 = vec![0.0; n];
    u0[c] = u_star;

    let switch = 0.5 * (u_star - 1.0);
    let second_order = |x: &[f64; 2]| [x[1], well.dw(x[0])];
    let first_order = |x: &[f64; 1]| [-(2.0 * well.w_of_y(x[0]).max(0.0)).sqrt()];
    let mut state = [u_star, 0.0];
    let mut k = 1;
    while c + k < n && state[0] > switch {
        for _ in 0..SUBSTEPS {
            rk4(&second_order, &mut state, dt);
        }
        u0[c + k] = state[0];
        du0[c + k] = state[1];
        k += 1;
    }
    let mut y = [state[0] + 1.0];
    while c + k < n {
        for _ in 0..SUBSTEPS {
            rk4(&first_order, &mut y, dt);
        }
        u0[c + k] = y[0] - 1.0;
        du0[c + k] = first_order(&y)[0];
        k += 1;
    }
    for k in 1..=c {
        u0[c - k] = u0[c + k];
        du0[c - k] = -du0[c + k];
    }
    let tail = (u0[n - 1] + 1.0).abs();
    if tail > 1e-6 {
        return Err(Error::DomainTooSmall(tail));
    }
    Ok(BilayerData { grid, well: well.clone(), u0, du0, u_star, corrections: None })
}

/// Fourth-order second difference at interior node `i` (needs `2 <= i < n-2`).
pub(crate) fn d2_fourth(f: &[f64], i: usize, h: f64) -> f64 {
    (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / (12.0 * h * h)
}

impl BilayerData {
    /// `max |u0'^2/2 - W(u0)|` over interior nodes.
    pub fn hamiltonian_residual(&self) -> f64 {
        (1..self.grid.n - 1)
            .map(|i| (0.5 * self.du0[i] * self.du0[i] - self.well.w(self.u0[i])).abs())
            .fold(0.0, f64::max)
    }

    /// `max |u0'' - W'(u0)|` with `u0''` from a fourth-order difference of the node values.
    pub fn ode_residual(&self) -> f64 {
        let h = self.grid.h();
        (2..self.grid.n - 2)
            .map(|i| (d2_fourth(&self.u0, i, h) - self.well.dw(self.u0[i])).abs())
            .fold(0.0, f64::max)
    }

    /// Least-squares slope of `log|u0 + 1|` over the outer quarter of `[0, L]`.
    pub fn tail_slope(&self) -> f64 {
        let c = self.grid.center();
        let start = c + 3 * c / 4;
        let pts: Vec<(f64, f64)> = (start..self.grid.n)
            .map(|i| (self.grid.r(i), (self.u0[i] + 1.0).abs().ln()))
            .collect();
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    /// `max |f(r) - f(-r)|`.
    pub fn asymmetry(&self, f: &[f64]) -> f64 {
        let n = self.grid.n;
        (0..n).map(|i| (f[i] - f[n - 1 - i]).abs()).fold(0.0, f64::max)
    }

    /// Fills `v0`, `u1` for `(gamma, eta_d)`.
    pub fn with_corrections(mut self, op: &SpectralData, gamma: f64, eta_d: f64) -> Result<Self> {
        let v0 = compute_v0(&self, op, gamma, eta_d)?;
        let u1 = solve_even(op, &v0)?;
        self.corrections = Some(Corrections { gamma, eta_d, v0, u1 });
        Ok(self)
    }

    /// Far-field value `u_-(eps) = -1 + eps * u1(inf)` at first order.
    pub fn far_field(&self, epsilon: f64) -> f64 {
        let u1_inf = self.corrections.as_ref().map_or(0.0, |c| c.u1[self.grid.n - 1]);
        -1.0 + epsilon * u1_inf
    }
}

fn solve_even(op: &SpectralData, f: &[f64]) -> Result<Vec<f64>> {
    let x = op.solve_shifted(0.0, f)?;
    let res = op.apply_shifted(0.0, &x);
    let err = res.iter().zip(f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    if err > 1e-8 * scale.max(1.0) {
        return Err(Error::LinearSolve(format!("residual {err:e}")));
    }
    Ok(x)
}

/// `v0 = gamma L0^{-1} 1 - eta_d L0^{-1} W'(u0)` with `psi1` deflated.
pub fn compute_v0(b: &BilayerData, op: &SpectralData, gamma: f64, eta_d: f64) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = b.u0.iter().map(|&u| gamma - eta_d * b.well.dw(u)).collect();
    solve_even(op, &rhs)
}

/// `u1 = L0^{-1} v0` with `<u1, psi1> = 0`.
pub fn compute_u1(op: &SpectralData, v0: &[f64]) -> Result<Vec<f64>> {
    solve_even(op, v0)
}
