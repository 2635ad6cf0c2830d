//! The transverse linearization `L0 = d^2/dr^2 - W''(u0)` about the bilayer.
//!
//! The second derivative is a centered stencil (sixth order by default;
//! second and fourth order on request) closed by even reflection about the half-nodes
//! beyond `±L`. The closure keeps the matrix symmetric, annihilates constants,
//! and lets right-hand sides with a nonzero far field be solved directly.

use serde::{Deserialize, Serialize};

use crate::banded::BandMatrix;
use crate::bilayer::{BilayerData, RadialGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    Second,
    Fourth,
    #[default]
    Sixth,
}

impl Stencil {
    /// Weights of `d^2/dr^2` at offsets `0, 1, 2, 3`.
    fn weights(self, h: f64) -> [f64; 4] {
        let w = match self {
            Stencil::Second => [-2.0, 1.0, 0.0, 0.0],
            Stencil::Fourth => [-30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0, 0.0],
            Stencil::Sixth => [-49.0 / 18.0, 1.5, -0.15, 1.0 / 90.0],
        };
        w.map(|c| c / (h * h))
    }

    /// Formal order of accuracy.
    pub fn order(self) -> u32 {
        match self {
            Stencil::Second => 2,
            Stencil::Fourth => 4,
            Stencil::Sixth => 6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearOperator {
    pub grid: RadialGrid,
    pub stencil: Stencil,
    /// `W''(u0)` at the nodes.
    pub potential: Vec<f64>,
    matrix: BandMatrix,
}

/// Discretizes `L0` about the profile in `b`.
pub fn assemble_l0(b: &BilayerData, stencil: Stencil) -> LinearOperator {
    let q: Vec<f64> = b.u0.iter().map(|&u| b.well.d2w(u)).collect();
    LinearOperator::from_potential(b.grid, stencil, q)
}

impl LinearOperator {
    pub fn from_potential(grid: RadialGrid, stencil: Stencil, potential: Vec<f64>) -> Self {
        let n = grid.n as isize;
        let w = stencil.weights(grid.h());
        let mut a = BandMatrix::zeros(grid.n, 3, 3);
        for i in 0..n {
            for (j, &wj) in w.iter().enumerate() {
                let offsets: &[isize] = if j == 0 { &[0] } else { &[-(j as isize), j as isize] };
                for &o in offsets {
                    // Ghost node -k mirrors k-1; node n-1+k mirrors n-k.
                    let mut col = i + o;
                    if col < 0 {
                        col = -col - 1;
                    } else if col >= n {
                        col = 2 * n - 1 - col;
                    }
                    let (iu, cu) = (i as usize, col as usize);
                    a.set(iu, cu, a.get(iu, cu) + wj);
                }
            }
            let iu = i as usize;
            a.set(iu, iu, a.get(iu, iu) - potential[iu]);
        }
        Self { grid, stencil, potential, matrix: a }
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn is_symmetric(&self) -> bool {
        self.matrix.is_symmetric()
    }

    /// `(L0 - sigma) x`.
    pub fn apply_shifted(&self, sigma: f64, x: &[f64]) -> Vec<f64> {
        let mut y = self.matrix.matvec(x);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi -= sigma * xi;
        }
        y
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.apply_shifted(0.0, x)
    }

    fn shifted(&self, sigma: f64) -> BandMatrix {
        let mut a = self.matrix.clone();
        for i in 0..self.n() {
            a.set(i, i, a.get(i, i) - sigma);
        }
        a
    }

    /// Plain `(L0 - sigma)^{-1} f` with one step of iterative refinement.
    pub fn solve_plain(&self, sigma: f64, f: &[f64]) -> Result<Vec<f64>> {
        let lu = self.shifted(sigma).factor()?;
        let mut x = lu.solve(f);
        let r: Vec<f64> = self.apply_shifted(sigma, &x).iter().zip(f).map(|(a, b)| b - a).collect();
        let dx = lu.solve(&r);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve(format!("non-finite solution at sigma = {sigma}")));
        }
        Ok(x)
    }

    /// Upper bound on the spectrum: the stencil is negative semidefinite.
    pub fn spectral_upper_bound(&self) -> f64 {
        self.potential.iter().map(|q| -q).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Euclidean Rayleigh quotient.
    fn rayleigh(&self, x: &[f64]) -> f64 {
        let ax = self.apply(x);
        dot_plain(x, &ax) / dot_plain(x, x)
    }

    fn residual_norm(&self, x: &[f64], lambda: f64) -> f64 {
        let r = self.apply_shifted(lambda, x);
        (dot_plain(&r, &r) / dot_plain(x, x)).sqrt()
    }

    /// Inverse iteration at `shift` followed by Rayleigh-quotient polishing.
    /// `project` is applied after every iterate.
    fn eigen_iterate(
        &self,
        shift: f64,
        start: Vec<f64>,
        project: &dyn Fn(&mut Vec<f64>),
        max_iter: usize,
    ) -> Result<(f64, Vec<f64>)> {
        let lu = self.shifted(shift).factor()?;
        let mut x = start;
        project(&mut x);
        normalize_plain(&mut x);
        let mut lambda = self.rayleigh(&x);
        for _ in 0..max_iter {
            x = lu.solve(&x);
            project(&mut x);
            normalize_plain(&mut x);
            let next = self.rayleigh(&x);
            let done = (next - lambda).abs() <= 1e-14 * next.abs().max(1.0);
            lambda = next;
            if done {
                break;
            }
        }
        for _ in 0..4 {
            if self.residual_norm(&x, lambda) <= 1e-13 * (1.0 + lambda.abs()) {
                break;
            }
            let Ok(lu) = self.shifted(lambda).factor() else { break };
            let mut y = lu.solve(&x);
            project(&mut y);
            if y.iter().any(|v| !v.is_finite()) {
                break;
            }
            normalize_plain(&mut y);
            x = y;
            lambda = self.rayleigh(&x);
        }
        Ok((lambda, x))
    }
}

fn dot_plain(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize_plain(x: &mut [f64]) {
    let s = dot_plain(x, x).sqrt();
    x.iter_mut().for_each(|v| *v /= s);
}

fn reflect_part(x: &[f64], sign: f64) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|i| 0.5 * (x[i] + sign * x[n - 1 - i])).collect()
}

/// Largest eigenpair `(lambda0, psi0)`, unit `L^2` norm, `psi0(0) > 0`.
pub fn ground_state(op: &LinearOperator) -> Result<(f64, Vec<f64>)> {
    let shift = op.spectral_upper_bound() + 0.5;
    let c = op.grid.center();
    // Even start with a positive bump, orthogonal to the odd kernel.
    let start: Vec<f64> = op.potential.iter().map(|q| (q - op.potential[0]).abs() + 1e-300).collect();
    let even = |x: &mut Vec<f64>| *x = reflect_part(x, 1.0);
    let (lambda, mut psi) = op.eigen_iterate(shift, start, &even, 2000)?;
    if psi[c] < 0.0 {
        psi.iter_mut().for_each(|v| *v = -*v);
    }
    let nrm = op.grid.norm(&psi);
    psi.iter_mut().for_each(|v| *v /= nrm);
    if !(lambda > 0.0) {
        return Err(Error::NotABilayer(format!("largest eigenvalue {lambda} is not positive")));
    }
    Ok((lambda, psi))
}

/// Discrete translation mode: the odd eigenvector nearest zero, seeded by
/// `u0'` and sign-matched to it. Returns `(eigenvalue, psi1)`.
pub fn kernel_mode(op: &LinearOperator, du0: &[f64]) -> Result<(f64, Vec<f64>)> {
    let odd = |x: &mut Vec<f64>| *x = reflect_part(x, -1.0);
    let (delta, mut psi) = op.eigen_iterate(0.0, du0.to_vec(), &odd, 50)?;
    if dot_plain(&psi, du0) < 0.0 {
        psi.iter_mut().for_each(|v| *v = -*v);
    }
    let nrm = op.grid.norm(&psi);
    psi.iter_mut().for_each(|v| *v /= nrm);
    Ok((delta, psi))
}

/// Everything spectral about `L0` that the coefficient formulas consume.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub op: LinearOperator,
    pub lambda0: f64,
    pub psi0: Vec<f64>,
    pub psi1: Vec<f64>,
    /// Discrete eigenvalue of `psi1` (zero up to discretization error).
    pub kernel_eigenvalue: f64,
}

const DEFLATION_SHIFT: f64 = 1e-6;

impl SpectralData {
    pub fn compute(b: &BilayerData) -> Result<Self> {
        Self::with_stencil(b, Stencil::default())
    }

    pub fn with_stencil(b: &BilayerData, stencil: Stencil) -> Result<Self> {
        let op = assemble_l0(b, stencil);
        let (lambda0, psi0) = ground_state(&op)?;
        let (kernel_eigenvalue, psi1) = kernel_mode(&op, &b.du0)?;
        Ok(Self { op, lambda0, psi0, psi1, kernel_eigenvalue })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.op.grid
    }

    pub fn apply_shifted(&self, sigma: f64, x: &[f64]) -> Vec<f64> {
        self.op.apply_shifted(sigma, x)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.op.apply(x)
    }

    /// `(L0 - sigma)^{-1} f`. At `sigma = 0` the kernel mode `psi1` is
    /// deflated, at `sigma = lambda0` the ground state; `f` must then be
    /// orthogonal to it.
    pub fn solve_shifted(&self, sigma: f64, f: &[f64]) -> Result<Vec<f64>> {
        let tol = 1e-9 * (1.0 + self.lambda0);
        let mode = if sigma.abs() <= tol {
            Some(&self.psi1)
        } else if (sigma - self.lambda0).abs() <= tol {
            Some(&self.psi0)
        } else {
            None
        };
        let Some(psi) = mode else {
            return self.op.solve_plain(sigma, f);
        };
        let g = self.grid();
        let fnorm = g.norm(f);
        let proj = g.dot(f, psi);
        if proj.abs() > 1e-8 * fnorm.max(f64::MIN_POSITIVE) {
            return Err(Error::Resonant(format!(
                "right-hand side has component {proj:e} along the null direction at sigma = {sigma}"
            )));
        }
        let deflate = |x: &mut Vec<f64>| {
            let p = g.dot(x, psi);
            x.iter_mut().zip(psi).for_each(|(xi, pi)| *xi -= p * pi);
        };
        let mut rhs = f.to_vec();
        deflate(&mut rhs);
        // Factor slightly off the eigenvalue and iterate out the offset.
        let lu = self.op.shifted(sigma + DEFLATION_SHIFT).factor()?;
        let mut x = vec![0.0; f.len()];
        for _ in 0..6 {
            let r: Vec<f64> =
                self.op.apply_shifted(sigma, &x).iter().zip(&rhs).map(|(a, b)| b - a).collect();
            let dx = lu.solve(&r);
            x.iter_mut().zip(dx).for_each(|(xi, d)| *xi += d);
            deflate(&mut x);
        }
        Ok(x)
    }

    /// `||L0 u0'|| / ||u0'||`.
    pub fn kernel_residual(&self, du0: &[f64]) -> f64 {
        let g = self.grid();
        g.norm(&self.apply(du0)) / g.norm(du0)
    }

    /// Largest eigenvalue on the complement of `{psi0, psi1}`.
    pub fn third_eigenvalue(&self) -> Result<f64> {
        let g = *self.grid();
        let (p0, p1) = (self.psi0.clone(), self.psi1.clone());
        let deflate = move |x: &mut Vec<f64>| {
            for psi in [&p0, &p1] {
                let p = g.dot(x, psi);
                x.iter_mut().zip(psi).for_each(|(xi, pi)| *xi -= p * pi);
            }
        };
        let start: Vec<f64> = (0..g.n).map(|i| 1.0 + (0.37 * i as f64).sin()).collect();
        let (lambda, _) = self.op.eigen_iterate(0.5 * self.lambda0, start, &deflate, 3000)?;
        Ok(lambda)
    }

    /// Sign changes of a vector, ignoring entries below `1e-8` of its maximum.
    pub fn node_count(v: &[f64]) -> usize {
        let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let sig: Vec<f64> = v.iter().copied().filter(|x| x.abs() > 1e-8 * vmax).collect();
        sig.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
    }
}

/// `lambda0` on the grid and its refinement, combined to cancel the leading
/// error term of the stencil.
pub fn richardson_lambda0(b: &BilayerData, stencil: Stencil) -> Result<f64> {
    let coarse = ground_state(&assemble_l0(b, stencil))?.0;
    let fine_b = crate::bilayer::compute_u0(&b.well, b.grid.refined())?;
    let fine = ground_state(&assemble_l0(&fine_b, stencil))?.0;
    let p = 2f64.powi(stencil.order() as i32);
    Ok((p * fine - coarse) / (p - 1.0))
}
