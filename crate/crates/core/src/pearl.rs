//! Asymptotic pearled bilayers: flat strips modulated along the interface and
//! circular bilayers carrying `n` beads.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bilayer::{compute_u1, compute_v0, BilayerData, RadialGrid};
use crate::coefficients::CoefficientTable;
use crate::error::{Error, Result};
use crate::operator::SpectralData;

/// Existence box for the pearled family: `eps in (0, epsilon0]`, `|kappa| <= kappa0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PearlBounds {
    pub epsilon0: f64,
    pub kappa0: f64,
    /// Lower bound on `eps * n` for circular bead counts.
    pub n_minus: f64,
}

impl PearlBounds {
    pub const DEFAULT_EPSILON0: f64 = 0.2;

    /// `epsilon0 = 0.2`, `kappa0` at half the supercriticality limit, `n_minus = 1`.
    pub fn default_for(table: &CoefficientTable) -> Self {
        let eps0 = Self::DEFAULT_EPSILON0;
        let kappa0 = if table.alpha2 == 0.0 {
            1.0
        } else {
            0.5 * table.alpha0.abs() / (2.0 * table.alpha2.abs() * eps0.sqrt())
        };
        Self { epsilon0: eps0, kappa0, n_minus: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupercriticalityCheck {
    pub pass: bool,
    /// `alpha0 / (2|alpha2|) - sqrt(eps0) kappa0`; infinite when `alpha2 = 0`.
    pub margin: f64,
}

pub fn supercriticality_bound(table: &CoefficientTable, epsilon0: f64, kappa0: f64) -> SupercriticalityCheck {
    let limit = if table.alpha2 == 0.0 { f64::INFINITY } else { table.alpha0 / (2.0 * table.alpha2.abs()) };
    let margin = limit - epsilon0.sqrt() * kappa0;
    SupercriticalityCheck { pass: margin > 0.0, margin }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PearlKind {
    Flat { period: f64 },
    Circular { beads: usize, radius: f64 },
}

/// Leading-order pearled solution with a sampled transverse structure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PearlSolution {
    pub kind: PearlKind,
    pub epsilon: f64,
    pub kappa: f64,
    pub amplitude: f64,
    pub grid: RadialGrid,
    /// `u0 + eps u1` on the radial grid.
    pub base: Vec<f64>,
    pub psi0: Vec<f64>,
}

impl PearlSolution {
    /// Field at tangential coordinate `s` (arclength `tau` for flat, angle
    /// `theta` for circular) and stretched normal distance `r`.
    pub fn value(&self, s: f64, r: f64) -> f64 {
        let phase = match self.kind {
            PearlKind::Flat { period } => 2.0 * PI * s / period,
            PearlKind::Circular { beads, .. } => beads as f64 * s,
        };
        self.grid.interpolate(&self.base, r) + self.amplitude * phase.cos() * self.grid.interpolate(&self.psi0, r)
    }

    /// Field at physical `(x, y)`: a flat interface along `y = 0`, or a circle
    /// of radius `R0n` about the origin.
    pub fn value_xy(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            PearlKind::Flat { .. } => self.value(x, y / self.epsilon),
            PearlKind::Circular { radius, .. } => {
                let rho = x.hypot(y);
                self.value(y.atan2(x), (rho - radius) / self.epsilon)
            }
        }
    }

    pub fn far_field(&self) -> f64 {
        self.base[self.base.len() - 1]
    }

    pub fn period(&self) -> f64 {
        match self.kind {
            PearlKind::Flat { period } => period,
            PearlKind::Circular { beads, radius } => 2.0 * PI * radius / beads as f64,
        }
    }
}

/// `A_p = 2 sqrt(eps |kappa|) / alpha0^{1/4}`.
pub fn pearl_amplitude(alpha0: f64, epsilon: f64, kappa: f64) -> f64 {
    2.0 * (epsilon * kappa.abs()).sqrt() / alpha0.powf(0.25)
}

/// `T_p = (2 pi eps / sqrt(lambda0)) (1 - sqrt(alpha0 eps))`.
pub fn pearl_period(lambda0: f64, alpha0: f64, epsilon: f64) -> f64 {
    2.0 * PI * epsilon / lambda0.sqrt() * (1.0 - (alpha0 * epsilon).sqrt())
}

fn check_parameters(table: &CoefficientTable, epsilon: f64, kappa: f64, bounds: &PearlBounds) -> Result<()> {
    if !(table.alpha0 > 0.0) {
        return Err(Error::NoPearling(table.alpha0));
    }
    if !(epsilon > 0.0 && epsilon <= bounds.epsilon0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside (0, {}]", bounds.epsilon0)));
    }
    if kappa.abs() > bounds.kappa0 {
        return Err(Error::InvalidArgument(format!("|kappa| = {} exceeds kappa0 = {}", kappa.abs(), bounds.kappa0)));
    }
    let check = supercriticality_bound(table, bounds.epsilon0, bounds.kappa0);
    if !check.pass {
        return Err(Error::Supercriticality {
            lhs: bounds.epsilon0.sqrt() * bounds.kappa0,
            rhs: check.margin + bounds.epsilon0.sqrt() * bounds.kappa0,
        });
    }
    if (table.alpha0 * epsilon).sqrt() >= 1.0 {
        return Err(Error::InvalidArgument("alpha0 eps >= 1: period correction exceeds leading order".into()));
    }
    Ok(())
}

fn transverse(b: &BilayerData, op: &SpectralData, table: &CoefficientTable, epsilon: f64) -> Result<Vec<f64>> {
    let v0 = compute_v0(b, op, table.gamma, table.eta_d)?;
    let u1 = compute_u1(op, &v0)?;
    Ok(b.u0.iter().zip(&u1).map(|(a, c)| a + epsilon * c).collect())
}

pub fn flat_pearl(
    b: &BilayerData,
    op: &SpectralData,
    table: &CoefficientTable,
    epsilon: f64,
    kappa: f64,
    bounds: &PearlBounds,
) -> Result<PearlSolution> {
    check_parameters(table, epsilon, kappa, bounds)?;
    Ok(PearlSolution {
        kind: PearlKind::Flat { period: pearl_period(table.lambda0, table.alpha0, epsilon) },
        epsilon,
        kappa,
        amplitude: pearl_amplitude(table.alpha0, epsilon, kappa),
        grid: b.grid,
        base: transverse(b, op, table, epsilon)?,
        psi0: op.psi0.clone(),
    })
}

/// `R0n = (n eps / sqrt(lambda0)) (1 - sqrt(alpha0 eps))`.
pub fn circular_radius(table: &CoefficientTable, epsilon: f64, n: usize) -> f64 {
    n as f64 * epsilon / table.lambda0.sqrt() * (1.0 - (table.alpha0 * epsilon).sqrt())
}

/// Admissible `(n, R0n)`: `n >= ceil(n_minus / eps)` and `R0n >= r_minus`, at most `max_count` entries.
pub fn circular_radii(
    table: &CoefficientTable,
    epsilon: f64,
    kappa: f64,
    r_minus: f64,
    bounds: &PearlBounds,
    max_count: usize,
) -> Result<Vec<(usize, f64)>> {
    check_parameters(table, epsilon, kappa, bounds)?;
    if !(r_minus > 0.0) {
        return Err(Error::InvalidArgument(format!("R_minus must be positive, got {r_minus}")));
    }
    let gap = circular_radius(table, epsilon, 1);
    let n_lo = (bounds.n_minus / epsilon).ceil().max(1.0) as usize;
    let mut n = n_lo.max((r_minus / gap).ceil() as usize);
    while n > n_lo && circular_radius(table, epsilon, n - 1) >= r_minus {
        n -= 1;
    }
    while circular_radius(table, epsilon, n) < r_minus {
        n += 1;
    }
    Ok((n..n + max_count).map(|k| (k, circular_radius(table, epsilon, k))).collect())
}

pub fn circular_pearl(
    b: &BilayerData,
    op: &SpectralData,
    table: &CoefficientTable,
    n: usize,
    epsilon: f64,
    kappa: f64,
    bounds: &PearlBounds,
) -> Result<PearlSolution> {
    check_parameters(table, epsilon, kappa, bounds)?;
    if n == 0 {
        return Err(Error::InvalidArgument("bead count must be positive".into()));
    }
    Ok(PearlSolution {
        kind: PearlKind::Circular { beads: n, radius: circular_radius(table, epsilon, n) },
        epsilon,
        kappa,
        amplitude: pearl_amplitude(table.alpha0, epsilon, kappa),
        grid: b.grid,
        base: transverse(b, op, table, epsilon)?,
        psi0: op.psi0.clone(),
    })
}
