//! Double-well potentials with a solvent well at `u = -1` (where `W = 0`) and a
//! deeper amphiphile well at `u = m`.
//!
//! `W` is stored as a polynomial in `y = u + 1`. The constant and linear
//! coefficients vanish identically, so `W` and its derivatives keep full
//! relative precision in the exponentially small tails of a bilayer profile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WellFamily {
    /// `W'(u) = scale * u (u + 1) (u - m)`.
    #[default]
    Cubic,
    /// `W'(u) = sum_k coeffs[k] u^k`; `m` names the right well.
    Polynomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WellSpec {
    pub family: WellFamily,
    pub m: f64,
    pub scale: f64,
    /// Ascending coefficients of `W'` in powers of `u` (polynomial family only).
    pub coeffs: Vec<f64>,
}

impl Default for WellSpec {
    fn default() -> Self {
        Self { family: WellFamily::Cubic, m: 1.5, scale: 1.0, coeffs: Vec::new() }
    }
}

impl WellSpec {
    pub fn cubic(m: f64) -> Self {
        Self { m, ..Self::default() }
    }

    pub fn polynomial(m: f64, coeffs: Vec<f64>) -> Self {
        Self { family: WellFamily::Polynomial, m, scale: 1.0, coeffs }
    }

    /// Ascending coefficients of `W'` in powers of `u`.
    pub fn derivative_coeffs(&self) -> Vec<f64> {
        match self.family {
            WellFamily::Cubic => {
                let (m, s) = (self.m, self.scale);
                vec![0.0, -m * s, (1.0 - m) * s, s]
            }
            WellFamily::Polynomial => self.coeffs.clone(),
        }
    }
}

/// A prepared potential: `W` and its first four derivatives.
#[derive(Debug, Clone)]
pub struct Well {
    spec: WellSpec,
    /// `derivs[k]` holds the coefficients of `W^{(k)}` in powers of `y = u + 1`.
    derivs: [Vec<f64>; 5],
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn differentiate(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, &a)| k as f64 * a).collect()
}

/// Coefficients of `p(x + a)` given those of `p(x)`.
fn taylor_shift(c: &[f64], a: f64) -> Vec<f64> {
    let mut out = c.to_vec();
    let n = out.len();
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            out[j] += a * out[j + 1];
        }
    }
    out
}

impl Well {
    pub fn new(spec: WellSpec) -> Result<Self> {
        if !(spec.m.is_finite() && spec.m > 0.0) {
            return Err(Error::InvalidWell(format!("m must be positive, got {}", spec.m)));
        }
        if !(spec.scale.is_finite() && spec.scale > 0.0) {
            return Err(Error::InvalidWell(format!("scale must be positive, got {}", spec.scale)));
        }
        let du = spec.derivative_coeffs();
        if du.is_empty() || du.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidWell("W' coefficients must be finite and non-empty".into()));
        }
        // W'(u) in powers of y, then integrate from y = 0 so that W(-1) = 0.
        let dy = taylor_shift(&du, -1.0);
        let mut w = vec![0.0; dy.len() + 1];
        for (k, &a) in dy.iter().enumerate() {
            w[k + 1] = a / (k as f64 + 1.0);
        }
        let d1 = differentiate(&w);
        let d2 = differentiate(&d1);
        let d3 = differentiate(&d2);
        let d4 = differentiate(&d3);
        Ok(Self { spec, derivs: [w, d1, d2, d3, d4] })
    }

    pub fn spec(&self) -> &WellSpec {
        &self.spec
    }

    pub fn m(&self) -> f64 {
        self.spec.m
    }

    /// `d^order W / du^order` at `u`.
    pub fn eval(&self, u: f64, order: usize) -> Result<f64> {
        if order > 4 {
            return Err(Error::InvalidArgument(format!("derivative order {order} outside 0..=4")));
        }
        Ok(horner(&self.derivs[order], u + 1.0))
    }

    /// `W` as a function of `y = u + 1`; accurate for tiny `y`.
    pub fn w_of_y(&self, y: f64) -> f64 {
        horner(&self.derivs[0], y)
    }

    pub fn w(&self, u: f64) -> f64 {
        horner(&self.derivs[0], u + 1.0)
    }
    pub fn dw(&self, u: f64) -> f64 {
        horner(&self.derivs[1], u + 1.0)
    }
    pub fn d2w(&self, u: f64) -> f64 {
        horner(&self.derivs[2], u + 1.0)
    }
    pub fn d3w(&self, u: f64) -> f64 {
        horner(&self.derivs[3], u + 1.0)
    }
    pub fn d4w(&self, u: f64) -> f64 {
        horner(&self.derivs[4], u + 1.0)
    }

    /// `W''(-1)`.
    pub fn mu_minus(&self) -> f64 {
        self.d2w(-1.0)
    }
    /// `W''(m)`.
    pub fn mu_plus(&self) -> f64 {
        self.d2w(self.spec.m)
    }
    /// `W''(0)`.
    pub fn mu_zero(&self) -> f64 {
        self.d2w(0.0)
    }

    /// Root of `W` in `(0, m)` by bisection, if `W(0) > 0 > W(m)`.
    pub fn turning_point(&self) -> Option<f64> {
        let (mut a, mut b) = (0.0, self.spec.m);
        if !(self.w(a) > 0.0 && self.w(b) < 0.0) {
            return None;
        }
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            if self.w(c) > 0.0 {
                a = c;
            } else {
                b = c;
            }
            if b - a <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
                break;
            }
        }
        Some(0.5 * (a + b))
    }

    pub fn validate(&self) -> ValidationReport {
        validate_well(&self.spec)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Residual of every well-shape invariant. Never fails; failures are entries.
pub fn validate_well(spec: &WellSpec) -> ValidationReport {
    let well = match Well::new(spec.clone()) {
        Ok(w) => w,
        Err(e) => {
            return ValidationReport {
                checks: vec![Check { name: format!("construct: {e}"), value: f64::NAN, pass: false }],
            }
        }
    };
    let m = spec.m;
    let scale = well.d2w(-1.0).abs().max(well.d2w(0.0).abs()).max(1.0);
    let tol = 1e-12 * scale;
    let zero = |name: &str, v: f64| Check { name: name.into(), value: v, pass: v.abs() <= tol };
    let sign = |name: &str, v: f64, positive: bool| Check {
        name: name.into(),
        value: v,
        pass: if positive { v > tol } else { v < -tol },
    };
    ValidationReport {
        checks: vec![
            zero("W(-1) = 0", well.w(-1.0)),
            zero("W'(-1) = 0", well.dw(-1.0)),
            zero("W'(0) = 0", well.dw(0.0)),
            zero("W'(m) = 0", well.dw(m)),
            sign("mu_minus > 0", well.mu_minus(), true),
            sign("mu_plus > 0", well.mu_plus(), true),
            sign("mu_zero < 0", well.mu_zero(), false),
            sign("W(m) < 0", well.w(m), false),
        ],
    }
}

/// `d^order W / du^order` for a spec.
pub fn eval_well(spec: &WellSpec, u: f64, order: usize) -> Result<f64> {
    Well::new(spec.clone())?.eval(u, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_shift_matches_direct_evaluation() {
        let c = [0.3, -1.2, 0.7, 2.0];
        let s = taylor_shift(&c, -1.0);
        for &x in &[-0.4, 0.0, 0.9, 2.3] {
            assert!((horner(&s, x) - horner(&c, x - 1.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn order_out_of_range() {
        assert!(eval_well(&WellSpec::default(), 0.0, 5).is_err());
    }

    #[test]
    fn default_turning_point_is_two_thirds() {
        let w = Well::new(WellSpec::default()).unwrap();
        assert!((w.turning_point().unwrap() - 2.0 / 3.0).abs() < 1e-14);
    }
}
