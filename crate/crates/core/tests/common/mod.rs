#![allow(dead_code)]

use std::sync::OnceLock;

use fch_pearl::bilayer::{compute_u0, BilayerData, RadialGrid};
use fch_pearl::coefficients::{CoefficientInputs, CoefficientTable};
use fch_pearl::operator::SpectralData;
use fch_pearl::potential::{Well, WellSpec};

pub struct Fixture {
    pub well: Well,
    pub bilayer: BilayerData,
    pub spectral: SpectralData,
    pub table: CoefficientTable,
}

/// Default well and grid at `gamma = 1`, `eta1 = 1`, `eta2 = 2`.
pub fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let well = Well::new(WellSpec::default()).unwrap();
        let bilayer = compute_u0(&well, RadialGrid::default_for(&well)).unwrap();
        let spectral = SpectralData::compute(&bilayer).unwrap();
        let table =
            CoefficientTable::compute(&bilayer, &spectral, CoefficientInputs { gamma: 1.0, eta1: 1.0, eta2: 2.0 })
                .unwrap();
        Fixture { well, bilayer, spectral, table }
    })
}

/// Default well on the grid with the same half-width and spacing halved.
pub fn refined() -> &'static (BilayerData, SpectralData) {
    static F: OnceLock<(BilayerData, SpectralData)> = OnceLock::new();
    F.get_or_init(|| {
        let f = fixture();
        let b = compute_u0(&f.well, f.bilayer.grid.refined()).unwrap();
        let op = SpectralData::compute(&b).unwrap();
        (b, op)
    })
}

/// Default cubic well written out in `y = u + 1`:
/// `W = y^4/4 - 7y^3/6 + 5y^2/4`.
pub fn w_y(y: f64) -> f64 {
    y * y * (1.25 - 7.0 / 6.0 * y + 0.25 * y * y)
}

pub fn dw_y(y: f64) -> f64 {
    y * (2.5 - 3.5 * y + y * y)
}

pub fn d2w_y(y: f64) -> f64 {
    2.5 - 7.0 * y + 3.0 * y * y
}

/// `lambda0` by shooting `psi'' = (W''(u0) + lambda) psi` from an even start,
/// with `u0` integrated alongside: the second-order system up to `r = 2`, then
/// the first integral `y' = -sqrt(2 W)`, fixed-step RK4.
pub fn shooting_lambda0(lo: f64, hi: f64) -> f64 {
    let y_star = 5.0 / 3.0;
    let h: f64 = 5e-4;
    let r_end: f64 = 12.0;
    let tail = |lambda: f64| -> f64 {
        // state: y, y', psi, psi'
        let f = |r: f64, s: [f64; 4]| -> [f64; 4] {
            let yp = if r < 2.0 { s[1] } else { -(2.0 * w_y(s[0])).sqrt() };
            let ypp = dw_y(s[0]);
            [yp, ypp, s[3], (d2w_y(s[0]) + lambda) * s[2]]
        };
        let mut s = [y_star, 0.0, 1.0, 0.0];
        let steps = (r_end / h).round() as usize;
        for k in 0..steps {
            let r = k as f64 * h;
            let add = |a: [f64; 4], b: [f64; 4], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2], a[3] + c * b[3]];
            let k1 = f(r, s);
            let k2 = f(r + 0.5 * h, add(s, k1, 0.5 * h));
            let k3 = f(r + 0.5 * h, add(s, k2, 0.5 * h));
            let k4 = f(r + h, add(s, k3, h));
            for i in 0..4 {
                s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            // keep psi scaled; only its sign at r_end matters
            let m = s[2].abs().max(s[3].abs());
            if m > 1e100 {
                s[2] /= m;
                s[3] /= m;
            }
        }
        s[2]
    };
    let (mut a, mut b) = (lo, hi);
    let fa = tail(a).signum();
    assert_ne!(fa, tail(b).signum(), "bracket does not straddle an eigenvalue");
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if tail(m).signum() == fa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
