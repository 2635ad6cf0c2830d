//! Dormand-Prince 5(4) with step-size control and continuous output.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step with its interpolation coefficients.
#[derive(Debug, Clone)]
struct Segment {
    t0: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    segments: Vec<Segment>,
    pub rejected: usize,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.y.last().expect("trajectory holds the initial point")
    }

    /// Continuous output, fourth order, at any `t` inside the integrated span.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let Some(seg) = self.segment_for(t) else {
            return self.y[0].clone();
        };
        let th = (t - seg.t0) / seg.h;
        let th1 = 1.0 - th;
        (0..seg.r[0].len())
            .map(|i| {
                let r = &seg.r;
                r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])))
            })
            .collect()
    }

    fn segment_for(&self, t: f64) -> Option<&Segment> {
        if self.segments.is_empty() {
            return None;
        }
        let forward = self.segments[0].h > 0.0;
        let idx = self.segments.partition_point(|s| if forward { s.t0 + s.h < t } else { s.t0 + s.h > t });
        self.segments.get(idx.min(self.segments.len() - 1))
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` with mixed absolute/relative tolerance `tol`.
pub fn integrate<F>(f: F, y0: &[f64], t0: f64, t1: f64, tol: f64) -> Result<Trajectory>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    if !(1e-14..=1e-6).contains(&tol) {
        return Err(Error::InvalidArgument(format!("tolerance {tol:e} outside [1e-14, 1e-6]")));
    }
    let n = y0.len();
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    let mut traj = Trajectory { t: vec![t0], y: vec![y0.to_vec()], segments: Vec::new(), rejected: 0 };
    if span == 0.0 {
        return Ok(traj);
    }
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    k[0] = f(t, &y);
    let scale0 = y.iter().fold(0.0f64, |m, v| m.max(v.abs())) + tol;
    let d0 = k[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut h = if d0 > 0.0 { 0.01 * scale0 / d0 } else { 1e-3 * span };
    h = h.min(span).max(1e-12 * span) * dir;
    let mut err_prev: f64 = 1e-4;
    let mut ytmp = vec![0.0; n];
    loop {
        let remaining = t1 - t;
        if remaining * dir <= 0.0 {
            break;
        }
        if h.abs() > remaining.abs() {
            h = remaining;
        }
        if h.abs() < 1e-14 * t.abs().max(span) {
            return Err(Error::StepUnderflow(t));
        }
        for s in 1..7 {
            for i in 0..n {
                ytmp[i] = y[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
            }
            k[s] = f(t + C[s] * h, &ytmp);
        }
        // ytmp holds the fifth-order solution (stage 7 evaluates at it).
        let ynew = ytmp.clone();
        let mut err = 0.0;
        for i in 0..n {
            let e = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
            let sc = tol + tol * y[i].abs().max(ynew[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if !err.is_finite() {
            h *= 0.1;
            traj.rejected += 1;
            continue;
        }
        if err <= 1.0 {
            let ydiff: Vec<f64> = (0..n).map(|i| ynew[i] - y[i]).collect();
            let bspl: Vec<f64> = (0..n).map(|i| h * k[0][i] - ydiff[i]).collect();
            let r3: Vec<f64> = (0..n).map(|i| ydiff[i] - h * k[6][i] - bspl[i]).collect();
            let r4: Vec<f64> = (0..n).map(|i| h * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>()).collect();
            traj.segments.push(Segment { t0: t, h, r: [y.clone(), ydiff, bspl, r3, r4] });
            t += h;
            y = ynew;
            traj.t.push(t);
            traj.y.push(y.clone());
            k[0] = k[6].clone();
            // PI controller.
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            h *= fac.clamp(0.2, 10.0);
            err_prev = err.max(1e-4);
        } else {
            traj.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).max(0.2);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let tr = integrate(|_, y| vec![-y[0]], &[1.0], 0.0, 3.0, 1e-12).unwrap();
        assert!((tr.last()[0] - (-3.0f64).exp()).abs() < 1e-11);
        assert!((tr.eval(1.3)[0] - (-1.3f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn backward_in_time() {
        let tr = integrate(|_, y| vec![y[0]], &[1.0], 0.0, -2.0, 1e-10).unwrap();
        assert!((tr.last()[0] - (-2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn rejects_tolerance_outside_range() {
        assert!(integrate(|_, y| y.to_vec(), &[1.0], 0.0, 1.0, 1e-3).is_err());
    }
}
