//! Banded matrices with LU factorization under partial pivoting.

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row-wise windows covering columns `i - kl ..= i + ku + kl`; the extra
    /// `kl` columns absorb fill-in from row exchanges.
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![0.0; n * (2 * kl + ku + 1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn idx(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.kl as isize;
        if off < 0 || off as usize >= self.width() || j >= self.n {
            None
        } else {
            Some(i * self.width() + off as usize)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.idx(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Panics if `(i, j)` lies outside the stored band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j).expect("entry outside band");
        self.data[k] = v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            let hi = (i + self.ku.max(self.kl)).min(self.n - 1);
            (i..=hi).all(|j| self.get(i, j) == self.get(j, i))
        })
    }

    /// Gaussian elimination with partial pivoting.
    pub fn factor(&self) -> Result<BandLu> {
        let mut a = self.clone();
        let n = a.n;
        let kl = a.kl;
        let reach = a.kl + a.ku;
        let mut piv = vec![0usize; n];
        let mut lower = vec![0.0; n * kl.max(1)];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a.get(k, k).abs();
            for i in k + 1..=last {
                let v = a.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            piv[k] = p;
            if best == 0.0 || !best.is_finite() {
                return Err(Error::LinearSolve(format!("singular pivot in column {k}")));
            }
            let cmax = (k + reach).min(n - 1);
            if p != k {
                for j in k..=cmax {
                    let (x, y) = (a.get(k, j), a.get(p, j));
                    a.set(k, j, y);
                    a.set(p, j, x);
                }
            }
            let d = a.get(k, k);
            for i in k + 1..=last {
                let l = a.get(i, k) / d;
                lower[k * kl.max(1) + (i - k - 1)] = l;
                a.set(i, k, 0.0);
                if l != 0.0 {
                    for j in k + 1..=cmax {
                        let v = a.get(i, j) - l * a.get(k, j);
                        a.set(i, j, v);
                    }
                }
            }
        }
        Ok(BandLu { u: a, lower, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    u: BandMatrix,
    lower: Vec<f64>,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.u.n;
        let kl = self.u.kl;
        let reach = self.u.kl + self.u.ku;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let last = (k + kl).min(n - 1);
            for i in k + 1..=last {
                x[i] -= self.lower[k * kl.max(1) + (i - k - 1)] * x[k];
            }
        }
        for k in (0..n).rev() {
            let cmax = (k + reach).min(n - 1);
            let mut s = x[k];
            for j in k + 1..=cmax {
                s -= self.u.get(k, j) * x[j];
            }
            x[k] = s / self.u.get(k, k);
        }
        x
    }
}
