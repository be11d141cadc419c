//! Banded LU with partial pivoting.
//!
//! Storage follows the usual band layout: row `i` keeps columns
//! `i - kl ..= i + ku + kl`, the extra `kl` superdiagonals absorbing fill from
//! row interchanges. Multipliers stay in the rows where they were computed
//! (later interchanges only touch columns to the right), so the factors read
//! `A = P0 L0 P1 L1 ... U`, the same convention as LAPACK `gbtrf`.

use super::sparse::SparseMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        let n = a.dim();
        let (kl, ku) = a.bandwidths();
        let width = 2 * kl + ku + 1;
        let mut lu = Self { n, kl, ku, width, data: vec![0.0; n * width], piv: vec![0; n] };
        for (i, j, v) in a.triplets() {
            let k = lu.at(i, j);
            lu.data[k] = v;
        }
        let uw = ku + kl;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = lu.data[lu.at(k, k)].abs();
            for i in k + 1..=last_row {
                let v = lu.data[lu.at(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            lu.piv[k] = p;
            if best == 0.0 {
                return Err(Error::Singular { row: k });
            }
            let last_col = (k + uw).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (lu.at(k, j), lu.at(p, j));
                    lu.data.swap(a, b);
                }
            }
            let pivot = lu.data[lu.at(k, k)];
            for i in k + 1..=last_row {
                let ik = lu.at(i, k);
                let l = lu.data[ik] / pivot;
                lu.data[ik] = l;
                if l != 0.0 {
                    let (rk, ri) = (lu.at(k, k), lu.at(i, k));
                    for d in 1..=(last_col - k) {
                        lu.data[ri + d] -= l * lu.data[rk + d];
                    }
                }
            }
        }
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + self.kl).min(n - 1) {
                    x[i] -= self.data[self.at(i, k)] * xk;
                }
            }
        }
        let uw = self.ku + self.kl;
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + uw).min(n - 1) {
                s -= self.data[self.at(k, j)] * x[j];
            }
            x[k] = s / self.data[self.at(k, k)];
        }
        x
    }

    /// Solve `A^T x = b` with the same factors.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let uw = self.ku + self.kl;
        let mut x = b.to_vec();
        for k in 0..n {
            let mut s = x[k];
            for i in k.saturating_sub(uw)..k {
                s -= self.data[self.at(i, k)] * x[i];
            }
            x[k] = s / self.data[self.at(k, k)];
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for i in k + 1..=(k + self.kl).min(n - 1) {
                s -= self.data[self.at(i, k)] * x[i];
            }
            x[k] = s;
            x.swap(k, self.piv[k]);
        }
        x
    }
}
