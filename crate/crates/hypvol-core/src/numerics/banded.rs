// SPDX-License-Identifier: MIT OR Apache-2.0

//! Banded LU factorization with partial pivoting.
//!
//! Row `i` stores columns `i - kl ..= i + ku + kl`; the extra `kl`
//! super-diagonals absorb the fill-in produced by row interchanges.

use alloc::vec;
use alloc::vec::Vec;

/// Errors raised by the banded solver.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BandError {
    /// Entry outside the declared band.
    #[error("entry ({row}, {col}) lies outside the band")]
    OutsideBand {
        /// Row index.
        row: usize,
        /// Column index.
        col: usize,
    },
    /// Zero pivot encountered.
    #[error("matrix is numerically singular at column {col}")]
    Singular {
        /// Column of the vanishing pivot.
        col: usize,
    },
    /// Right-hand side of the wrong length.
    #[error("right-hand side has length {got}, expected {expected}")]
    Dimension {
        /// Provided length.
        got: usize,
        /// Required length.
        expected: usize,
    },
}

/// Square banded matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    /// Zero matrix of order `n`.
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    /// Order of the matrix.
    pub fn order(&self) -> usize {
        self.n
    }

    fn slot(&self, row: usize, col: usize) -> Option<usize> {
        let off = col as isize - row as isize + self.kl as isize;
        if off < 0 || off as usize >= self.width || col >= self.n || row >= self.n {
            None
        } else {
            Some(row * self.width + off as usize)
        }
    }

    /// Add `value` to entry `(row, col)`.
    pub fn add(&mut self, row: usize, col: usize, value: f64) -> Result<(), BandError> {
        let off = col as isize - row as isize;
        if off < -(self.kl as isize) || off > self.ku as isize {
            return Err(BandError::OutsideBand { row, col });
        }
        let s = self.slot(row, col).ok_or(BandError::OutsideBand { row, col })?;
        self.data[s] += value;
        Ok(())
    }

    /// Entry `(row, col)`; zero outside the stored band.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.slot(row, col).map(|s| self.data[s]).unwrap_or(0.0)
    }

    /// Matrix-vector product (valid before factorization).
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate().take(hi + 1).skip(lo) {
                acc += self.get(i, j) * xj;
            }
            *yi = acc;
        }
        y
    }

    /// Factorize in place.
    pub fn factorize(mut self) -> Result<BandLu, BandError> {
        let n = self.n;
        let kl = self.kl;
        let span = self.ku + self.kl;
        let mut piv = vec![0usize; n];
        let mut scale = 0.0f64;
        for v in &self.data {
            scale = scale.max(v.abs());
        }
        let tiny = scale * 1e-300_f64.max(f64::EPSILON * 1e-6);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            piv[k] = p;
            if best <= tiny || !best.is_finite() {
                return Err(BandError::Singular { col: k });
            }
            let last_col = (k + span).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.slot(k, j).expect("pivot row slot");
                    let b = self.slot(p, j).expect("pivot swap slot");
                    self.data.swap(a, b);
                }
            }
            let w = self.width;
            let rk = k * w + kl;
            let pivot = self.data[rk];
            let len = last_col - k;
            for i in k + 1..=last_row {
                let ri = i * w + kl - (i - k);
                let factor = self.data[ri] / pivot;
                self.data[ri] = factor;
                if factor == 0.0 {
                    continue;
                }
                for d in 1..=len {
                    let src = self.data[rk + d];
                    self.data[ri + d] -= factor * src;
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

/// LU factors of a [`BandMatrix`].
#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, BandError> {
        let n = self.m.n;
        if b.len() != n {
            return Err(BandError::Dimension {
                got: b.len(),
                expected: n,
            });
        }
        let kl = self.m.kl;
        let span = self.m.ku + kl;
        let w = self.m.width;
        let data = &self.m.data;
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    x[i] -= data[i * w + kl - (i - k)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let rk = k * w + kl;
            let mut acc = x[k];
            for j in k + 1..=(k + span).min(n - 1) {
                acc -= data[rk + (j - k)] * x[j];
            }
            x[k] = acc / data[rk];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_poisson_solution() {
        let n = 50;
        let mut a = BandMatrix::zeros(n, 1, 1);
        for i in 0..n {
            a.add(i, i, 2.0).unwrap();
            if i > 0 {
                a.add(i, i - 1, -1.0).unwrap();
            }
            if i + 1 < n {
                a.add(i, i + 1, -1.0).unwrap();
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul_vec(&x_true);
        let x = a.factorize().unwrap().solve(&b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let mut a = BandMatrix::zeros(3, 1, 1);
        a.add(0, 1, 1.0).unwrap();
        a.add(1, 0, 1.0).unwrap();
        a.add(1, 2, 2.0).unwrap();
        a.add(2, 1, 3.0).unwrap();
        a.add(2, 2, 1.0).unwrap();
        let x_true = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let x = a.factorize().unwrap().solve(&b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn outside_band_is_rejected() {
        let mut a = BandMatrix::zeros(4, 1, 1);
        assert!(a.add(0, 3, 1.0).is_err());
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = BandMatrix::zeros(3, 1, 1);
        assert!(matches!(a.factorize(), Err(BandError::Singular { .. })));
    }
}
