// SPDX-License-Identifier: MIT OR Apache-2.0

//! Linear least squares through a column-scaled SVD.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

/// Least-squares failures.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    /// Fewer rows than unknowns.
    #[error("{rows} samples cannot determine {cols} coefficients")]
    Underdetermined {
        /// Number of samples.
        rows: usize,
        /// Number of unknowns.
        cols: usize,
    },
    /// Condition number above the accepted limit.
    #[error("ill-conditioned fit (condition number {condition:.3e})")]
    IllConditioned {
        /// Condition number of the scaled design matrix.
        condition: f64,
    },
    /// Non-finite sample.
    #[error("non-finite sample at index {index}")]
    NonFinite {
        /// Offending row.
        index: usize,
    },
}

/// Result of [`least_squares`].
#[derive(Debug, Clone, PartialEq)]
pub struct LsqFit {
    /// Fitted coefficients.
    pub coeffs: Vec<f64>,
    /// Root-mean-square residual.
    pub residual_rms: f64,
    /// Largest absolute residual.
    pub residual_max: f64,
    /// Condition number of the column-scaled design matrix.
    pub condition: f64,
    /// One-sigma standard errors (zero when the system is square).
    pub std_errors: Vec<f64>,
}

/// Condition number above which fits are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Solve `min |A c - b|` where `A` is `rows x cols` given row-major.
pub fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<LsqFit, FitError> {
    let m = rows.len();
    let n = rows.first().map(|r| r.len()).unwrap_or(0);
    if m < n || n == 0 {
        return Err(FitError::Underdetermined { rows: m, cols: n });
    }
    for (i, r) in rows.iter().enumerate() {
        if !rhs[i].is_finite() || r.iter().any(|v| !v.is_finite()) {
            return Err(FitError::NonFinite { index: i });
        }
    }
    let mut a = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let mut scales = Vec::with_capacity(n);
    for j in 0..n {
        let norm = a.column(j).norm();
        let s = if norm > 0.0 { norm } else { 1.0 };
        scales.push(s);
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let b = DVector::from_column_slice(rhs);
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(FitError::IllConditioned { condition });
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|_| FitError::IllConditioned { condition })?;
    let resid = &a * &x - &b;
    let rss = resid.norm_squared();
    let residual_rms = (rss / m as f64).sqrt();
    let residual_max = resid.amax();
    let sigma2 = if m > n { rss / (m - n) as f64 } else { 0.0 };
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut std_errors = Vec::with_capacity(n);
    for j in 0..n {
        let mut var = 0.0;
        for k in 0..sv.len() {
            let vjk = v_t[(k, j)];
            var += (vjk / sv[k]).powi(2);
        }
        std_errors.push((var * sigma2).sqrt() / scales[j]);
    }
    let coeffs = x.iter().zip(&scales).map(|(c, s)| c / s).collect();
    Ok(LsqFit {
        coeffs,
        residual_rms,
        residual_max,
        condition,
        std_errors,
    })
}

/// Fit `y = sum_k c_k x^{p_k}` for the given integer exponents.
pub fn power_fit(xs: &[f64], ys: &[f64], exponents: &[i32]) -> Result<LsqFit, FitError> {
    let rows: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| exponents.iter().map(|p| x.powi(*p)).collect())
        .collect();
    least_squares(&rows, ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn recovers_exact_quadratic() {
        let xs: Vec<f64> = (0..10).map(|k| 0.1 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - 2.0 * x + 3.0 * x * x).collect();
        let f = power_fit(&xs, &ys, &[0, 1, 2]).unwrap();
        assert!((f.coeffs[0] - 1.0).abs() < 1e-12);
        assert!((f.coeffs[1] + 2.0).abs() < 1e-12);
        assert!((f.coeffs[2] - 3.0).abs() < 1e-12);
        assert!(f.residual_max < 1e-12);
    }

    #[test]
    fn rejects_rank_deficient_design() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        assert!(matches!(
            least_squares(&rows, &[1.0, 2.0, 3.0]),
            Err(FitError::IllConditioned { .. })
        ));
    }

    #[test]
    fn rejects_underdetermined() {
        let rows = vec![vec![1.0, 2.0, 3.0]];
        assert!(least_squares(&rows, &[1.0]).is_err());
    }
}
