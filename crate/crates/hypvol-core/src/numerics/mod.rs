// SPDX-License-Identifier: MIT OR Apache-2.0

//! Small numerical kernels shared by the geometric modules: Gauss-Legendre
//! quadrature, an embedded Runge-Kutta integrator, a banded LU solver,
//! linear least squares and finite-difference stencils.

pub mod banded;
pub mod diff;
pub mod fit;
pub mod ode;
pub mod quad;

/// Pairwise summation. The reduction order only depends on the length of
/// the slice, so results are reproducible across runs.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        let mut s = 0.0;
        for v in values {
            s += *v;
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Geometric sequence `x0, x0 r, x0 r^2, ...` with `n` terms.
pub fn geometric_sequence(x0: f64, ratio: f64, n: usize) -> alloc::vec::Vec<f64> {
    let mut out = alloc::vec::Vec::with_capacity(n);
    let mut x = x0;
    for _ in 0..n {
        out.push(x);
        x *= ratio;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_naive_on_small_input() {
        let v: alloc::vec::Vec<f64> = (1..=100).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&v), 5050.0);
    }

    #[test]
    fn geometric_sequence_halves() {
        let g = geometric_sequence(1.0, 0.5, 4);
        assert_eq!(g, alloc::vec![1.0, 0.5, 0.25, 0.125]);
    }
}
