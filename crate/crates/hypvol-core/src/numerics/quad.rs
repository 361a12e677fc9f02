// SPDX-License-Identifier: MIT OR Apache-2.0

//! Gauss-Legendre rules and composite panel integration.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::pairwise_sum;

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Rule with `n >= 1` nodes, computed by Newton iteration on the
    /// three-term Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Always false: a rule has at least one node.
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes on `[-1, 1]`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights matching [`GaussLegendre::nodes`].
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let xs = self.nodes.iter().map(|x| mid + half * x).collect();
        let ws = self.weights.iter().map(|w| half * w).collect();
        (xs, ws)
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .collect();
        half * pairwise_sum(&terms)
    }

    /// Composite rule over consecutive panels `[breaks[k], breaks[k+1]]`.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(&self, breaks: &[f64], mut f: F) -> f64 {
        let parts: Vec<f64> = breaks
            .windows(2)
            .map(|p| self.integrate(p[0], p[1], &mut f))
            .collect();
        pairwise_sum(&parts)
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Panel breakpoints on `[a, b]` refined geometrically towards `a`:
/// `a, a + h r^(m-1), ..., a + h r, a + h ... b` where the smallest panel has
/// width `(b - a) * ratio^levels`.
pub fn graded_breaks(a: f64, b: f64, levels: usize, ratio: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(levels + 2);
    out.push(a);
    let len = b - a;
    for k in (1..=levels).rev() {
        out.push(a + len * ratio.powi(k as i32));
    }
    out.push(b);
    out
}

/// Uniform breakpoints with `panels` panels on `[a, b]`.
pub fn uniform_breaks(a: f64, b: f64, panels: usize) -> Vec<f64> {
    (0..=panels)
        .map(|k| a + (b - a) * k as f64 / panels as f64)
        .collect()
}

/// Merge sorted breakpoint lists, dropping near-duplicates.
pub fn merge_breaks(mut parts: Vec<f64>) -> Vec<f64> {
    parts.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    let mut out: Vec<f64> = Vec::with_capacity(parts.len());
    for p in parts {
        match out.last() {
            Some(last) if (p - last).abs() <= 1e-15 * (1.0 + p.abs()) => {}
            _ => out.push(p),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in 1..40 {
            let g = GaussLegendre::new(n);
            let s: f64 = g.weights().iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let g = GaussLegendre::new(6);
        for p in 0..12 {
            let got = g.integrate(0.0, 1.0, |x| x.powi(p));
            let want = 1.0 / (p as f64 + 1.0);
            assert!((got - want).abs() < 1e-14, "p={p}");
        }
    }

    #[test]
    fn graded_panels_resolve_log_singularity() {
        let g = GaussLegendre::new(12);
        let br = graded_breaks(0.0, 1.0, 40, 0.5);
        let got = g.integrate_panels(&br, |x| x.ln());
        assert!((got + 1.0).abs() < 1e-11, "{got}");
    }

    #[test]
    fn high_order_rule_nodes_are_sorted_and_symmetric() {
        let g = GaussLegendre::new(64);
        for k in 0..64 {
            assert!((g.nodes()[k] + g.nodes()[63 - k]).abs() < 1e-15);
            if k > 0 {
                assert!(g.nodes()[k] > g.nodes()[k - 1]);
            }
        }
    }
}
