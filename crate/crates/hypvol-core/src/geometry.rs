// SPDX-License-Identifier: MIT OR Apache-2.0

//! Metric charts and finite-difference Riemannian geometry.
//!
//! Curvature is computed from metric samples alone: Christoffel symbols by
//! fourth-order central differences of the metric, the Riemann tensor by
//! fourth-order differences of the Christoffel symbols, optionally followed
//! by one Richardson step in the outer step size.

use nalgebra::SMatrix;

/// A coordinate chart carrying a Riemannian metric.
pub trait MetricPatch<const N: usize> {
    /// Metric components at `x`.
    fn metric(&self, x: &[f64; N]) -> SMatrix<f64, N, N>;

    /// Dual (contravariant) metric at `x`. Defaults to the matrix inverse.
    fn dual(&self, x: &[f64; N]) -> SMatrix<f64, N, N> {
        self.metric(x)
            .try_inverse()
            .unwrap_or_else(|| SMatrix::from_element(f64::NAN))
    }

    /// Whether `x` lies in the chart.
    fn contains(&self, _x: &[f64; N]) -> bool {
        true
    }
}

/// Any closure returning a matrix is a metric patch on all of `R^N`.
#[derive(Clone, Copy)]
pub struct FnMetric<F>(pub F);

impl<F> core::fmt::Debug for FnMetric<F> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("FnMetric")
    }
}

impl<F, const N: usize> MetricPatch<N> for FnMetric<F>
where
    F: Fn(&[f64; N]) -> SMatrix<f64, N, N>,
{
    fn metric(&self, x: &[f64; N]) -> SMatrix<f64, N, N> {
        (self.0)(x)
    }
}

/// Finite-difference settings for curvature evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureFd {
    /// Step, relative to the `scale` passed by the caller.
    pub step: f64,
    /// Apply one Richardson step (`h` and `h/2`).
    pub richardson: bool,
}

impl Default for CurvatureFd {
    fn default() -> Self {
        Self {
            step: 1e-3,
            richardson: false,
        }
    }
}

/// Christoffel symbols of the second kind, `gamma[a][b][c] = Γ^a_{bc}`.
pub fn christoffel<M: MetricPatch<N> + ?Sized, const N: usize>(
    m: &M,
    x: &[f64; N],
    h: f64,
) -> [[[f64; N]; N]; N] {
    // dg[c] = ∂_c g
    let mut dg = [SMatrix::<f64, N, N>::zeros(); N];
    for (c, slot) in dg.iter_mut().enumerate() {
        let at = |t: f64| {
            let mut y = *x;
            y[c] += t;
            m.metric(&y)
        };
        *slot = (at(-2.0 * h) - at(2.0 * h) + (at(h) - at(-h)) * 8.0) / (12.0 * h);
    }
    let ginv = m.dual(x);
    let mut gamma = [[[0.0; N]; N]; N];
    for a in 0..N {
        for b in 0..N {
            for c in b..N {
                let mut s = 0.0;
                for d in 0..N {
                    s += ginv[(a, d)] * (dg[b][(d, c)] + dg[c][(d, b)] - dg[d][(b, c)]);
                }
                gamma[a][b][c] = 0.5 * s;
                gamma[a][c][b] = 0.5 * s;
            }
        }
    }
    gamma
}

/// Riemann tensor `r[a][b][c][d] = R^a_{bcd}` with
/// `R(∂_c, ∂_d)∂_b = R^a_{bcd} ∂_a`.
pub fn riemann<M: MetricPatch<N> + ?Sized, const N: usize>(
    m: &M,
    x: &[f64; N],
    h: f64,
) -> [[[[f64; N]; N]; N]; N] {
    let gamma = christoffel(m, x, h);
    // dgam[c][a][b][d] = ∂_c Γ^a_{bd}
    let mut dgam = [[[[0.0; N]; N]; N]; N];
    for c in 0..N {
        let at = |t: f64| {
            let mut y = *x;
            y[c] += t;
            christoffel(m, &y, h)
        };
        let (m2, m1, p1, p2) = (at(-2.0 * h), at(-h), at(h), at(2.0 * h));
        for a in 0..N {
            for b in 0..N {
                for d in 0..N {
                    dgam[c][a][b][d] = (m2[a][b][d] - p2[a][b][d]
                        + 8.0 * (p1[a][b][d] - m1[a][b][d]))
                        / (12.0 * h);
                }
            }
        }
    }
    let mut r = [[[[0.0; N]; N]; N]; N];
    for a in 0..N {
        for b in 0..N {
            for c in 0..N {
                for d in 0..N {
                    let mut s = dgam[c][a][d][b] - dgam[d][a][c][b];
                    for e in 0..N {
                        s += gamma[a][c][e] * gamma[e][d][b] - gamma[a][d][e] * gamma[e][c][b];
                    }
                    r[a][b][c][d] = s;
                }
            }
        }
    }
    r
}

fn sectional_once<M: MetricPatch<N> + ?Sized, const N: usize>(
    m: &M,
    x: &[f64; N],
    i: usize,
    j: usize,
    h: f64,
) -> f64 {
    let r = riemann(m, x, h);
    let g = m.metric(x);
    let mut num = 0.0;
    for a in 0..N {
        num += g[(i, a)] * r[a][j][i][j];
    }
    num / (g[(i, i)] * g[(j, j)] - g[(i, j)] * g[(i, j)])
}

/// Sectional curvature of the coordinate plane spanned by `∂_i, ∂_j`.
///
/// `scale` sets the finite-difference step (`fd.step * scale`) and should be
/// comparable to the distance over which the metric varies.
pub fn sectional_curvature<M: MetricPatch<N> + ?Sized, const N: usize>(
    m: &M,
    x: &[f64; N],
    i: usize,
    j: usize,
    scale: f64,
    fd: CurvatureFd,
) -> f64 {
    let h = fd.step * scale;
    let k1 = sectional_once(m, x, i, j, h);
    if !fd.richardson {
        return k1;
    }
    let k2 = sectional_once(m, x, i, j, 0.5 * h);
    (16.0 * k2 - k1) / 15.0
}

/// Gaussian curvature of a surface chart.
pub fn gaussian_curvature<M: MetricPatch<2> + ?Sized>(
    m: &M,
    x: &[f64; 2],
    scale: f64,
    fd: CurvatureFd,
) -> f64 {
    sectional_curvature(m, x, 0, 1, scale, fd)
}

/// Fourth-order finite-difference Jacobian `J[(i, j)] = ∂ f_i / ∂ x_j`.
pub fn jacobian<F, const N: usize, const M: usize>(f: F, x: &[f64; N], h: f64) -> SMatrix<f64, M, N>
where
    F: Fn(&[f64; N]) -> [f64; M],
{
    let mut jac = SMatrix::<f64, M, N>::zeros();
    for j in 0..N {
        let at = |t: f64| {
            let mut y = *x;
            y[j] += t;
            f(&y)
        };
        let (m2, m1, p1, p2) = (at(-2.0 * h), at(-h), at(h), at(2.0 * h));
        for i in 0..M {
            jac[(i, j)] = (m2[i] - p2[i] + 8.0 * (p1[i] - m1[i])) / (12.0 * h);
        }
    }
    jac
}

/// Pullback `J^T G J` of a metric `G` (given at the image point) under a
/// map with Jacobian `J`.
pub fn pullback<const N: usize, const M: usize>(
    jac: &SMatrix<f64, M, N>,
    g_image: &SMatrix<f64, M, M>,
) -> SMatrix<f64, N, N> {
    jac.transpose() * g_image * jac
}

/// Largest absolute entry of a matrix difference.
pub fn max_abs_diff<const R: usize, const C: usize>(
    a: &SMatrix<f64, R, C>,
    b: &SMatrix<f64, R, C>,
) -> f64 {
    (a - b).iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, Matrix3};

    fn half_plane(x: &[f64; 2]) -> Matrix2<f64> {
        Matrix2::identity() / (x[1] * x[1])
    }

    #[test]
    fn hyperbolic_plane_has_curvature_minus_one() {
        let k = gaussian_curvature(&FnMetric(half_plane), &[0.3, 0.7], 0.7, CurvatureFd::default());
        assert!((k + 1.0).abs() < 1e-9, "{k}");
    }

    #[test]
    fn round_sphere_and_flat_torus() {
        let sphere = FnMetric(|x: &[f64; 2]| Matrix2::new(1.0, 0.0, 0.0, x[0].sin().powi(2)));
        let k = gaussian_curvature(&sphere, &[1.1, 0.4], 1.0, CurvatureFd::default());
        assert!((k - 1.0).abs() < 1e-9, "{k}");
        let torus = FnMetric(|_: &[f64; 2]| Matrix2::new(2.0, 0.3, 0.3, 1.0));
        let k = gaussian_curvature(&torus, &[0.2, 0.1], 1.0, CurvatureFd::default());
        assert!(k.abs() < 1e-9);
    }

    #[test]
    fn half_space_sectional_curvatures() {
        let g = FnMetric(|x: &[f64; 3]| Matrix3::identity() / (x[0] * x[0]));
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let k = sectional_curvature(&g, &[0.5, 0.1, -0.2], i, j, 0.5, CurvatureFd::default());
            assert!((k + 1.0).abs() < 1e-9, "{i}{j}: {k}");
        }
    }

    #[test]
    fn pullback_under_polar_coordinates() {
        let polar = |p: &[f64; 2]| [p[0] * p[1].cos(), p[0] * p[1].sin()];
        let jac = jacobian(polar, &[2.0, 0.3], 1e-3);
        let g = pullback(&jac, &Matrix2::identity());
        let want = Matrix2::new(1.0, 0.0, 0.0, 4.0);
        assert!(max_abs_diff(&g, &want) < 1e-11);
    }
}
