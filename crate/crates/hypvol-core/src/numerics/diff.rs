// SPDX-License-Identifier: MIT OR Apache-2.0

//! Finite-difference stencils for smooth scalar functions.
//!
//! All stencils are fourth order. [`d1_richardson`] and [`d2_richardson`]
//! add one Richardson step on top (sixth order) for the curvature checks.

/// Fourth-order central first derivative.
pub fn d1<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Fourth-order central second derivative.
pub fn d2<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
        / (12.0 * h * h)
}

/// [`d1`] with one Richardson extrapolation (`h` and `h/2`).
pub fn d1_richardson<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let a = d1(&f, x, h);
    let b = d1(&f, x, 0.5 * h);
    (16.0 * b - a) / 15.0
}

/// [`d2`] with one Richardson extrapolation (`h` and `h/2`).
pub fn d2_richardson<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let a = d2(&f, x, h);
    let b = d2(&f, x, 0.5 * h);
    (16.0 * b - a) / 15.0
}

/// Fourth-order mixed derivative of `f(x, y)`.
pub fn d11<F: Fn(f64, f64) -> f64>(f: F, x: f64, y: f64, hx: f64, hy: f64) -> f64 {
    let w = [1.0, -8.0, 8.0, -1.0];
    let o = [-2.0, -1.0, 1.0, 2.0];
    let mut acc = 0.0;
    for (wi, oi) in w.iter().zip(o) {
        for (wj, oj) in w.iter().zip(o) {
            acc += wi * wj * f(x + oi * hx, y + oj * hy);
        }
    }
    acc / (144.0 * hx * hy)
}

/// Interior first-derivative stencil weights on a uniform grid (offsets
/// `-2..=2`), fourth order.
pub const D1_CENTRAL: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];

/// Interior second-derivative stencil weights on a uniform grid (offsets
/// `-2..=2`), fourth order.
pub const D2_CENTRAL: [f64; 5] = [
    -1.0 / 12.0,
    16.0 / 12.0,
    -30.0 / 12.0,
    16.0 / 12.0,
    -1.0 / 12.0,
];

/// One-sided fourth-order first derivative at node 1 using nodes `0..=5`.
pub const D1_NEAR_EDGE: [f64; 6] = [
    -3.0 / 12.0,
    -10.0 / 12.0,
    18.0 / 12.0,
    -6.0 / 12.0,
    1.0 / 12.0,
    0.0,
];

/// One-sided fourth-order second derivative at node 1 using nodes `0..=5`.
pub const D2_NEAR_EDGE: [f64; 6] = [
    10.0 / 12.0,
    -15.0 / 12.0,
    -4.0 / 12.0,
    14.0 / 12.0,
    -6.0 / 12.0,
    1.0 / 12.0,
];

/// One-sided fourth-order first derivative at node 0 using nodes `0..=4`.
pub const D1_EDGE: [f64; 5] = [
    -25.0 / 12.0,
    48.0 / 12.0,
    -36.0 / 12.0,
    16.0 / 12.0,
    -3.0 / 12.0,
];
