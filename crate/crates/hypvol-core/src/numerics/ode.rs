// SPDX-License-Identifier: MIT OR Apache-2.0

//! Dormand-Prince 5(4) embedded Runge-Kutta integrator with adaptive step
//! control. Output is produced by stepping exactly onto each requested
//! abscissa, so no interpolation error enters the results.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

/// Tolerances and limits for [`dopri5`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    /// Relative tolerance per component.
    pub rtol: f64,
    /// Absolute tolerance per component.
    pub atol: f64,
    /// Initial step; a non-positive value selects one automatically.
    pub h0: f64,
    /// Upper bound on the step size.
    pub h_max: f64,
    /// Hard limit on accepted plus rejected steps.
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h0: 0.0,
            h_max: f64::INFINITY,
            max_steps: 100_000,
        }
    }
}

/// Step statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    /// Accepted steps.
    pub accepted: usize,
    /// Rejected steps.
    pub rejected: usize,
}

/// Integration failures.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OdeError {
    /// The right-hand side refused to evaluate.
    #[error("right-hand side failed at t = {t}: {reason}")]
    Rhs {
        /// Abscissa of the failed evaluation.
        t: f64,
        /// Message from the right-hand side.
        reason: &'static str,
    },
    /// Step size underflow.
    #[error("step size underflow at t = {t}")]
    StepTooSmall {
        /// Abscissa where the step collapsed.
        t: f64,
    },
    /// Step budget exhausted.
    #[error("step budget exhausted at t = {t}")]
    MaxSteps {
        /// Abscissa reached.
        t: f64,
    },
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
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

/// Integrate `y' = f(t, y)` from `t0` and return the state at every entry of
/// `t_out` (which must be monotone in the direction of integration).
pub fn dopri5<F>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_out: &[f64],
    opts: &OdeOptions,
) -> Result<(Vec<Vec<f64>>, OdeStats), OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), &'static str>,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut stats = OdeStats::default();
    let mut out = Vec::with_capacity(t_out.len());
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let eval = |f: &mut F, t: f64, y: &[f64], dy: &mut [f64]| {
        f(t, y, dy).map_err(|reason| OdeError::Rhs { t, reason })
    };

    let span = t_out.last().map(|te| te - t0).unwrap_or(0.0);
    let dir = if span < 0.0 { -1.0 } else { 1.0 };
    let mut h = if opts.h0 > 0.0 {
        opts.h0
    } else {
        (span.abs() * 1e-3).max(1e-12)
    };
    h = h.min(opts.h_max);
    eval(&mut f, t, &y, &mut k[0])?;

    for &target in t_out {
        while (target - t) * dir > 0.0 {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(OdeError::MaxSteps { t });
            }
            let remaining = (target - t).abs();
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            if step < 1e-14 * (1.0 + t.abs()) && !last {
                return Err(OdeError::StepTooSmall { t });
            }
            let hs = dir * step;
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += hs * A[s][j] * kj[i];
                    }
                    ytmp[i] = acc;
                }
                let (_, tail) = k.split_at_mut(s);
                eval(&mut f, t + C[s] * hs, &ytmp, &mut tail[0])?;
                if s == 6 {
                    ynew.copy_from_slice(&ytmp);
                }
            }
            let mut err = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for (s, ks) in k.iter().enumerate() {
                    e += E[s] * ks[i];
                }
                e *= hs;
                let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sc) * (e / sc);
            }
            let err = (err / n.max(1) as f64).sqrt();
            if err <= 1.0 {
                t = if last { target } else { t + hs };
                y.copy_from_slice(&ynew);
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                stats.accepted += 1;
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !last {
                    h = (step * fac).min(opts.h_max);
                } else {
                    h = h.max(step * fac).min(opts.h_max);
                }
            } else {
                stats.rejected += 1;
                let fac = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.1, 1.0)
                } else {
                    0.1
                };
                h = step * fac;
            }
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_to_high_accuracy() {
        let (ys, stats) = dopri5(
            |_t, y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            &[0.5, 1.0, 2.0],
            &OdeOptions {
                rtol: 1e-12,
                atol: 1e-14,
                ..Default::default()
            },
        )
        .unwrap();
        for (y, t) in ys.iter().zip([0.5, 1.0, 2.0]) {
            assert!((y[0] - (-t as f64).exp()).abs() < 1e-11);
        }
        assert!(stats.accepted > 0);
    }

    #[test]
    fn harmonic_oscillator_conserves_energy() {
        let (ys, _) = dopri5(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0, 0.0],
            &[10.0],
            &OdeOptions {
                rtol: 1e-12,
                atol: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        let e = ys[0][0] * ys[0][0] + ys[0][1] * ys[0][1];
        assert!((e - 1.0).abs() < 1e-9);
        assert!((ys[0][0] - 10f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn rhs_failure_is_reported() {
        let r = dopri5(
            |t, _y, _dy| if t > 0.5 { Err("boom") } else { Ok(()) },
            0.0,
            &[0.0],
            &[1.0],
            &OdeOptions::default(),
        );
        assert!(matches!(r, Err(OdeError::Rhs { .. })));
    }
}
