//! Adaptive Dormand–Prince 5(4) integrator for real state vectors.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct DopriOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size; `f64::INFINITY` for none.
    pub max_step: f64,
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for DopriOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-11,
            max_step: f64::INFINITY,
            initial_step: 0.0,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DopriStats {
    pub accepted: usize,
    pub rejected: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Error weights: fifth-order minus embedded fourth-order solution.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `dy/dt = f(t, y)` from `t0` and returns the state at every
/// entry of `checkpoints` (which must be non-decreasing and ≥ `t0`).
///
/// Steps are clipped so that each checkpoint is hit exactly.
pub fn dormand_prince<F>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    checkpoints: &[f64],
    opts: &DopriOptions,
) -> Result<(Vec<Vec<f64>>, DopriStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut stats = DopriStats::default();

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    let span = checkpoints.last().map_or(0.0, |&te| te - t0);
    let mut h = if opts.initial_step > 0.0 {
        opts.initial_step
    } else {
        (span * 1e-4).max(f64::MIN_POSITIVE)
    };
    h = h.min(opts.max_step);

    f(t, &y, &mut k1);
    for &target in checkpoints {
        if target < t - 1e-15 * t.abs().max(1.0) {
            return Err(Error::InvalidInput(
                "ODE checkpoints must be non-decreasing".into(),
            ));
        }
        while t < target {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::SolverFailure(format!(
                    "Dormand-Prince exceeded {} steps at t = {t:e}",
                    opts.max_steps
                )));
            }
            let remaining = target - t;
            let last = h >= remaining;
            let hs = if last { remaining } else { h };

            for i in 0..n {
                tmp[i] = y[i] + hs * A21 * k1[i];
            }
            f(t + C2 * hs, &tmp, &mut k2);
            for i in 0..n {
                tmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + C3 * hs, &tmp, &mut k3);
            for i in 0..n {
                tmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + C4 * hs, &tmp, &mut k4);
            for i in 0..n {
                tmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + C5 * hs, &tmp, &mut k5);
            for i in 0..n {
                tmp[i] = y[i]
                    + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(t + hs, &tmp, &mut k6);
            for i in 0..n {
                y_new[i] =
                    y[i] + hs * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            f(t + hs, &y_new, &mut k7);

            let mut err = 0.0;
            for i in 0..n {
                let e = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                err += (e / scale).powi(2);
            }
            let err = (err / n.max(1) as f64).sqrt();

            if err <= 1.0 || hs <= 1e-14 * t.abs().max(1e-30) {
                stats.accepted += 1;
                t = if last { target } else { t + hs };
                std::mem::swap(&mut y, &mut y_new);
                std::mem::swap(&mut k1, &mut k7);
                if !y.iter().all(|v| v.is_finite()) {
                    return Err(Error::SolverFailure(format!(
                        "non-finite state at t = {t:e}"
                    )));
                }
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !last {
                    h = (hs * factor).min(opts.max_step);
                } else {
                    h = h.max(hs * factor).min(opts.max_step);
                }
            } else {
                stats.rejected += 1;
                h = hs * (0.9 * err.powf(-0.2)).max(0.1);
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
    fn harmonic_oscillator_period() {
        let w = 3.0;
        let period = crate::TWO_PI / w;
        let (ys, _) = dormand_prince(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -w * w * y[0];
            },
            0.0,
            &[1.0, 0.0],
            &[period / 4.0, period],
            &DopriOptions {
                rtol: 1e-10,
                atol: 1e-12,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(ys[0][0].abs() < 1e-8);
        assert!((ys[1][0] - 1.0).abs() < 1e-8);
        assert!(ys[1][1].abs() < 1e-7);
    }

    #[test]
    fn exponential_decay_hits_checkpoints() {
        let cps: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let (ys, stats) = dormand_prince(
            |_, y, dy| dy[0] = -2.0 * y[0],
            0.0,
            &[1.0],
            &cps,
            &DopriOptions::default(),
        )
        .unwrap();
        for (t, y) in cps.iter().zip(&ys) {
            assert!((y[0] - (-2.0 * t).exp()).abs() < 1e-8);
        }
        assert!(stats.accepted > 0);
    }
}
