//! Exact zero-order-hold discretisations of first- and second-order
//! low-pass stages.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::waveform::StepSignal;
use crate::error::ensure;
use crate::{Error, Result, TWO_PI};

/// Minimum samples per filter time constant.
pub const SAMPLES_PER_TIME_CONSTANT: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterOrder {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub order: FilterOrder,
    pub cutoff_hz: f64,
    /// Quality factor of a second-order stage; 0.5 is critically damped.
    pub q: f64,
}

impl FilterSpec {
    pub fn first_order(cutoff_hz: f64) -> Self {
        Self {
            order: FilterOrder::First,
            cutoff_hz,
            q: 0.5,
        }
    }

    pub fn second_order(cutoff_hz: f64) -> Self {
        Self {
            order: FilterOrder::Second,
            cutoff_hz,
            q: 0.5,
        }
    }

    /// Amplifier stage followed by the smoothing stage of the endcap supply.
    pub fn reference_chain() -> Vec<FilterSpec> {
        vec![Self::first_order(35e3), Self::second_order(80e3)]
    }

    pub fn time_constant(&self) -> f64 {
        1.0 / (TWO_PI * self.cutoff_hz)
    }

    /// `|H(iω)|`.
    pub fn gain_at(&self, omega: f64) -> f64 {
        let w0 = TWO_PI * self.cutoff_hz;
        let x = omega / w0;
        match self.order {
            FilterOrder::First => 1.0 / (1.0 + x * x).sqrt(),
            FilterOrder::Second => 1.0 / ((1.0 - x * x).powi(2) + (x / self.q).powi(2)).sqrt(),
        }
    }

    fn validate(&self) -> Result<()> {
        ensure(self.cutoff_hz > 0.0 && self.cutoff_hz.is_finite(), || {
            "cutoff must be positive".into()
        })?;
        ensure(self.q > 0.0, || "quality factor must be positive".into())
    }
}

impl std::str::FromStr for FilterSpec {
    type Err = Error;

    /// Parses `order:cutoff_khz`, e.g. `1:35` or `2:80`.
    fn from_str(s: &str) -> Result<Self> {
        let (order, cutoff) = s.split_once(':').ok_or_else(|| {
            Error::InvalidInput(format!("filter `{s}` is not of the form order:cutoff_khz"))
        })?;
        let cutoff: f64 = cutoff
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad cutoff in filter `{s}`")))?;
        match order.trim() {
            "1" => Ok(Self::first_order(cutoff * 1e3)),
            "2" => Ok(Self::second_order(cutoff * 1e3)),
            _ => Err(Error::InvalidInput(format!(
                "filter order must be 1 or 2 in `{s}`"
            ))),
        }
    }
}

/// Filtered trap-centre trajectory `c(t)` on a uniform grid from t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionCommand {
    pub dt: f64,
    pub samples: Vec<f64>,
    pub step_times: Vec<f64>,
    /// Value the command settles to.
    pub final_value: f64,
}

enum Stage {
    First {
        decay: f64,
    },
    Second {
        phi: Matrix2<f64>,
        gamma: Vector2<f64>,
    },
}

impl Stage {
    fn new(spec: &FilterSpec, dt: f64) -> Self {
        let w0 = TWO_PI * spec.cutoff_hz;
        match spec.order {
            FilterOrder::First => Stage::First {
                decay: (-w0 * dt).exp(),
            },
            FilterOrder::Second => {
                // x = (y, ẏ): ẍ = w0²(u − y) − (w0/q) ẏ.
                let a = Matrix2::new(0.0, 1.0, -w0 * w0, -w0 / spec.q);
                let phi = (a * dt).exp();
                let b = Vector2::new(0.0, w0 * w0);
                let a_inv = a
                    .try_inverse()
                    .expect("stable second-order stage is invertible");
                let gamma = a_inv * (phi - Matrix2::identity()) * b;
                Stage::Second { phi, gamma }
            }
        }
    }

    fn run(&self, input: &[f64]) -> Vec<f64> {
        let first = input.first().copied().unwrap_or(0.0);
        match self {
            Stage::First { decay } => {
                let mut y = first;
                input
                    .iter()
                    .map(|&u| {
                        let out = y;
                        y = u + (y - u) * decay;
                        out
                    })
                    .collect()
            }
            Stage::Second { phi, gamma } => {
                let mut x = Vector2::new(first, 0.0);
                input
                    .iter()
                    .map(|&u| {
                        let out = x[0];
                        x = phi * x + gamma * u;
                        out
                    })
                    .collect()
            }
        }
    }
}

/// Passes the held step signal through each filter in turn. Every stage is
/// the exact response to an input held constant over each sample, starting
/// from equilibrium at the initial level.
pub fn apply_filter_chain(signal: &StepSignal, filters: &[FilterSpec]) -> Result<PositionCommand> {
    for f in filters {
        f.validate()?;
        if signal.dt * SAMPLES_PER_TIME_CONSTANT > f.time_constant() {
            return Err(Error::Sampling(format!(
                "dt = {:.3e} s gives fewer than {SAMPLES_PER_TIME_CONSTANT} samples per time constant of the {:.1} kHz stage",
                signal.dt,
                f.cutoff_hz / 1e3
            )));
        }
    }
    let mut samples = signal.samples.clone();
    for f in filters {
        samples = Stage::new(f, signal.dt).run(&samples);
    }
    Ok(PositionCommand {
        dt: signal.dt,
        samples,
        step_times: signal.step_times.clone(),
        final_value: signal.samples.last().copied().unwrap_or(0.0),
    })
}

/// Measured 10–90 % rise time of the endcap voltage after a step (s).
pub const REFERENCE_RISE_TIME: f64 = 9.0e-6;

/// Remaining fraction `δV/ΔV = exp(−t/τ)` of a first-order relaxation.
pub fn residual_settling(tau: f64, t: f64) -> Result<f64> {
    ensure(tau > 0.0 && t >= 0.0, || "need τ > 0 and t ≥ 0".into())?;
    Ok((-t / tau).exp())
}

/// First-order time constant from a 10–90 % rise time, `τ = t_rise/ln 9`.
pub fn time_constant_from_rise(rise_time: f64) -> f64 {
    rise_time / 9f64.ln()
}

/// Rule-of-thumb 3 dB bandwidth `0.35/t_rise`.
pub fn bandwidth_from_rise(rise_time: f64) -> f64 {
    0.35 / rise_time
}

/// 10–90 % rise time of a sampled step response that starts at 0 and
/// settles to `final_value`, with linear interpolation between samples.
pub fn rise_time(samples: &[f64], dt: f64, final_value: f64) -> Option<f64> {
    let crossing = |level: f64| {
        let target = level * final_value;
        samples.windows(2).enumerate().find_map(|(k, w)| {
            (w[0] < target && w[1] >= target)
                .then(|| (k as f64 + (target - w[0]) / (w[1] - w[0])) * dt)
        })
    };
    Some(crossing(0.9)? - crossing(0.1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_step(dt: f64, n: usize) -> StepSignal {
        let mut samples = vec![1.0; n];
        samples[0] = 0.0;
        StepSignal {
            dt,
            samples,
            step_times: vec![dt],
        }
    }

    #[test]
    fn dc_passes_unchanged() {
        let s = StepSignal {
            dt: 1e-8,
            samples: vec![2.5; 5000],
            step_times: vec![],
        };
        let c = apply_filter_chain(&s, &FilterSpec::reference_chain()).unwrap();
        assert!(c.samples.iter().all(|&v| (v - 2.5).abs() < 1e-9));
    }

    #[test]
    fn first_order_rise_time() {
        let dt = 1e-9;
        let s = unit_step(dt, 60_000);
        let c = apply_filter_chain(&s, &[FilterSpec::first_order(35e3)]).unwrap();
        let tr = rise_time(&c.samples, dt, 1.0).unwrap();
        assert_relative_eq!(tr, 9f64.ln() / (TWO_PI * 35e3), max_relative = 1e-4);
        assert!((tr - 10.0e-6).abs() < 0.1e-6);
    }

    #[test]
    fn measured_rise_time_conversions() {
        assert!((bandwidth_from_rise(REFERENCE_RISE_TIME) - 39e3).abs() < 0.5e3);
        assert!((time_constant_from_rise(REFERENCE_RISE_TIME) - 4.1e-6).abs() < 0.05e-6);
        assert_eq!(residual_settling(4.1e-6, 0.0).unwrap(), 1.0);
        assert!((residual_settling(4.1e-6, 60e-6).unwrap() - 4.3e-7).abs() < 0.2e-7);
    }

    #[test]
    fn chain_settles_to_final_value() {
        let s = unit_step(1e-8, 20_000);
        let c = apply_filter_chain(&s, &FilterSpec::reference_chain()).unwrap();
        assert!((c.samples.last().unwrap() - 1.0).abs() < 1e-9);
        // Critically damped stages never overshoot.
        assert!(c.samples.iter().all(|&v| v <= 1.0 + 1e-9));
    }

    #[test]
    fn coarse_sampling_is_rejected() {
        let s = unit_step(1e-6, 100);
        assert!(matches!(
            apply_filter_chain(&s, &[FilterSpec::second_order(80e3)]),
            Err(Error::Sampling(_))
        ));
    }

    #[test]
    fn parses_filter_specs() {
        let f: FilterSpec = "2:80".parse().unwrap();
        assert_eq!(f, FilterSpec::second_order(80e3));
        assert!("3:10".parse::<FilterSpec>().is_err());
        assert!("35".parse::<FilterSpec>().is_err());
    }

    #[test]
    fn gain_magnitudes() {
        let w = TWO_PI * 358e3;
        assert_relative_eq!(
            FilterSpec::first_order(35e3).gain_at(w),
            1.0 / (1.0 + (358.0f64 / 35.0).powi(2)).sqrt(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            FilterSpec::second_order(80e3).gain_at(w),
            1.0 / (1.0 + (358.0f64 / 80.0).powi(2)),
            max_relative = 1e-12
        );
    }
}
