//! Calibration fits: the voltage-to-position conversion and the dark-state
//! pumping scans used to measure coherent oscillation amplitudes.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::ensure;
use crate::numerics::{levenberg_marquardt, linear_fit, LineFit, LmOptions};
use crate::{Error, Result};

/// Least-squares line of ion position (m) against endcap drive voltage (V).
/// The slope in m/V equals the gradient in µm/V; multiply by 1e6 for nm/mV.
pub fn voltage_position_fit(positions: &[f64], voltages: &[f64]) -> Result<LineFit> {
    linear_fit(voltages, positions)
}

/// `P_dark(f) = P₀ exp(−(f − f₀)²/2τ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianProfile {
    pub p0: f64,
    pub f0: f64,
    pub tau: f64,
}

impl GaussianProfile {
    pub fn eval(&self, f: f64) -> f64 {
        self.p0 * (-(f - self.f0).powi(2) / (2.0 * self.tau * self.tau)).exp()
    }

    /// Position on the upper flank where `P_dark = p`:
    /// `f = f₀ + √(−2τ² ln(p/P₀))`.
    pub fn invert(&self, p: f64) -> Result<f64> {
        let ratio = p / self.p0;
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::Domain(format!("P/P₀ = {ratio:.4} outside (0, 1]")));
        }
        Ok(self.f0 + (-2.0 * self.tau * self.tau * ratio.ln()).sqrt())
    }
}

/// `P(t) = P_offset + A_P sin(ω t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub amplitude: f64,
    pub offset: f64,
    pub phase: f64,
}

/// A beam-position scan and an oscillation scan at a fixed flank position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DarkStateScan {
    /// AOD drive frequencies of the beam-position scan (Hz).
    pub aod_hz: Vec<f64>,
    pub p_dark: Vec<f64>,
    /// Delays of the oscillation scan (s) and the dark-state probabilities.
    pub delays: Vec<f64>,
    pub p_dark_vs_delay: Vec<f64>,
}

/// Fits the Gaussian beam profile by Levenberg–Marquardt, seeded from the
/// data's maximum and second moment.
pub fn fit_dark_state_profile(freqs: &[f64], p: &[f64]) -> Result<GaussianProfile> {
    ensure(freqs.len() == p.len() && freqs.len() >= 3, || {
        "need ≥ 3 matching points".into()
    })?;
    let (imax, &pmax) = p
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::FitFailure("empty scan".into()))?;
    let weight: f64 = p.iter().sum();
    let var = if weight > 0.0 {
        freqs
            .iter()
            .zip(p)
            .map(|(f, w)| w * (f - freqs[imax]).powi(2))
            .sum::<f64>()
            / weight
    } else {
        0.0
    };
    let tau0 = var
        .sqrt()
        .max((freqs[freqs.len() - 1] - freqs[0]).abs() / 10.0);
    // Fit in scaled coordinates for conditioning.
    let (fc, fs) = (freqs[imax], tau0);
    let fit = levenberg_marquardt(
        |q: &[f64], r: &mut [f64]| {
            for (k, (&f, &y)) in freqs.iter().zip(p).enumerate() {
                let x = (f - fc) / fs;
                r[k] = q[0] * (-(x - q[1]).powi(2) / (2.0 * q[2] * q[2])).exp() - y;
            }
        },
        &[pmax, 0.0, 1.0],
        freqs.len(),
        &LmOptions::default(),
    )?;
    let g = GaussianProfile {
        p0: fit.params[0],
        f0: fc + fit.params[1] * fs,
        tau: (fit.params[2] * fs).abs(),
    };
    if !(g.p0 > 0.0 && g.p0 <= 1.0 + 1e-9) || !(g.tau > 0.0) {
        return Err(Error::FitFailure(format!("unphysical profile fit {g:?}")));
    }
    Ok(GaussianProfile {
        p0: g.p0.min(1.0),
        ..g
    })
}

/// Linear least-squares fit of `offset + a sin ωt + b cos ωt` at a known
/// angular frequency.
pub fn fit_sinusoid(times: &[f64], values: &[f64], omega: f64) -> Result<SinusoidFit> {
    ensure(times.len() == values.len() && times.len() >= 3, || {
        "need ≥ 3 matching points".into()
    })?;
    let n = times.len();
    let design = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => (omega * times[i]).sin(),
        _ => (omega * times[i]).cos(),
    });
    let rhs = DVector::from_column_slice(values);
    let coeffs = design
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::FitFailure(e.to_string()))?;
    let (c, a, b) = (coeffs[0], coeffs[1], coeffs[2]);
    Ok(SinusoidFit {
        amplitude: a.hypot(b),
        offset: c,
        phase: b.atan2(a),
    })
}

/// Oscillation amplitude from a flank measurement: the two extreme dark-state
/// probabilities `P_offset ± A_P` are mapped back through the beam profile
/// and `A_f = |f(P_offset + A_P) − f(P_offset − A_P)|/2` is scaled by the
/// position-per-frequency conversion `conversion` (m/Hz).
///
/// Written out as `½ f(P_offset + A_P) + ½ f(P_offset − A_P)`, the same two
/// terms would give the mean flank position instead of the amplitude.
pub fn amplitude_from_darkstate_scan(
    profile: &GaussianProfile,
    sine: &SinusoidFit,
    conversion: f64,
) -> Result<f64> {
    if sine.amplitude == 0.0 {
        return Ok(0.0);
    }
    let hi = profile.invert(sine.offset + sine.amplitude)?;
    let lo = profile.invert(sine.offset - sine.amplitude)?;
    Ok(conversion * 0.5 * (hi - lo).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::stream_rng;
    use approx::assert_relative_eq;
    use rand_distr::{Binomial, Distribution};

    #[test]
    fn two_points_give_exact_line() {
        let f = voltage_position_fit(&[1.0, 3.0], &[0.0, 1.0]).unwrap();
        assert_relative_eq!(f.slope, 2.0, max_relative = 1e-14);
        assert_relative_eq!(f.intercept, 1.0, max_relative = 1e-14);
        assert!(voltage_position_fit(&[1.0, 3.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn gradient_ignores_voltage_offset() {
        let v = [4.0, 3.1, 2.5, 1.0];
        let z = [0.0, 2.0, 3.9, 8.1];
        let a = voltage_position_fit(&z, &v).unwrap();
        let shifted: Vec<f64> = v.iter().map(|x| x + 7.5).collect();
        let b = voltage_position_fit(&z, &shifted).unwrap();
        assert_relative_eq!(a.slope, b.slope, max_relative = 1e-12);
    }

    #[test]
    fn profile_inversion_round_trip() {
        let g = GaussianProfile {
            p0: 0.9,
            f0: 80e6,
            tau: 0.3e6,
        };
        let f = 80.25e6;
        assert_relative_eq!(g.invert(g.eval(f)).unwrap(), f, max_relative = 1e-12);
        assert!(matches!(g.invert(0.95), Err(Error::Domain(_))));
        assert!(matches!(g.invert(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_modulation_gives_zero_amplitude() {
        let g = GaussianProfile {
            p0: 0.9,
            f0: 80e6,
            tau: 0.3e6,
        };
        let s = SinusoidFit {
            amplitude: 0.0,
            offset: 0.5,
            phase: 0.0,
        };
        assert_eq!(
            amplitude_from_darkstate_scan(&g, &s, 3.03e-12).unwrap(),
            0.0
        );
    }

    #[test]
    fn synthetic_scan_round_trip() {
        // Beam profile scan, then the ion oscillates on the flank.
        let truth = GaussianProfile {
            p0: 0.85,
            f0: 75e6,
            tau: 0.35e6,
        };
        let conversion = 3.03e-12; // m/Hz, i.e. 3.03 µm/MHz
        let a_com = 0.1e-6;
        let omega = crate::TWO_PI * 358e3;
        let shots = 2000;
        let mut rng = stream_rng(11, 0);
        let mut sample =
            |p: f64| Binomial::new(shots, p).unwrap().sample(&mut rng) as f64 / shots as f64;

        let freqs: Vec<f64> = (0..41).map(|k| 74e6 + k as f64 * 0.05e6).collect();
        let p: Vec<f64> = freqs.iter().map(|&f| sample(truth.eval(f))).collect();
        let profile = fit_dark_state_profile(&freqs, &p).unwrap();
        assert!((profile.f0 - truth.f0).abs() < 0.02e6);

        let flank = truth.f0 + truth.tau;
        let delays: Vec<f64> = (0..200).map(|k| k as f64 * 0.05e-6).collect();
        let pd: Vec<f64> = delays
            .iter()
            .map(|&t| sample(truth.eval(flank + a_com / conversion * (omega * t).sin())))
            .collect();
        let sine = fit_sinusoid(&delays, &pd, omega).unwrap();
        let recovered = amplitude_from_darkstate_scan(&profile, &sine, conversion).unwrap();
        assert!(
            (recovered / a_com - 1.0).abs() < 0.05,
            "recovered {recovered:e}"
        );
    }

    #[test]
    fn sinusoid_fit_is_exact_on_clean_data() {
        let w = 2.0;
        let t: Vec<f64> = (0..20).map(|k| k as f64 * 0.37).collect();
        let y: Vec<f64> = t.iter().map(|&x| 0.4 + 0.1 * (w * x + 0.3).sin()).collect();
        let s = fit_sinusoid(&t, &y, w).unwrap();
        assert_relative_eq!(s.amplitude, 0.1, max_relative = 1e-10);
        assert_relative_eq!(s.offset, 0.4, max_relative = 1e-10);
        assert_relative_eq!(s.phase, 0.3, max_relative = 1e-9);
    }
}
