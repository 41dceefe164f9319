//! Ion-qubit phase evolution: Zeeman sensitivities, phase accumulated while
//! the string is shuttled through a field gradient, Gaussian dephasing and
//! Ramsey-contrast fitting.
//!
//! The ion qubit is `{|D′⟩, |D⟩}` = `{D5/2 m=−3/2, D5/2 m=−5/2}`, prepared by
//! 729 nm transitions from `S1/2 m=−1/2`.

use std::io::Write;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::ensure;
use crate::numerics::{levenberg_marquardt, LmOptions};
use crate::tomography::state::{c, kron, pauli, TwoQubitState};
use crate::{Error, PhysicalConstants, Result, TWO_PI};

pub const G_S12: f64 = 2.0;
pub const G_D52: f64 = 6.0 / 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transition {
    /// `S(−1/2) → D(−5/2)`.
    SToD,
    /// `S(−1/2) → D′(−3/2)`.
    SToDPrime,
    /// `D(−5/2) → D′(−3/2)`, the qubit splitting.
    DToDPrime,
}

impl Transition {
    /// `(g₁, m₁, g₂, m₂)` of the lower and upper level.
    fn levels(self) -> (f64, f64, f64, f64) {
        match self {
            Transition::SToD => (G_S12, -0.5, G_D52, -2.5),
            Transition::SToDPrime => (G_S12, -0.5, G_D52, -1.5),
            Transition::DToDPrime => (G_D52, -2.5, G_D52, -1.5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeemanSensitivity {
    pub transition: Transition,
    /// Linear Zeeman coefficient `(m₂g₂ − m₁g₁) µ_B/h` (Hz/G).
    pub hz_per_gauss: f64,
}

impl ZeemanSensitivity {
    pub fn new(transition: Transition, constants: &PhysicalConstants) -> Self {
        let (g1, m1, g2, m2) = transition.levels();
        Self {
            transition,
            hz_per_gauss: (m2 * g2 - m1 * g1) * constants.bohr_magneton_hz_per_gauss(),
        }
    }
}

/// Linear Zeeman shift (Hz) at field `gauss`.
pub fn zeeman_frequency(sensitivity: &ZeemanSensitivity, gauss: f64) -> f64 {
    sensitivity.hz_per_gauss * gauss
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldModel {
    /// Gradient along the string axis (G/m).
    pub gradient: f64,
    /// Error of the field assumed when setting the laser frequencies (G).
    pub miscalibration: f64,
}

impl FieldModel {
    pub fn reference() -> Self {
        Self {
            gradient: 4.4,
            miscalibration: 48e-6,
        }
    }
}

/// Trap-centre positions visited during the photon-generation sequence and
/// the time spent at each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuttleSchedule {
    /// Trap centre `X_n` when ion `n` sits in the cavity waist (m).
    pub trap_centres: Vec<f64>,
    /// Dwell at the first position before moving on (s).
    pub initial_dwell: f64,
    /// Dwell at every later position (s).
    pub dwell: f64,
    /// Time back at the first position at the end (s).
    pub final_dwell: f64,
    /// Share of each move booked to the arrival position (s); the Raman
    /// pulse of ion `n ≥ 2` starts this long after arrival.
    pub transport: f64,
}

impl ShuttleSchedule {
    /// Schedule for a string whose ions sit at `ion_offsets` (m) from its
    /// centre: ion `n` is in the waist (at 0) when the centre is at `−u_n`.
    pub fn for_string(ion_offsets: &[f64]) -> Self {
        Self {
            trap_centres: ion_offsets.iter().map(|u| -u).collect(),
            initial_dwell: 126e-6,
            dwell: 156e-6,
            final_dwell: 30e-6,
            transport: 30e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(!self.trap_centres.is_empty(), || {
            "schedule needs at least one position".into()
        })?;
        ensure(
            [self.initial_dwell, self.dwell, self.final_dwell]
                .iter()
                .all(|t| *t > 0.0),
            || "dwell times must be positive".into(),
        )?;
        ensure(self.transport >= 0.0 && self.transport < self.dwell, || {
            "transport share must fit in a dwell".into()
        })
    }

    /// `(position index, start, end)` for every dwell segment in order.
    pub fn segments(&self) -> Vec<(usize, f64, f64)> {
        let mut out = Vec::with_capacity(self.trap_centres.len() + 1);
        let mut t = 0.0;
        out.push((0, t, self.initial_dwell));
        t += self.initial_dwell;
        for k in 1..self.trap_centres.len() {
            out.push((k, t, t + self.dwell));
            t += self.dwell;
        }
        out.push((0, t, t + self.final_dwell));
        out
    }

    /// Start of ion `n`'s Raman pulse (s from sequence start).
    pub fn pulse_start(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.segments()[n].1 + self.transport
        }
    }

    /// Photon-generation times of every ion relative to ion 1.
    pub fn generation_times(&self) -> Vec<f64> {
        (0..self.trap_centres.len())
            .map(|n| self.pulse_start(n))
            .collect()
    }

    pub fn total_duration(&self) -> f64 {
        self.segments().last().map_or(0.0, |s| s.2)
    }

    /// Scales every dwell (and the transport share) by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            trap_centres: self.trap_centres.clone(),
            initial_dwell: self.initial_dwell * factor,
            dwell: self.dwell * factor,
            final_dwell: self.final_dwell * factor,
            transport: self.transport * factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseAngles {
    pub unwrapped: Vec<f64>,
    /// Wrapped to (−π, π].
    pub wrapped: Vec<f64>,
}

impl PhaseAngles {
    fn from_unwrapped(unwrapped: Vec<f64>) -> Self {
        let wrapped = unwrapped.iter().map(|&a| wrap_angle(a)).collect();
        Self { unwrapped, wrapped }
    }

    /// Adds a global offset to every angle.
    pub fn with_offset(&self, offset: f64) -> Self {
        Self::from_unwrapped(self.unwrapped.iter().map(|a| a + offset).collect())
    }

    /// Writes `ion_index,angle_rad` rows (wrapped angles).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_indexed_csv(writer, "angle_rad", &self.wrapped)
    }
}

pub(crate) fn write_indexed_csv<W: Write>(writer: W, column: &str, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["ion_index", column])?;
    for (k, v) in values.iter().enumerate() {
        w.write_record([(k + 1).to_string(), format!("{v:.10}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Maps an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TWO_PI);
    if r > std::f64::consts::PI {
        r - TWO_PI
    } else {
        r
    }
}

/// Phase of `(|D⟩ + |D′⟩)/√2` accumulated by each ion from its Raman pulse
/// to the end of the sequence, `Σ_k 2π t_k Δf_k`. The detuning of the
/// qubit from the laser-defined reference at dwell `k` is
/// `Δf = f_{D→D′}·(B_grad·x + B_mis)` with `x` the ion's position relative
/// to the string centre at the first trap position. The angle is that of
/// the equivalent ion-qubit rotation `U_z(φ)`.
pub fn accumulate_phases(
    schedule: &ShuttleSchedule,
    field: &FieldModel,
    ion_offsets: &[f64],
    sensitivity: &ZeemanSensitivity,
) -> Result<PhaseAngles> {
    schedule.validate()?;
    ensure(ion_offsets.len() == schedule.trap_centres.len(), || {
        "one trap position per ion is required".into()
    })?;
    let origin = schedule.trap_centres[0];
    let segments = schedule.segments();
    let angles = (0..ion_offsets.len())
        .map(|n| {
            let start = schedule.pulse_start(n);
            segments
                .iter()
                .map(|&(k, t0, t1)| {
                    let dt = (t1 - start.max(t0)).max(0.0);
                    let x = schedule.trap_centres[k] + ion_offsets[n] - origin;
                    let gauss = field.gradient * x + field.miscalibration;
                    TWO_PI * dt * zeeman_frequency(sensitivity, gauss)
                })
                .sum()
        })
        .collect();
    Ok(PhaseAngles::from_unwrapped(angles))
}

/// `p(t) = exp(−t²/2σ²)`.
pub fn coherence_factor(t: f64, sigma: f64) -> f64 {
    (-(t * t) / (2.0 * sigma * sigma)).exp()
}

/// Phase-flip channel on the ion qubit:
/// `E(ρ) = ½(1 + p)ρ + ½(1 − p)(Z⊗I)ρ(Z⊗I)`.
pub fn dephase(state: &TwoQubitState, t: f64, sigma: f64) -> Result<TwoQubitState> {
    ensure(sigma > 0.0, || "σ must be positive".into())?;
    let p = coherence_factor(t, sigma);
    let z: Matrix4<_> = kron(&pauli(3), &pauli(0));
    let flipped = z * state.rho * z;
    Ok(TwoQubitState::from_unchecked(
        state.rho * c(0.5 * (1.0 + p), 0.0) + flipped * c(0.5 * (1.0 - p), 0.0),
    ))
}

/// Bell fidelity `⟨ψ(0)|E(ρ_last, |t − t_ref|)|ψ(0)⟩` for every storage time,
/// where `ρ_last` is the state of the last ion.
pub fn fidelity_vs_ion_index(
    last: &TwoQubitState,
    storage_times: &[f64],
    reference_time: f64,
    sigma: f64,
) -> Result<Vec<f64>> {
    let target = TwoQubitState::bell_vector(0.0);
    storage_times
        .iter()
        .map(|&t| Ok(dephase(last, (t - reference_time).abs(), sigma)?.overlap(&target)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyFit {
    pub sigma: f64,
    pub sigma_stderr: f64,
}

/// Least-squares fit of `p(t) = exp(−t²/2σ²)` to Ramsey contrasts.
pub fn ramsey_contrast_fit(times: &[f64], contrasts: &[f64]) -> Result<RamseyFit> {
    ensure(times.len() == contrasts.len() && times.len() >= 3, || {
        "need ≥ 3 matching points".into()
    })?;
    ensure(contrasts.iter().all(|c| (0.0..=1.0).contains(c)), || {
        "contrasts must lie in [0, 1]".into()
    })?;
    let scale = times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if scale == 0.0 {
        return Err(Error::FitFailure("all times are zero".into()));
    }
    // Initial guess from the point closest to 1/e.
    let guess = times
        .iter()
        .zip(contrasts)
        .filter(|(t, c)| **t > 0.0 && **c > 0.0 && **c < 1.0)
        .map(|(t, c)| t / (-2.0 * c.ln()).sqrt() / scale)
        .fold(None, |acc: Option<f64>, s| {
            Some(acc.map_or(s, |a| a.min(s)))
        })
        .unwrap_or(1.0);
    let fit = levenberg_marquardt(
        |q: &[f64], r: &mut [f64]| {
            for (k, (&t, &y)) in times.iter().zip(contrasts).enumerate() {
                r[k] = coherence_factor(t / scale, q[0]) - y;
            }
        },
        &[guess],
        times.len(),
        &LmOptions::default(),
    )?;
    let sigma = fit.params[0].abs() * scale;
    if !sigma.is_finite() || sigma == 0.0 {
        return Err(Error::FitFailure("Ramsey fit did not converge".into()));
    }
    Ok(RamseyFit {
        sigma,
        sigma_stderr: fit.stderr[0] * scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::stream_rng;
    use crate::tomography::state::MaxNorm;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand_distr::{Binomial, Distribution};

    fn offsets() -> Vec<f64> {
        use crate::mechanics::{equilibrium_positions, TrapConfiguration};
        equilibrium_positions(
            &TrapConfiguration::ten_ion(),
            &PhysicalConstants::calcium40(),
        )
        .unwrap()
        .positions
    }

    #[test]
    fn zeeman_coefficients() {
        let k = PhysicalConstants::calcium40();
        let sd = ZeemanSensitivity::new(Transition::SToD, &k);
        let sdp = ZeemanSensitivity::new(Transition::SToDPrime, &k);
        let q = ZeemanSensitivity::new(Transition::DToDPrime, &k);
        assert_relative_eq!(
            sd.hz_per_gauss,
            -2.0 * k.bohr_magneton_hz_per_gauss(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            q.hz_per_gauss,
            sdp.hz_per_gauss - sd.hz_per_gauss,
            max_relative = 1e-12
        );
        assert_eq!(zeeman_frequency(&q, 0.0), 0.0);
        // 48 µG on the qubit transition is about 81 Hz.
        assert!((zeeman_frequency(&q, 48e-6) - 81.0).abs() < 1.0);
        // 25 µG on S→D′ is close to 27 Hz; the standard g-factors give 28 Hz.
        let f = zeeman_frequency(&sdp, 25e-6).abs();
        assert!((f - 27.0).abs() / 27.0 < 0.05);
    }

    #[test]
    fn gradient_times_separation() {
        assert!((4.4f64 * 5.74e-6 - 25.3e-6).abs() < 0.1e-6);
    }

    #[test]
    fn schedule_timing() {
        let s = ShuttleSchedule::for_string(&offsets());
        let t = s.generation_times();
        assert_eq!(t[0], 0.0);
        for n in 1..10 {
            assert_relative_eq!(t[n], n as f64 * 156e-6, max_relative = 1e-12);
        }
        assert_relative_eq!(
            s.total_duration(),
            126e-6 + 9.0 * 156e-6 + 30e-6,
            max_relative = 1e-12
        );
    }

    #[test]
    fn no_field_no_phase() {
        let u = offsets();
        let s = ShuttleSchedule::for_string(&u);
        let q = ZeemanSensitivity::new(Transition::DToDPrime, &PhysicalConstants::calcium40());
        let a = accumulate_phases(
            &s,
            &FieldModel {
                gradient: 0.0,
                miscalibration: 0.0,
            },
            &u,
            &q,
        )
        .unwrap();
        assert!(a.unwrapped.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn reference_field_gives_monotone_angles() {
        let u = offsets();
        let s = ShuttleSchedule::for_string(&u);
        let q = ZeemanSensitivity::new(Transition::DToDPrime, &PhysicalConstants::calcium40());
        let a = accumulate_phases(&s, &FieldModel::reference(), &u, &q).unwrap();
        let d: Vec<f64> = a.unwrapped.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(d.iter().all(|&x| x > 0.0) || d.iter().all(|&x| x < 0.0));
    }

    #[test]
    fn doubling_dwell_doubles_angles() {
        let u = offsets();
        let s = ShuttleSchedule::for_string(&u);
        let q = ZeemanSensitivity::new(Transition::DToDPrime, &PhysicalConstants::calcium40());
        let f = FieldModel::reference();
        let a = accumulate_phases(&s, &f, &u, &q).unwrap();
        let b = accumulate_phases(&s.scaled(2.0), &f, &u, &q).unwrap();
        for (x, y) in a.unwrapped.iter().zip(&b.unwrapped) {
            assert_relative_eq!(2.0 * x, *y, max_relative = 1e-12);
        }
    }

    #[test]
    fn equal_dwell_differences_ignore_miscalibration() {
        let u = offsets();
        let mut s = ShuttleSchedule::for_string(&u);
        s.initial_dwell = s.dwell;
        s.transport = 0.0;
        let q = ZeemanSensitivity::new(Transition::DToDPrime, &PhysicalConstants::calcium40());
        let grad = accumulate_phases(
            &s,
            &FieldModel {
                gradient: 4.4,
                miscalibration: 0.0,
            },
            &u,
            &q,
        )
        .unwrap();
        let both = accumulate_phases(
            &s,
            &FieldModel {
                gradient: 4.4,
                miscalibration: 48e-6,
            },
            &u,
            &q,
        )
        .unwrap();
        let mis = accumulate_phases(
            &s,
            &FieldModel {
                gradient: 0.0,
                miscalibration: 48e-6,
            },
            &u,
            &q,
        )
        .unwrap();
        for n in 0..10 {
            assert_relative_eq!(
                both.unwrapped[n],
                grad.unwrapped[n] + mis.unwrapped[n],
                max_relative = 1e-10
            );
        }
        // Successive ions lose exactly one dwell of miscalibration phase.
        let d: Vec<f64> = mis.unwrapped.windows(2).map(|w| w[0] - w[1]).collect();
        for x in &d {
            assert_relative_eq!(*x, d[0], max_relative = 1e-10);
        }
    }

    #[test]
    fn dephasing_examples() {
        let b = TwoQubitState::bell(0.0);
        assert!((dephase(&b, 0.0, 5.5e-3).unwrap().rho - b.rho).max_norm() < 1e-15);
        let late = dephase(&b, 1.0, 5.5e-3).unwrap();
        assert!(late.rho[(0, 3)].norm() < 1e-12);
        let f = dephase(&b, 1.4e-3, 5.5e-3)
            .unwrap()
            .overlap(&TwoQubitState::bell_vector(0.0));
        let p = (-(1.4f64 * 1.4) / (2.0 * 5.5 * 5.5)).exp();
        assert_relative_eq!(f, 0.5 * (1.0 + p), max_relative = 1e-12);
        assert!((f - 0.984).abs() < 0.001);
    }

    #[test]
    fn fidelity_profile() {
        let b = TwoQubitState::bell(0.0);
        let times: Vec<f64> = (0..10).map(|n| n as f64 * 156e-6).collect();
        let f = fidelity_vs_ion_index(&b, &times, 1.4e-3, 5.5e-3).unwrap();
        let drop = f[9] - f[0];
        assert!((drop - 0.016).abs() < 0.001);
        let flat = fidelity_vs_ion_index(&b, &times, 1.4e-3, 1e9).unwrap();
        assert!(flat.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn ramsey_fit_round_trips() {
        let t: Vec<f64> = (0..12).map(|k| k as f64 * 1e-3).collect();
        let c: Vec<f64> = t.iter().map(|&x| coherence_factor(x, 5.5e-3)).collect();
        assert_eq!(c[0], 1.0);
        let fit = ramsey_contrast_fit(&t, &c).unwrap();
        assert!((fit.sigma - 5.5e-3).abs() < 1e-9);
    }

    #[test]
    fn noisy_ramsey_fit() {
        let t: Vec<f64> = (0..12).map(|k| k as f64 * 1e-3).collect();
        let mut rng = stream_rng(5, 0);
        let c: Vec<f64> = t
            .iter()
            .map(|&x| {
                let p_bright = 0.5 * (1.0 + coherence_factor(x, 5.5e-3));
                let k = Binomial::new(100, p_bright).unwrap().sample(&mut rng) as f64;
                (2.0 * k / 100.0 - 1.0).clamp(0.0, 1.0)
            })
            .collect();
        let fit = ramsey_contrast_fit(&t, &c).unwrap();
        assert!((fit.sigma / 5.5e-3 - 1.0).abs() < 0.1);
    }

    proptest! {
        #[test]
        fn channel_is_trace_preserving_and_positive(
            re in proptest::collection::vec(-1.0f64..1.0, 16),
            im in proptest::collection::vec(-1.0f64..1.0, 16),
            t1 in 0.0f64..0.02, t2 in 0.0f64..0.02,
        ) {
            // Random physical state from A A†.
            let a = Matrix4::from_fn(|r, k| c(re[4 * r + k], im[4 * r + k]));
            let m = a * a.adjoint();
            let rho = TwoQubitState::from_unchecked(m / m.trace());
            let sigma = 5.5e-3;
            let e1 = dephase(&rho, t1, sigma).unwrap();
            prop_assert!((e1.trace() - 1.0).abs() < 1e-12);
            prop_assert!(e1.eigenvalues()[0] >= -1e-10);
            let e12 = dephase(&e1, t2, sigma).unwrap();
            let factor = coherence_factor(t1, sigma) * coherence_factor(t2, sigma);
            let expected = rho.rho[(0, 2)] * c(factor, 0.0);
            prop_assert!((e12.rho[(0, 2)] - expected).norm() < 1e-12);
        }

        #[test]
        fn phases_are_linear_in_the_field(g in -10.0f64..10.0, b in -1e-4f64..1e-4) {
            let u = [-3e-6, 0.0, 3e-6];
            let s = ShuttleSchedule::for_string(&u);
            let q = ZeemanSensitivity::new(Transition::DToDPrime, &PhysicalConstants::calcium40());
            let both = accumulate_phases(&s, &FieldModel { gradient: g, miscalibration: b }, &u, &q).unwrap();
            let gg = accumulate_phases(&s, &FieldModel { gradient: g, miscalibration: 0.0 }, &u, &q).unwrap();
            let bb = accumulate_phases(&s, &FieldModel { gradient: 0.0, miscalibration: b }, &u, &q).unwrap();
            for n in 0..3 {
                prop_assert!((both.unwrapped[n] - gg.unwrapped[n] - bb.unwrapped[n]).abs() < 1e-9);
            }
        }
    }
}
