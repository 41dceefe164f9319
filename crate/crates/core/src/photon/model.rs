//! Effective Λ-system model of cavity-mediated Raman photon generation.
//!
//! Basis: `|0⟩ = |S, 0⟩`, `|1⟩ = |D, 1_H⟩`, `|2⟩ = |D′, 1_V⟩` plus three sink
//! states: `|D, 0⟩` and `|D′, 0⟩` reached by cavity decay (rate 2κ each) and a
//! lost state reached by spontaneous scattering (rate Γ_L). In the rotating
//! frame
//!
//! ```text
//! H = δ_S(t)|0⟩⟨0| + δ_c(|1⟩⟨1| + |2⟩⟨2|) + Σ_b g_b(t)(|0⟩⟨b| + |b⟩⟨0|)
//! δ_S = S₀(exp(−2z²/σ²) − 1),   S₀ = Ω²/(4Δ)
//! g_b = s·g(z)·Ω_r exp(−z²/σ²)/(2Δ)/√2
//! Γ_L = Γ_eff·Ω² exp(−2z²/σ²)/(4Δ²)
//! ```
//!
//! Every collapse operator maps the coherent block onto a sink that couples
//! to nothing, so the Lindblad equation splits exactly into a non-Hermitian
//! amplitude equation for `|0⟩,|1⟩,|2⟩` and rate equations for the sinks.
//! The integrator evolves that reduced form (nine real numbers).

use std::io::Write;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::cavity::{cavity_derived_params, transmission_from_escape, CAVITY_LENGTH};
use super::profile::{spatial_coupling, CavityGeometry, RamanBeam};
use crate::error::ensure;
use crate::numerics::{dormand_prince, DopriOptions};
use crate::{par, Error, Result, TWO_PI};

/// Relative change in P_c tolerated when the integrator tolerance is refined.
pub const CONVERGENCE_TOLERANCE: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonSourceModel {
    /// Peak ion-cavity coupling g (rad/s).
    pub g: f64,
    /// Cavity field decay rate κ (rad/s).
    pub kappa: f64,
    /// Effective scattering rate Γ_eff into states outside the Λ system (rad/s).
    pub loss_rate: f64,
    /// Dimensionless scale s on the effective Raman coupling.
    pub coupling_scale: f64,
    /// Standard deviation of the static cavity detuning per shot (rad/s).
    pub jitter: f64,
    pub escape_probability: f64,
    /// Raman pulse duration (s).
    pub pulse_duration: f64,
    /// Wavepacket bin width (s).
    pub bin_width: f64,
    /// Number of jitter realisations averaged when `jitter > 0`.
    pub jitter_shots: usize,
    /// Number of phase samples used to average a slow ripple.
    pub ripple_phases: usize,
    pub rtol: f64,
    /// Re-run one trajectory at a 32× tighter tolerance and fail if P_c moves
    /// by more than [`CONVERGENCE_TOLERANCE`].
    pub check_convergence: bool,
}

impl Default for PhotonSourceModel {
    fn default() -> Self {
        let t2 = transmission_from_escape(54e3, 0.78);
        let cavity = cavity_derived_params(30e3, CAVITY_LENGTH, t2)
            .expect("reference cavity rows are physical");
        Self {
            g: TWO_PI * 1.53e6,
            kappa: cavity.kappa,
            // P3/2 linewidth times the branching fraction into the D manifold.
            loss_rate: TWO_PI * 23.1e6 * 0.065,
            coupling_scale: 0.33,
            jitter: TWO_PI * 10e3,
            escape_probability: cavity.escape_probability,
            pulse_duration: 80e-6,
            bin_width: 0.2e-6,
            jitter_shots: 24,
            ripple_phases: 16,
            rtol: 1e-7,
            check_convergence: true,
        }
    }
}

impl PhotonSourceModel {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            self.g,
            self.kappa,
            self.loss_rate,
            self.coupling_scale,
            self.jitter,
        ];
        ensure(rates.iter().all(|r| r.is_finite() && *r >= 0.0), || {
            "rates must be non-negative".into()
        })?;
        ensure((0.0..=1.0).contains(&self.escape_probability), || {
            format!(
                "escape probability {} outside [0, 1]",
                self.escape_probability
            )
        })?;
        ensure(self.pulse_duration > 0.0, || {
            "pulse duration must be positive".into()
        })?;
        ensure(
            self.bin_width > 0.0 && self.bin_width <= self.pulse_duration,
            || "bin width must be positive and no longer than the pulse".into(),
        )?;
        ensure(self.jitter_shots >= 1 && self.ripple_phases >= 1, || {
            "sample counts must be ≥ 1".into()
        })?;
        ensure(self.rtol > 0.0, || {
            "integrator tolerance must be positive".into()
        })
    }

    pub fn bin_count(&self) -> usize {
        (self.pulse_duration / self.bin_width).round() as usize
    }
}

/// Per-ion drive conditions during its Raman pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IonDriveContext {
    /// Thermally reduced Rabi frequency as a fraction of Ω.
    pub rabi_fraction: f64,
    /// Static displacement from the Raman beam centre (m).
    pub z0: f64,
    /// Coherent axial oscillation amplitude (m).
    pub a_com: f64,
    /// Axial COM angular frequency (rad/s).
    pub omega_z: f64,
    /// Amplitude of a slow (quasi-static) positional ripple (m).
    pub a_ripple: f64,
}

impl Default for IonDriveContext {
    fn default() -> Self {
        Self {
            rabi_fraction: 1.0,
            z0: 0.0,
            a_com: 0.0,
            omega_z: TWO_PI * 358e3,
            a_ripple: 0.0,
        }
    }
}

impl IonDriveContext {
    pub fn with_rabi_fraction(rabi_fraction: f64) -> Self {
        Self {
            rabi_fraction,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.rabi_fraction >= 0.0 && self.rabi_fraction.is_finite(),
            || "Rabi fraction must be non-negative".into(),
        )?;
        ensure(self.a_com >= 0.0 && self.a_ripple >= 0.0, || {
            "amplitudes must be non-negative".into()
        })?;
        ensure(self.omega_z > 0.0, || {
            "axial frequency must be positive".into()
        })?;
        ensure(self.z0.is_finite(), || "displacement must be finite".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wavepacket {
    /// Bin width (s); bin `k` covers `[k·w, (k+1)·w)` from the pulse start.
    pub bin_width: f64,
    /// Emission probability density per bin (1/s).
    pub density: Vec<f64>,
    /// Probability that a photon leaves the cavity through the output mirror.
    pub probability: f64,
}

impl Wavepacket {
    pub fn bin_starts(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.density.len()).map(move |k| k as f64 * self.bin_width)
    }

    /// Σ density·width, equal to `probability` up to rounding.
    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width
    }

    /// Index of the bin with the largest density.
    pub fn peak_bin(&self) -> usize {
        self.density
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            })
            .0
    }

    /// Cumulative emission probability at the end of every bin.
    pub fn cumulative(&self) -> Vec<f64> {
        self.density
            .iter()
            .scan(0.0, |acc, d| {
                *acc += d * self.bin_width;
                Some(*acc)
            })
            .collect()
    }
}

/// Writes `time_us,density_per_us` rows (bin start times).
pub fn write_wavepacket_csv<W: Write>(wp: &Wavepacket, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["time_us", "density_per_us"])?;
    for (t, d) in wp.bin_starts().zip(&wp.density) {
        w.write_record([format!("{:.1}", t * 1e6), format!("{:.9e}", d * 1e-6)])?;
    }
    w.flush()?;
    Ok(())
}

/// Integrates one realisation (fixed ripple offset and cavity detuning) and
/// returns the cumulative output-mode emission probability at every bin edge.
pub fn emission_trace(
    model: &PhotonSourceModel,
    ctx: &IonDriveContext,
    geom: &CavityGeometry,
    beam: &RamanBeam,
    z_offset: f64,
    cavity_detuning: f64,
    rtol: f64,
) -> Result<Vec<f64>> {
    let bins = model.bin_count();
    if ctx.rabi_fraction == 0.0 || model.g == 0.0 || model.coupling_scale == 0.0 {
        return Ok(vec![0.0; bins + 1]);
    }
    // Time in µs, rates in rad/µs.
    let us = 1e-6;
    let stark = beam.rabi * beam.rabi / (4.0 * beam.detuning) * us;
    let coupling_peak = model.coupling_scale * beam.rabi * ctx.rabi_fraction
        / (2.0 * beam.detuning)
        / std::f64::consts::SQRT_2;
    let loss_peak = model.loss_rate * (beam.rabi / (2.0 * beam.detuning)).powi(2) * us;
    let kappa = model.kappa * us;
    let dc = cavity_detuning * us;
    let omega_z = ctx.omega_z * us;
    let (a_com, z0) = (ctx.a_com, z_offset);
    let g_max = model.g;
    let sigma2 = beam.sigma * beam.sigma;

    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
        let z = a_com * (omega_z * t).sin() + z0;
        let (_, gz) = spatial_coupling(z, &RamanBeam { rabi: 1.0, ..*beam }, geom, g_max);
        let raman = (-(z * z) / sigma2).exp();
        let gb = coupling_peak * gz * raman * us;
        let delta_s = stark * (raman * raman - 1.0);
        let gamma = loss_peak * raman * raman;
        let (r0, i0, r1, i1, r2, i2) = (y[0], y[1], y[2], y[3], y[4], y[5]);
        // dc/dt = −i H c − (decay/2) c, written out in real and imaginary parts.
        dy[0] = delta_s * i0 + gb * (i1 + i2) - 0.5 * gamma * r0;
        dy[1] = -delta_s * r0 - gb * (r1 + r2) - 0.5 * gamma * i0;
        dy[2] = gb * i0 + dc * i1 - kappa * r1;
        dy[3] = -gb * r0 - dc * r1 - kappa * i1;
        dy[4] = gb * i0 + dc * i2 - kappa * r2;
        dy[5] = -gb * r0 - dc * r2 - kappa * i2;
        dy[6] = 2.0 * kappa * (r1 * r1 + i1 * i1);
        dy[7] = 2.0 * kappa * (r2 * r2 + i2 * i2);
        dy[8] = gamma * (r0 * r0 + i0 * i0);
    };

    let width = model.bin_width / us;
    let checkpoints: Vec<f64> = (0..=bins).map(|k| k as f64 * width).collect();
    let opts = DopriOptions {
        rtol,
        atol: rtol * 1e-4,
        ..DopriOptions::default()
    };
    let mut y0 = [0.0; 9];
    y0[0] = 1.0;
    let (states, _) = dormand_prince(rhs, 0.0, &y0, &checkpoints, &opts)?;
    Ok(states
        .iter()
        .map(|s| model.escape_probability * (s[6] + s[7]))
        .collect())
}

fn ripple_offsets(model: &PhotonSourceModel, ctx: &IonDriveContext) -> Vec<f64> {
    if ctx.a_ripple == 0.0 {
        return vec![ctx.z0];
    }
    let n = model.ripple_phases;
    (0..n)
        .map(|k| ctx.z0 + ctx.a_ripple * (TWO_PI * (k as f64 + 0.5) / n as f64).sin())
        .collect()
}

fn jitter_samples(model: &PhotonSourceModel, seed: u64) -> Result<Vec<f64>> {
    if model.jitter == 0.0 {
        return Ok(vec![0.0]);
    }
    let normal = Normal::new(0.0, model.jitter).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok((0..model.jitter_shots)
        .map(|k| normal.sample(&mut par::stream_rng(seed, k as u64)))
        .collect())
}

/// Wavepacket and cavity-exit probability for one ion, averaged over cavity
/// jitter realisations and slow-ripple phases.
pub fn simulate_photon_generation(
    model: &PhotonSourceModel,
    ctx: &IonDriveContext,
    geom: &CavityGeometry,
    beam: &RamanBeam,
    seed: u64,
) -> Result<Wavepacket> {
    model.validate()?;
    ctx.validate()?;
    ensure(
        beam.detuning > 0.0 && beam.sigma > 0.0 && beam.rabi >= 0.0,
        || "Raman beam needs positive detuning and width".into(),
    )?;
    let offsets = ripple_offsets(model, ctx);
    let detunings = jitter_samples(model, seed)?;
    let tasks: Vec<(f64, f64)> = offsets
        .iter()
        .flat_map(|&z| detunings.iter().map(move |&d| (z, d)))
        .collect();
    let traces = par::try_map_range(tasks.len(), |k| {
        emission_trace(model, ctx, geom, beam, tasks[k].0, tasks[k].1, model.rtol)
    })?;

    if model.check_convergence {
        let nominal = traces[0][traces[0].len() - 1];
        let refined = emission_trace(
            model,
            ctx,
            geom,
            beam,
            tasks[0].0,
            tasks[0].1,
            model.rtol / 32.0,
        )?;
        let refined = refined[refined.len() - 1];
        if refined > 1e-12 && ((nominal - refined) / refined).abs() > CONVERGENCE_TOLERANCE {
            return Err(Error::Convergence(format!(
                "P_c changed from {nominal:.6} to {refined:.6} on refinement"
            )));
        }
    }

    let bins = model.bin_count();
    let mut mean = vec![0.0; bins + 1];
    for trace in &traces {
        for (m, v) in mean.iter_mut().zip(trace) {
            *m += v / traces.len() as f64;
        }
    }
    let density = mean
        .windows(2)
        .map(|w| (w[1] - w[0]).max(0.0) / model.bin_width)
        .collect();
    Ok(Wavepacket {
        bin_width: model.bin_width,
        density,
        probability: mean[bins],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Complex, DMatrix};

    fn quick_model() -> PhotonSourceModel {
        PhotonSourceModel {
            jitter: 0.0,
            check_convergence: false,
            ..PhotonSourceModel::default()
        }
    }

    #[test]
    fn zero_rabi_frequency_emits_nothing() {
        let wp = simulate_photon_generation(
            &quick_model(),
            &IonDriveContext::with_rabi_fraction(0.0),
            &CavityGeometry::default(),
            &RamanBeam::default(),
            1,
        )
        .unwrap();
        assert_eq!(wp.probability, 0.0);
        assert!(wp.density.iter().all(|&d| d == 0.0));
        assert_eq!(wp.density.len(), 400);
    }

    #[test]
    fn wavepacket_integrates_to_exit_probability() {
        let m = PhotonSourceModel::default();
        let wp = simulate_photon_generation(
            &m,
            &IonDriveContext::default(),
            &CavityGeometry::default(),
            &RamanBeam::default(),
            3,
        )
        .unwrap();
        assert!(wp.probability > 0.1 && wp.probability <= m.escape_probability);
        assert_relative_eq!(wp.integral(), wp.probability, max_relative = 1e-6);
    }

    #[test]
    fn without_jitter_the_seed_is_irrelevant() {
        let m = quick_model();
        let (g, b) = (CavityGeometry::default(), RamanBeam::default());
        let ctx = IonDriveContext {
            a_com: 0.1e-6,
            ..IonDriveContext::default()
        };
        let a = simulate_photon_generation(&m, &ctx, &g, &b, 1).unwrap();
        let c = simulate_photon_generation(&m, &ctx, &g, &b, 99).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn probability_is_conserved_along_the_trajectory() {
        // Sum of coherent populations and sinks stays 1.
        let m = quick_model();
        let (g, b) = (CavityGeometry::default(), RamanBeam::default());
        let ctx = IonDriveContext {
            a_com: 0.2e-6,
            z0: 0.1e-6,
            ..IonDriveContext::default()
        };
        let trace = emission_trace(&m, &ctx, &g, &b, ctx.z0, 0.0, 1e-9).unwrap();
        assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(*trace.last().unwrap() <= m.escape_probability);
    }

    /// Independent oracle: integrate the full 6×6 Lindblad equation with a
    /// fixed-step RK4 and compare the output-mode probability.
    fn lindblad_reference(
        m: &PhotonSourceModel,
        rabi_fraction: f64,
        detuning_c: f64,
    ) -> (f64, f64, f64) {
        let beam = RamanBeam::default();
        let us = 1e-6;
        let gb = m.coupling_scale * m.g * beam.rabi * rabi_fraction
            / (2.0 * beam.detuning)
            / 2f64.sqrt()
            * us;
        let gamma = m.loss_rate * (beam.rabi / (2.0 * beam.detuning)).powi(2) * us;
        let kappa = m.kappa * us;
        let dc = detuning_c * us;
        let mut h = DMatrix::<Complex<f64>>::zeros(6, 6);
        h[(1, 1)] = Complex::new(dc, 0.0);
        h[(2, 2)] = Complex::new(dc, 0.0);
        for b in [1, 2] {
            h[(0, b)] = Complex::new(gb, 0.0);
            h[(b, 0)] = Complex::new(gb, 0.0);
        }
        let mut jumps = Vec::new();
        for (from, to, rate) in [(1, 3, 2.0 * kappa), (2, 4, 2.0 * kappa), (0, 5, gamma)] {
            let mut l = DMatrix::<Complex<f64>>::zeros(6, 6);
            l[(to, from)] = Complex::new(rate.sqrt(), 0.0);
            jumps.push(l);
        }
        let i = Complex::new(0.0, 1.0);
        let deriv = |rho: &DMatrix<Complex<f64>>| {
            let mut d = (&h * rho - rho * &h) * (-i);
            for l in &jumps {
                let ld = l.adjoint();
                let ll = &ld * l;
                d += l * rho * &ld - (&ll * rho + rho * &ll) * Complex::new(0.5, 0.0);
            }
            d
        };
        let mut rho = DMatrix::<Complex<f64>>::zeros(6, 6);
        rho[(0, 0)] = Complex::new(1.0, 0.0);
        let dt = 0.005;
        let steps = (m.pulse_duration / us / dt).round() as usize;
        let mut min_pop = 0.0f64;
        let mut max_trace_err = 0.0f64;
        for _ in 0..steps {
            let k1 = deriv(&rho);
            let k2 = deriv(&(&rho + &k1 * Complex::new(dt / 2.0, 0.0)));
            let k3 = deriv(&(&rho + &k2 * Complex::new(dt / 2.0, 0.0)));
            let k4 = deriv(&(&rho + &k3 * Complex::new(dt, 0.0)));
            rho += (k1 + k2 * Complex::new(2.0, 0.0) + k3 * Complex::new(2.0, 0.0) + k4)
                * Complex::new(dt / 6.0, 0.0);
            let tr: f64 = (0..6).map(|k| rho[(k, k)].re).sum();
            max_trace_err = max_trace_err.max((tr - 1.0).abs());
            min_pop = min_pop.min((0..6).map(|k| rho[(k, k)].re).fold(f64::INFINITY, f64::min));
        }
        (
            m.escape_probability * (rho[(3, 3)].re + rho[(4, 4)].re),
            max_trace_err,
            min_pop,
        )
    }

    #[test]
    fn reduced_evolution_matches_full_lindblad_equation() {
        let m = quick_model();
        let (g, b) = (CavityGeometry::default(), RamanBeam::default());
        for &(frac, dc) in &[(1.0, 0.0), (0.8, TWO_PI * 15e3)] {
            let (reference, trace_err, min_pop) = lindblad_reference(&m, frac, dc);
            assert!(trace_err < 1e-8);
            assert!(min_pop > -1e-10);
            let trace = emission_trace(
                &m,
                &IonDriveContext::with_rabi_fraction(frac),
                &g,
                &b,
                0.0,
                dc,
                1e-10,
            )
            .unwrap();
            assert_relative_eq!(*trace.last().unwrap(), reference, max_relative = 1e-6);
        }
    }

    #[test]
    fn refinement_check_passes_at_default_tolerance() {
        let m = PhotonSourceModel {
            jitter: 0.0,
            ..PhotonSourceModel::default()
        };
        let ctx = IonDriveContext {
            a_com: 0.2e-6,
            z0: 0.2e-6,
            ..IonDriveContext::default()
        };
        simulate_photon_generation(
            &m,
            &ctx,
            &CavityGeometry::default(),
            &RamanBeam::default(),
            0,
        )
        .unwrap();
    }

    #[test]
    fn ripple_is_averaged_quasi_statically() {
        let m = quick_model();
        let (g, b) = (CavityGeometry::default(), RamanBeam::default());
        let base = IonDriveContext::default();
        let rippled = IonDriveContext {
            a_ripple: 0.1e-6,
            ..base
        };
        let static_at_amplitude = IonDriveContext { z0: 0.1e-6, ..base };
        let p0 = simulate_photon_generation(&m, &base, &g, &b, 0)
            .unwrap()
            .probability;
        let pr = simulate_photon_generation(&m, &rippled, &g, &b, 0)
            .unwrap()
            .probability;
        let ps = simulate_photon_generation(&m, &static_at_amplitude, &g, &b, 0)
            .unwrap()
            .probability;
        assert!(pr <= p0 && pr >= ps);
    }

    #[test]
    fn wavepacket_csv_layout() {
        let wp = Wavepacket {
            bin_width: 0.2e-6,
            density: vec![1e4, 2e4],
            probability: 0.006,
        };
        let mut buf = Vec::new();
        write_wavepacket_csv(&wp, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("time_us,density_per_us\n0.0,1.0"));
        assert!(text.contains("\n0.2,2.0"));
    }
}
