//! Run configuration. Every physical quantity carries its unit in the key;
//! angular frequencies are given as `ω/2π`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coherence::{FieldModel, ShuttleSchedule};
use crate::mechanics::{RadialCouplingSpec, TrapConfiguration};
use crate::photon::cavity::{cavity_derived_params, transmission_from_escape, CAVITY_LENGTH};
use crate::photon::{PhotonSourceModel, RamanBeam};
use crate::shuttling::{FilterSpec, VoltageStepProgram, REFERENCE_VOLTAGES};
use crate::{Error, Result, TWO_PI};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapSection {
    pub ion_count: usize,
    pub omega_z_2pi_khz: f64,
    pub omega_rx_2pi_mhz: f64,
    pub omega_ry_2pi_mhz: f64,
    /// Mean occupation of the highest radial COM mode after Doppler cooling.
    pub radial_nbar_reference: f64,
    /// Treat every radial mode as ground-state cooled.
    pub ground_state_cooled: bool,
}

impl Default for TrapSection {
    fn default() -> Self {
        let t = TrapConfiguration::ten_ion();
        Self {
            ion_count: t.ion_count,
            omega_z_2pi_khz: t.omega_z / TWO_PI / 1e3,
            omega_rx_2pi_mhz: t.omega_rx / TWO_PI / 1e6,
            omega_ry_2pi_mhz: t.omega_ry / TWO_PI / 1e6,
            radial_nbar_reference: RadialCouplingSpec::default().reference_nbar,
            ground_state_cooled: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSection {
    pub g_2pi_mhz: f64,
    pub finesse: f64,
    /// Finesse and escape probability of the row that fixes the output
    /// mirror transmission.
    pub reference_finesse: f64,
    pub reference_escape_probability: f64,
    pub loss_rate_2pi_mhz: f64,
    pub coupling_scale: f64,
    pub jitter_2pi_khz: f64,
    pub jitter_shots: usize,
    pub ripple_phases: usize,
    pub bin_width_us: f64,
    pub rtol: f64,
    pub check_convergence: bool,
    pub rabi_2pi_mhz: f64,
    pub stark_shift_2pi_mhz: f64,
    pub beam_sigma_um: f64,
    /// Static offset of every ion from the beam centre during its pulse.
    pub displacement_um: f64,
    pub ripple_amplitude_um: f64,
    /// Fixed oscillation amplitude for ions 2.. ; `null` derives it from the
    /// shuttle section.
    pub a_com_um: Option<f64>,
}

impl Default for SourceSection {
    fn default() -> Self {
        let m = PhotonSourceModel::default();
        let b = RamanBeam::default();
        Self {
            g_2pi_mhz: m.g / TWO_PI / 1e6,
            finesse: 30e3,
            reference_finesse: 54e3,
            reference_escape_probability: 0.78,
            loss_rate_2pi_mhz: m.loss_rate / TWO_PI / 1e6,
            coupling_scale: m.coupling_scale,
            jitter_2pi_khz: m.jitter / TWO_PI / 1e3,
            jitter_shots: m.jitter_shots,
            ripple_phases: m.ripple_phases,
            bin_width_us: m.bin_width * 1e6,
            rtol: m.rtol,
            check_convergence: m.check_convergence,
            rabi_2pi_mhz: b.rabi / TWO_PI / 1e6,
            stark_shift_2pi_mhz: 1.26,
            beam_sigma_um: b.sigma * 1e6,
            displacement_um: 0.0,
            ripple_amplitude_um: 0.0,
            a_com_um: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShuttleSection {
    pub levels_v: Vec<f64>,
    pub travel_um: f64,
    /// Filter stages as `order:cutoff_khz`.
    pub filters: Vec<String>,
}

impl Default for ShuttleSection {
    fn default() -> Self {
        Self {
            levels_v: REFERENCE_VOLTAGES.to_vec(),
            travel_um: 49.0,
            filters: vec!["1:35".into(), "2:80".into()],
        }
    }
}

/// Sequence timings. The photon windows follow the dwell pattern: ion 1's
/// pulse starts at 0, ion `n ≥ 2`'s pulse starts `transport_us` into its
/// dwell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub doppler_ms: f64,
    pub pump_us: f64,
    pub wait_us: f64,
    pub raman_us: f64,
    pub transport_wait_us: f64,
    pub pi_pulse_us: f64,
    pub detection_ms: f64,
    pub initial_dwell_us: f64,
    pub dwell_us: f64,
    pub final_dwell_us: f64,
    pub transport_us: f64,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            doppler_ms: 8.0,
            pump_us: 40.0,
            wait_us: 60.0,
            raman_us: 80.0,
            transport_wait_us: 60.0,
            pi_pulse_us: 6.4,
            detection_ms: 5.0,
            initial_dwell_us: 126.0,
            dwell_us: 156.0,
            final_dwell_us: 30.0,
            transport_us: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QubitSection {
    pub gradient_g_per_m: f64,
    pub miscalibration_ug: f64,
    pub coherence_sigma_ms: f64,
    /// Weight of the maximally mixed state mixed into every pair state.
    pub depolarizing_floor: f64,
    /// ZYZ angles of the polarisation rotation in the fibre.
    pub fiber_unitary_zyz_rad: [f64; 3],
}

impl Default for QubitSection {
    fn default() -> Self {
        let f = FieldModel::reference();
        Self {
            gradient_g_per_m: f.gradient,
            miscalibration_ug: f.miscalibration * 1e6,
            coherence_sigma_ms: 5.5,
            depolarizing_floor: 0.04,
            fiber_unitary_zyz_rad: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub monte_carlo_replicates: usize,
    pub optimizer_starts: usize,
    pub displacement_grid_um: Vec<f64>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            monte_carlo_replicates: 100,
            optimizer_starts: 8,
            displacement_grid_um: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub attempts_per_setting: u64,
    /// Detection-path efficiency ξ.
    pub xi: f64,
    /// Background click rate per detector pair.
    pub dark_count_rate_hz: f64,
    pub trap: TrapSection,
    pub source: SourceSection,
    pub shuttle: ShuttleSection,
    pub schedule: ScheduleSection,
    pub qubit: QubitSection,
    pub analysis: AnalysisSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            attempts_per_setting: 6000,
            xi: 0.36,
            dark_count_rate_hz: 0.0,
            trap: TrapSection::default(),
            source: SourceSection::default(),
            shuttle: ShuttleSection::default(),
            schedule: ScheduleSection::default(),
            qubit: QubitSection::default(),
            analysis: AnalysisSection::default(),
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Validation(msg()))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| Error::Validation(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Canonical JSON of the resolved configuration (defaults filled in).
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// SHA-256 of [`RunConfig::canonical_json`], hex encoded.
    pub fn sha256(&self) -> Result<String> {
        Ok(hex_digest(self.canonical_json()?.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.schedule;
        let durations = [
            s.doppler_ms,
            s.pump_us,
            s.wait_us,
            s.raman_us,
            s.transport_wait_us,
            s.pi_pulse_us,
            s.detection_ms,
            s.initial_dwell_us,
            s.dwell_us,
            s.final_dwell_us,
        ];
        check(durations.iter().all(|d| *d > 0.0 && d.is_finite()), || {
            "all durations must be positive".into()
        })?;
        check(s.transport_us >= 0.0, || {
            "transport share must be non-negative".into()
        })?;
        check(s.raman_us <= s.initial_dwell_us, || {
            format!(
                "Raman pulse {} µs does not fit the first dwell {} µs",
                s.raman_us, s.initial_dwell_us
            )
        })?;
        check(s.transport_us + s.raman_us <= s.dwell_us, || {
            format!(
                "Raman window {} µs after {} µs transport overruns the {} µs dwell",
                s.raman_us, s.transport_us, s.dwell_us
            )
        })?;
        let bins = s.raman_us / self.source.bin_width_us;
        check(
            self.source.bin_width_us > 0.0 && (bins - bins.round()).abs() < 1e-9,
            || "bin width must divide the Raman window".into(),
        )?;
        check(self.attempts_per_setting >= 1, || {
            "attempts per setting must be ≥ 1".into()
        })?;
        check((0.0..=1.0).contains(&self.xi), || {
            format!("ξ = {} outside [0, 1]", self.xi)
        })?;
        check(self.dark_count_rate_hz >= 0.0, || {
            "dark count rate must be non-negative".into()
        })?;
        check(self.trap.ion_count >= 2, || {
            "at least two ions are needed".into()
        })?;
        check(self.shuttle.levels_v.len() == self.trap.ion_count, || {
            format!(
                "{} shuttle levels for {} ions",
                self.shuttle.levels_v.len(),
                self.trap.ion_count
            )
        })?;
        check((0.0..=1.0).contains(&self.qubit.depolarizing_floor), || {
            "depolarizing floor outside [0, 1]".into()
        })?;
        check(self.qubit.coherence_sigma_ms > 0.0, || {
            "coherence time must be positive".into()
        })?;
        check(self.analysis.optimizer_starts >= 1, || {
            "need at least one optimizer start".into()
        })?;
        self.filters()?;
        self.trap_configuration().validate()?;
        self.source_model()?.validate()?;
        Ok(())
    }

    pub fn trap_configuration(&self) -> TrapConfiguration {
        TrapConfiguration {
            ion_count: self.trap.ion_count,
            omega_z: TWO_PI * self.trap.omega_z_2pi_khz * 1e3,
            omega_rx: TWO_PI * self.trap.omega_rx_2pi_mhz * 1e6,
            omega_ry: TWO_PI * self.trap.omega_ry_2pi_mhz * 1e6,
        }
    }

    pub fn coupling_spec(&self) -> RadialCouplingSpec {
        RadialCouplingSpec {
            reference_nbar: self.trap.radial_nbar_reference,
            ..RadialCouplingSpec::default()
        }
    }

    pub fn source_model(&self) -> Result<PhotonSourceModel> {
        let s = &self.source;
        let t2 = transmission_from_escape(s.reference_finesse, s.reference_escape_probability);
        let cavity = cavity_derived_params(s.finesse, CAVITY_LENGTH, t2)?;
        Ok(PhotonSourceModel {
            g: TWO_PI * s.g_2pi_mhz * 1e6,
            kappa: cavity.kappa,
            loss_rate: TWO_PI * s.loss_rate_2pi_mhz * 1e6,
            coupling_scale: s.coupling_scale,
            jitter: TWO_PI * s.jitter_2pi_khz * 1e3,
            escape_probability: cavity.escape_probability,
            pulse_duration: self.schedule.raman_us * 1e-6,
            bin_width: s.bin_width_us * 1e-6,
            jitter_shots: s.jitter_shots,
            ripple_phases: s.ripple_phases,
            rtol: s.rtol,
            check_convergence: s.check_convergence,
        })
    }

    pub fn raman_beam(&self) -> Result<RamanBeam> {
        let rabi = TWO_PI * self.source.rabi_2pi_mhz * 1e6;
        let detuning = crate::photon::stark_calibrate_detuning(
            rabi,
            TWO_PI * self.source.stark_shift_2pi_mhz * 1e6,
        )?;
        Ok(RamanBeam {
            rabi,
            detuning,
            sigma: self.source.beam_sigma_um * 1e-6,
            ..RamanBeam::default()
        })
    }

    pub fn filters(&self) -> Result<Vec<FilterSpec>> {
        self.shuttle
            .filters
            .iter()
            .map(|f| {
                f.parse::<FilterSpec>()
                    .map_err(|e| Error::Validation(e.to_string()))
            })
            .collect()
    }

    /// One-step program moving the string from level `k` to level `k + 1`.
    pub fn single_step_program(&self, k: usize) -> VoltageStepProgram {
        let v = &self.shuttle.levels_v;
        let total = v[0] - v[v.len() - 1];
        let mut p = VoltageStepProgram::new(vec![v[k], v[k + 1]], self.schedule.dwell_us * 1e-6);
        p.travel = if total == 0.0 {
            0.0
        } else {
            self.shuttle.travel_um * 1e-6 * (v[k] - v[k + 1]) / total
        };
        p
    }

    /// Photon windows implied by the dwell pattern.
    pub fn window_spec(&self) -> Result<super::windows::WindowSpec> {
        let times = self
            .shuttle_schedule(&vec![0.0; self.trap.ion_count])
            .generation_times();
        super::windows::WindowSpec::new(
            times.iter().map(|t| t * 1e6).collect(),
            self.schedule.raman_us,
        )
    }

    pub fn field_model(&self) -> FieldModel {
        FieldModel {
            gradient: self.qubit.gradient_g_per_m,
            miscalibration: self.qubit.miscalibration_ug * 1e-6,
        }
    }

    pub fn shuttle_schedule(&self, ion_offsets: &[f64]) -> ShuttleSchedule {
        let s = &self.schedule;
        ShuttleSchedule {
            initial_dwell: s.initial_dwell_us * 1e-6,
            dwell: s.dwell_us * 1e-6,
            final_dwell: s.final_dwell_us * 1e-6,
            transport: s.transport_us * 1e-6,
            ..ShuttleSchedule::for_string(ion_offsets)
        }
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        assert!((c.trap.omega_z_2pi_khz - 358.0).abs() < 1e-9);
    }

    #[test]
    fn unit_suffixed_keys_are_read() {
        let c = RunConfig::from_json(r#"{"trap": {"omega_z_2pi_khz": 400}, "xi": 0.5}"#).unwrap();
        assert!((c.trap_configuration().omega_z - TWO_PI * 400e3).abs() < 1e-6);
        assert_eq!(c.xi, 0.5);
    }

    #[test]
    fn unknown_keys_and_inconsistent_windows_are_rejected() {
        assert!(RunConfig::from_json(r#"{"omega_z": 1}"#).is_err());
        let e = RunConfig::from_json(r#"{"schedule": {"raman_us": 140}}"#).unwrap_err();
        assert_eq!(e.kind(), "validation");
        let e = RunConfig::from_json(r#"{"source": {"bin_width_us": 0.3}}"#).unwrap_err();
        assert_eq!(e.kind(), "validation");
        assert!(RunConfig::from_json(r#"{"attempts_per_setting": 0}"#).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let b = RunConfig {
            seed: 2,
            ..RunConfig::default()
        };
        assert_eq!(a.sha256().unwrap(), RunConfig::default().sha256().unwrap());
        assert_ne!(a.sha256().unwrap(), b.sha256().unwrap());
        assert_eq!(a.sha256().unwrap().len(), 64);
    }

    #[test]
    fn derived_models_match_defaults() {
        let c = RunConfig::default();
        let m = c.source_model().unwrap();
        let d = PhotonSourceModel::default();
        assert!((m.kappa / d.kappa - 1.0).abs() < 1e-12);
        assert!((m.escape_probability - d.escape_probability).abs() < 1e-12);
        let b = c.raman_beam().unwrap();
        assert!((b.detuning / RamanBeam::default().detuning - 1.0).abs() < 1e-9);
        let p = c.single_step_program(3);
        assert!((p.travel - VoltageStepProgram::reference_single_step(3).travel).abs() < 1e-15);
    }
}
