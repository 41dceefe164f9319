//! Model of the full ten-ion sequence and the synthetic experiment built on
//! it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::records::{ClickLog, ClickRecord, OutcomeRecord};
use super::windows::WindowSpec;
use crate::coherence::{accumulate_phases, dephase, PhaseAngles, Transition, ZeemanSensitivity};
use crate::mechanics::{RabiReduction, RadialThermalModel};
use crate::par::{map_range, stream_rng, try_map_range};
use crate::photon::analysis::ion_wavepackets;
use crate::photon::{CavityGeometry, IonDriveContext, Wavepacket};
use crate::shuttling::simulate_shuttle;
use crate::tomography::state::{ion_z_rotation, photon_unitary, zyz_unitary, TwoQubitState};
use crate::tomography::Setting;
use crate::{PhysicalConstants, Result};

/// Mixed into the run seed for the per-attempt streams so that they never
/// coincide with the photon-model jitter streams.
const ATTEMPT_SALT: u64 = 0x5eed_a77e_3d1c_0001;

/// Everything the synthetic experiment samples from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeModel {
    pub windows: WindowSpec,
    /// Ω_r/Ω per ion.
    pub rabi_fractions: Vec<f64>,
    pub drives: Vec<IonDriveContext>,
    pub wavepackets: Vec<Wavepacket>,
    /// Cavity-exit probability per ion.
    pub exit_probabilities: Vec<f64>,
    pub phases: PhaseAngles,
    /// Photon-generation times relative to ion 1 (s).
    pub generation_times: Vec<f64>,
    pub pair_states: Vec<TwoQubitState>,
}

impl NodeModel {
    pub fn build(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let constants = PhysicalConstants::calcium40();
        let trap = config.trap_configuration();
        let thermal = RadialThermalModel::build(&trap, &config.coupling_spec(), &constants)?;
        let rabi_fractions = if config.trap.ground_state_cooled {
            thermal.ground_state_fractions(RabiReduction::LaguerreThermal)?
        } else {
            thermal.rabi_fractions(RabiReduction::LaguerreThermal)?
        };
        let n = trap.ion_count;

        let filters = config.filters()?;
        let a_com: Vec<f64> = match config.source.a_com_um {
            Some(a) => (0..n)
                .map(|k| if k == 0 { 0.0 } else { a * 1e-6 })
                .collect(),
            None => {
                let steps = try_map_range(n - 1, |k| {
                    Ok(
                        simulate_shuttle(&config.single_step_program(k), &filters, trap.omega_z)?
                            .1
                            .amplitude,
                    )
                })?;
                std::iter::once(0.0).chain(steps).collect()
            }
        };
        let drives: Vec<IonDriveContext> = (0..n)
            .map(|k| IonDriveContext {
                rabi_fraction: rabi_fractions[k],
                z0: config.source.displacement_um * 1e-6,
                a_com: a_com[k],
                omega_z: trap.omega_z,
                a_ripple: config.source.ripple_amplitude_um * 1e-6,
            })
            .collect();
        let model = config.source_model()?;
        let wavepackets = ion_wavepackets(
            &model,
            &CavityGeometry::default(),
            &config.raman_beam()?,
            &drives,
            config.seed,
        )?;
        let exit_probabilities = wavepackets.iter().map(|w| w.probability).collect();

        let schedule = config.shuttle_schedule(&thermal.string.positions);
        let sensitivity = ZeemanSensitivity::new(Transition::DToDPrime, &constants);
        let phases = accumulate_phases(
            &schedule,
            &config.field_model(),
            &thermal.string.positions,
            &sensitivity,
        )?;
        let generation_times = schedule.generation_times();
        let windows = config.window_spec()?;

        let last = generation_times[n - 1];
        let fiber = photon_unitary(&{
            let [a, b, c] = config.qubit.fiber_unitary_zyz_rad;
            zyz_unitary(a, b, c)
        });
        let pair_states = (0..n)
            .map(|k| {
                let rotated =
                    TwoQubitState::bell(0.0).conjugate_by(&ion_z_rotation(phases.unwrapped[k]));
                let stored = dephase(
                    &rotated,
                    (generation_times[k] - last).abs(),
                    config.qubit.coherence_sigma_ms * 1e-3,
                )?;
                Ok(stored
                    .depolarize(config.qubit.depolarizing_floor)
                    .conjugate_by(&fiber))
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            windows,
            rabi_fractions,
            drives,
            wavepackets,
            exit_probabilities,
            phases,
            generation_times,
            pair_states,
        })
    }

    pub fn ions(&self) -> usize {
        self.pair_states.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub model: NodeModel,
    pub clicks: ClickLog,
    pub outcomes: Vec<OutcomeRecord>,
}

/// Per-ion sampling tables for one setting.
struct SettingTables {
    /// Joint Born probabilities, cumulative over the four outcomes.
    joint: Vec<[f64; 4]>,
    /// Probability of the ion `+1` outcome.
    ion_plus: Vec<f64>,
}

fn cumulative(p: [f64; 4]) -> [f64; 4] {
    let mut c = [0.0; 4];
    let mut acc = 0.0;
    for k in 0..4 {
        acc += p[k];
        c[k] = acc;
    }
    c
}

fn pick(cdf: &[f64], u: f64) -> usize {
    let total = cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= u * total).min(cdf.len() - 1)
}

/// Runs every attempt of every setting. Attempt `a` belongs to setting
/// `a / attempts_per_setting` and draws from its own stream, so the result
/// does not depend on scheduling.
pub fn run_experiment(config: &RunConfig) -> Result<Experiment> {
    let model = NodeModel::build(config)?;
    let (clicks, outcomes) = sample_attempts(&model, config);
    Ok(Experiment {
        model,
        clicks,
        outcomes,
    })
}

/// Samples clicks and ion outcomes from an already built model.
pub fn sample_attempts(model: &NodeModel, config: &RunConfig) -> (ClickLog, Vec<OutcomeRecord>) {
    let n = model.ions();
    let tables: Vec<SettingTables> = Setting::all()
        .map(|s| {
            let probs: Vec<[f64; 4]> = model
                .pair_states
                .iter()
                .map(|r| r.outcome_probabilities(s.ion.pauli_index(), s.photon.pauli_index()))
                .collect();
            SettingTables {
                joint: probs.iter().map(|p| cumulative(*p)).collect(),
                ion_plus: probs.iter().map(|p| p[0] + p[1]).collect(),
            }
        })
        .collect();
    let arrival: Vec<Vec<f64>> = model.wavepackets.iter().map(|w| w.cumulative()).collect();
    let detect: Vec<f64> = model
        .exit_probabilities
        .iter()
        .map(|p| config.xi * p)
        .collect();
    let bins = model.wavepackets[0].density.len() as u32;
    let dark = config.dark_count_rate_hz * config.schedule.raman_us * 1e-6;
    let per_setting = config.attempts_per_setting;
    let seed = config.seed ^ ATTEMPT_SALT;

    let results = map_range((per_setting * Setting::COUNT as u64) as usize, |a| {
        let a = a as u64;
        let setting_id = (a / per_setting) as usize;
        let t = &tables[setting_id];
        let mut rng = stream_rng(seed, a);
        let mut clicks = Vec::new();
        let mut bits = Vec::with_capacity(n);
        for k in 0..n {
            let window_index = k + 1;
            if rng.random::<f64>() < detect[k] {
                let outcome = pick(&t.joint[k], rng.random());
                let bin = pick(&arrival[k], rng.random()) as u32;
                bits.push((outcome >> 1) as u8);
                clicks.push(ClickRecord {
                    attempt_index: a,
                    window_index,
                    time_bin: bin,
                    setting_id,
                    detector_channel: (outcome & 1) as u8,
                });
            } else {
                bits.push(u8::from(rng.random::<f64>() >= t.ion_plus[k]));
            }
            if dark > 0.0 && rng.random::<f64>() < dark {
                clicks.push(ClickRecord {
                    attempt_index: a,
                    window_index,
                    time_bin: rng.random_range(0..bins),
                    setting_id,
                    detector_channel: rng.random_range(0..2),
                });
            }
        }
        (
            clicks,
            OutcomeRecord {
                attempt_index: a,
                setting_id,
                outcomes: bits,
            },
        )
    });
    let mut clicks = Vec::new();
    let mut outcomes = Vec::with_capacity(results.len());
    for (c, o) in results {
        clicks.extend(c);
        outcomes.push(o);
    }
    (ClickLog::new(config.source.bin_width_us, clicks), outcomes)
}
