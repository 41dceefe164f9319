use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::ensure;
use crate::Result;

/// Waveform-generator set points that place each ion of the ten-ion string
/// at the photon-generation position (V).
pub const REFERENCE_VOLTAGES: [f64; 10] = [
    4.450, 3.900, 3.400, 2.950, 2.550, 2.120, 1.700, 1.250, 0.750, 0.200,
];

/// Ten-ion string length that the full step sequence spans (m).
pub const REFERENCE_TRAVEL: f64 = 49e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageStepProgram {
    /// Waveform-generator levels V_in,j (V).
    pub voltages: Vec<f64>,
    /// Digital resolution of the levels (V).
    pub resolution: f64,
    /// Interval between successive steps (s).
    pub step_interval: f64,
    pub amplifier_gain: f64,
    pub bias: f64,
    /// Trap-centre travel across the whole program (m).
    pub travel: f64,
}

impl VoltageStepProgram {
    pub fn new(voltages: Vec<f64>, step_interval: f64) -> Self {
        Self {
            voltages,
            resolution: 1e-3,
            step_interval,
            amplifier_gain: 4.0,
            bias: 160.0,
            travel: REFERENCE_TRAVEL,
        }
    }

    /// The ten-ion sequence with the given step interval.
    pub fn reference(step_interval: f64) -> Self {
        Self::new(REFERENCE_VOLTAGES.to_vec(), step_interval)
    }

    /// A one-step program between two consecutive reference levels, with the
    /// travel scaled to that step's share of the full sequence.
    pub fn reference_single_step(index: usize) -> Self {
        let v = REFERENCE_VOLTAGES;
        let total = v[0] - v[9];
        let mut p = Self::new(vec![v[index], v[index + 1]], 156e-6);
        p.travel = REFERENCE_TRAVEL * (v[index] - v[index + 1]) / total;
        p
    }

    pub fn validate(&self) -> Result<()> {
        ensure(!self.voltages.is_empty(), || {
            "program needs at least one level".into()
        })?;
        ensure(self.step_interval > 0.0, || {
            "step interval must be positive".into()
        })?;
        ensure(self.voltages.iter().all(|v| v.is_finite()), || {
            "levels must be finite".into()
        })
    }

    pub fn step_count(&self) -> usize {
        self.voltages.len().saturating_sub(1)
    }

    /// Endcap outputs `V_bias ± gain·V_in` for level `j`.
    pub fn endcap_voltages(&self, j: usize) -> (f64, f64) {
        let d = self.amplifier_gain * self.voltages[j];
        (self.bias + d, self.bias - d)
    }

    /// Trap-centre displacement of each level relative to the first, with
    /// the total normalised to `travel`. Constant programs map to zeros.
    pub fn positions(&self) -> Vec<f64> {
        let first = self.voltages[0];
        let span = first - self.voltages[self.voltages.len() - 1];
        if span == 0.0 {
            return vec![0.0; self.voltages.len()];
        }
        self.voltages
            .iter()
            .map(|v| self.travel * (first - v) / span)
            .collect()
    }

    /// Displacement of every step.
    pub fn step_sizes(&self) -> Vec<f64> {
        self.positions().windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Piecewise-constant trap-centre target sampled on a uniform grid starting
/// at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSignal {
    pub dt: f64,
    pub samples: Vec<f64>,
    /// Times at which the steps occur (s).
    pub step_times: Vec<f64>,
}

impl StepSignal {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.dt
    }
}

/// Samples the nine-step target `s(t)`: the first step occurs at `lead`,
/// later ones every `step_interval`, and the signal continues for `tail`
/// after the last step. Steps are aligned to sample boundaries.
pub fn synthesize_waveform(
    program: &VoltageStepProgram,
    dt: f64,
    lead: f64,
    tail: f64,
) -> Result<StepSignal> {
    program.validate()?;
    ensure(dt > 0.0 && lead >= 0.0 && tail >= 0.0, || {
        "invalid sampling window".into()
    })?;
    let positions = program.positions();
    let steps = program.step_count();
    let step_samples: Vec<usize> = (0..steps)
        .map(|j| ((lead + j as f64 * program.step_interval) / dt).round() as usize)
        .collect();
    let last = step_samples.last().copied().unwrap_or(0);
    let total = last + (tail / dt).ceil() as usize + 1;
    let mut samples = Vec::with_capacity(total);
    let mut level = 0;
    for n in 0..total {
        while level < steps && n >= step_samples[level] {
            level += 1;
        }
        samples.push(positions[level]);
    }
    Ok(StepSignal {
        dt,
        samples,
        step_times: step_samples.iter().map(|&k| k as f64 * dt).collect(),
    })
}

/// Writes the amplified differential drive `gain·V_in(t)` as `t_us,v_volts`,
/// one row per level change plus the end point.
pub fn write_waveform_csv<W: Write>(
    program: &VoltageStepProgram,
    signal: &StepSignal,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t_us", "v_volts"])?;
    let mut rows = vec![(0.0, program.voltages[0])];
    for (j, t) in signal.step_times.iter().enumerate() {
        rows.push((*t, program.voltages[j]));
        rows.push((*t, program.voltages[j + 1]));
    }
    rows.push((
        signal.duration(),
        program.voltages[program.voltages.len() - 1],
    ));
    for (t, v) in rows {
        w.write_record([
            format!("{:.4}", t * 1e6),
            format!("{:.4}", program.amplifier_gain * v),
        ])?;
    }
    w.flush()?;
    Ok(())
}
