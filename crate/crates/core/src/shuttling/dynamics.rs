//! Classical response of the string's centre of mass to a moving trap
//! centre: `z̈ = −ω_z² (z − c(t))`, integrated with fixed-step RK4.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::filter::{
    apply_filter_chain, time_constant_from_rise, FilterSpec, PositionCommand, REFERENCE_RISE_TIME,
    SAMPLES_PER_TIME_CONSTANT,
};
use super::waveform::{synthesize_waveform, StepSignal, VoltageStepProgram};
use crate::error::ensure;
use crate::{par, Error, Result, TWO_PI};

/// Delay after the last step before the amplitude is read out (s).
pub const SETTLE_WAIT: f64 = 60e-6;

/// Fraction of a step still outstanding after [`SETTLE_WAIT`] for the
/// measured rise time; settling-time comparisons use this level.
pub fn reference_residual() -> f64 {
    (-SETTLE_WAIT / time_constant_from_rise(REFERENCE_RISE_TIME)).exp()
}

/// Integrator steps per trap period.
pub const STEPS_PER_PERIOD: f64 = 200.0;
/// Time before the first step in synthesised programs (s).
const LEAD: f64 = 5e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComTrajectory {
    pub dt: f64,
    /// Centre-of-mass position at every command sample (m).
    pub z: Vec<f64>,
    /// Half the peak-to-peak excursion of `z − c_final` over one trap period
    /// starting [`SETTLE_WAIT`] after the last step (m).
    pub amplitude: f64,
    /// Mean of `z − c_final` over the same window (m).
    pub residual_offset: f64,
}

impl ComTrajectory {
    /// Writes `t_us,z_um`, keeping every `stride`-th sample.
    pub fn write_csv<W: Write>(&self, writer: W, stride: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t_us", "z_um"])?;
        for (k, z) in self.z.iter().enumerate().step_by(stride.max(1)) {
            w.write_record([
                format!("{:.4}", k as f64 * self.dt * 1e6),
                format!("{:.6}", z * 1e6),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Integrates the driven oscillator from rest at `c(0)` and extracts the
/// residual oscillation amplitude.
pub fn com_trajectory(command: &PositionCommand, omega_z: f64) -> Result<ComTrajectory> {
    ensure(omega_z > 0.0 && omega_z.is_finite(), || {
        "axial frequency must be positive".into()
    })?;
    ensure(command.samples.len() >= 2, || {
        "command needs at least two samples".into()
    })?;
    let period = TWO_PI / omega_z;
    let max_step = period / STEPS_PER_PERIOD;
    let substeps = (command.dt / max_step).ceil().max(1.0) as usize;
    let h = command.dt / substeps as f64;
    let w2 = omega_z * omega_z;

    let c = &command.samples;
    let mut z = Vec::with_capacity(c.len());
    let (mut x, mut v) = (c[0], 0.0);
    z.push(x);
    for n in 0..c.len() - 1 {
        let (c0, c1) = (c[n], c[n + 1]);
        for s in 0..substeps {
            let at = |frac: f64| c0 + (c1 - c0) * (s as f64 + frac) / substeps as f64;
            let (ca, cm, cb) = (at(0.0), at(0.5), at(1.0));
            let acc = |x: f64, c: f64| -w2 * (x - c);
            let (k1x, k1v) = (v, acc(x, ca));
            let (k2x, k2v) = (v + 0.5 * h * k1v, acc(x + 0.5 * h * k1x, cm));
            let (k3x, k3v) = (v + 0.5 * h * k2v, acc(x + 0.5 * h * k2x, cm));
            let (k4x, k4v) = (v + h * k3v, acc(x + h * k3x, cb));
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        if !x.is_finite() {
            return Err(Error::Convergence(
                "centre-of-mass integration diverged".into(),
            ));
        }
        z.push(x);
    }

    let last_step = command.step_times.last().copied().unwrap_or(0.0);
    let start = ((last_step + SETTLE_WAIT) / command.dt).round() as usize;
    let len = (period / command.dt).round() as usize;
    if start + len >= z.len() {
        return Err(Error::InvalidInput(format!(
            "command ends before the read-out window at {:.1} µs",
            (last_step + SETTLE_WAIT + period) * 1e6
        )));
    }
    let window = &z[start..=start + len];
    let (lo, hi) = window
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    Ok(ComTrajectory {
        dt: command.dt,
        z,
        amplitude: 0.5 * (hi - lo),
        residual_offset: mean - command.final_value,
    })
}

/// Sample interval resolving both the trap period and every filter stage.
pub fn sample_interval(filters: &[FilterSpec], omega_z: f64) -> f64 {
    let mut dt = TWO_PI / omega_z / STEPS_PER_PERIOD;
    for f in filters {
        dt = dt.min(f.time_constant() / SAMPLES_PER_TIME_CONSTANT);
    }
    dt
}

/// Synthesises, filters and integrates a step program.
pub fn simulate_shuttle(
    program: &VoltageStepProgram,
    filters: &[FilterSpec],
    omega_z: f64,
) -> Result<(PositionCommand, ComTrajectory)> {
    simulate_shuttle_with_dt(program, filters, omega_z, sample_interval(filters, omega_z))
}

pub fn simulate_shuttle_with_dt(
    program: &VoltageStepProgram,
    filters: &[FilterSpec],
    omega_z: f64,
    dt: f64,
) -> Result<(PositionCommand, ComTrajectory)> {
    let run = run_shuttle_with_dt(program, filters, omega_z, dt)?;
    Ok((run.command, run.trajectory))
}

/// Every stage of a shuttle simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ShuttleRun {
    pub signal: StepSignal,
    pub command: PositionCommand,
    pub trajectory: ComTrajectory,
}

pub fn run_shuttle(
    program: &VoltageStepProgram,
    filters: &[FilterSpec],
    omega_z: f64,
) -> Result<ShuttleRun> {
    run_shuttle_with_dt(program, filters, omega_z, sample_interval(filters, omega_z))
}

fn run_shuttle_with_dt(
    program: &VoltageStepProgram,
    filters: &[FilterSpec],
    omega_z: f64,
    dt: f64,
) -> Result<ShuttleRun> {
    ensure(omega_z > 0.0, || "axial frequency must be positive".into())?;
    let period = TWO_PI / omega_z;
    let signal = synthesize_waveform(program, dt, LEAD, SETTLE_WAIT + 1.5 * period)?;
    let command = apply_filter_chain(&signal, filters)?;
    let trajectory = com_trajectory(&command, omega_z)?;
    Ok(ShuttleRun {
        signal,
        command,
        trajectory,
    })
}

/// `A_com` for every step interval in `intervals`.
pub fn scan_step_timing(
    program: &VoltageStepProgram,
    filters: &[FilterSpec],
    omega_z: f64,
    intervals: &[f64],
) -> Result<Vec<f64>> {
    par::try_map_range(intervals.len(), |k| {
        let p = VoltageStepProgram {
            step_interval: intervals[k],
            ..program.clone()
        };
        Ok(simulate_shuttle(&p, filters, omega_z)?.1.amplitude)
    })
}

/// Step interval nearest `target` that is an integer number of trap periods.
pub fn commensurate_interval(target: f64, omega_z: f64) -> f64 {
    let period = TWO_PI / omega_z;
    (target / period).round().max(1.0) * period
}

/// Time for the filtered unit-step response to stay within `residual` of
/// its final value.
pub fn settling_time(filters: &[FilterSpec], residual: f64) -> Result<f64> {
    ensure(residual > 0.0 && residual < 1.0, || {
        "residual must lie in (0, 1)".into()
    })?;
    let slowest = filters
        .iter()
        .map(|f| f.time_constant())
        .fold(0.0, f64::max);
    let fastest = filters
        .iter()
        .map(|f| f.time_constant())
        .fold(f64::INFINITY, f64::min);
    if filters.is_empty() {
        return Ok(0.0);
    }
    let dt = (fastest / 200.0).min(slowest / 2000.0);
    // Generous horizon: the slowest pole alone needs τ·ln(1/ε); repeated
    // poles add a logarithmic factor.
    let horizon = slowest * ((1.0 / residual).ln() + 10.0 * filters.len() as f64);
    let n = (horizon / dt).ceil() as usize + 2;
    let mut samples = vec![1.0; n];
    samples[0] = 0.0;
    let signal = StepSignal {
        dt,
        samples,
        step_times: vec![dt],
    };
    let c = apply_filter_chain(&signal, filters)?;
    let last_out = c
        .samples
        .iter()
        .rposition(|v| (1.0 - v).abs() > residual)
        .ok_or_else(|| Error::InvalidInput("response never leaves the residual band".into()))?;
    if last_out + 1 >= c.samples.len() {
        return Err(Error::Accuracy("settling horizon too short".into()));
    }
    // Interpolate the crossing on the logarithm of the residual.
    let (a, b) = (
        (1.0 - c.samples[last_out]).abs().ln(),
        (1.0 - c.samples[last_out + 1]).abs().ln(),
    );
    let frac = if a != b {
        (a - residual.ln()) / (a - b)
    } else {
        0.0
    };
    Ok((last_out as f64 + frac) * dt - dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtraFilterReport {
    pub single_without: f64,
    pub single_with: f64,
    pub nine_without: f64,
    pub nine_with: f64,
    /// `A_com` without over with the extra stage.
    pub single_step_reduction: f64,
    pub nine_step_reduction: f64,
    /// Settling time with over without the extra stage.
    pub settling_factor: f64,
}

/// Effect of appending `extra` to `filters`, for a single step and the
/// worst-case multi-step program, and on the time to reach `residual`.
pub fn evaluate_extra_filter(
    single: &VoltageStepProgram,
    multi: &VoltageStepProgram,
    filters: &[FilterSpec],
    extra: FilterSpec,
    omega_z: f64,
    residual: f64,
) -> Result<ExtraFilterReport> {
    let mut extended = filters.to_vec();
    extended.push(extra);
    let runs = par::try_map_range(4, |k| {
        let program = if k < 2 { single } else { multi };
        let chain = if k % 2 == 0 { filters } else { &extended[..] };
        Ok(simulate_shuttle(program, chain, omega_z)?.1.amplitude)
    })?;
    let t_without = settling_time(filters, residual)?;
    let t_with = settling_time(&extended, residual)?;
    Ok(ExtraFilterReport {
        single_without: runs[0],
        single_with: runs[1],
        nine_without: runs[2],
        nine_with: runs[3],
        single_step_reduction: runs[0] / runs[1],
        nine_step_reduction: runs[2] / runs[3],
        settling_factor: t_with / t_without,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shuttling::filter::FilterOrder;
    use approx::assert_relative_eq;

    const WZ: f64 = TWO_PI * 358e3;

    #[test]
    fn constant_command_does_not_excite() {
        let p = VoltageStepProgram::new(vec![1.0, 1.0], 20e-6);
        let (_, t) = simulate_shuttle(&p, &FilterSpec::reference_chain(), WZ).unwrap();
        assert_eq!(t.amplitude, 0.0);
    }

    #[test]
    fn unfiltered_step_gives_full_amplitude() {
        let mut p = VoltageStepProgram::new(vec![1.0, 0.0], 20e-6);
        p.travel = 1e-6;
        let (_, t) = simulate_shuttle(&p, &[], WZ).unwrap();
        assert_relative_eq!(t.amplitude, 1e-6, max_relative = 1e-3);
    }

    #[test]
    fn filtered_step_matches_transfer_function() {
        let p = VoltageStepProgram::reference_single_step(3);
        let d = p.travel;
        let chain = FilterSpec::reference_chain();
        let (_, t) = simulate_shuttle(&p, &chain, WZ).unwrap();
        let expected = d * chain.iter().map(|f| f.gain_at(WZ)).product::<f64>();
        assert_relative_eq!(t.amplitude, expected, max_relative = 0.01);
        assert!(t.amplitude <= d);
    }

    #[test]
    fn halving_the_step_is_stable() {
        let p = VoltageStepProgram::reference_single_step(0);
        let chain = FilterSpec::reference_chain();
        let dt = sample_interval(&chain, WZ);
        let a = simulate_shuttle_with_dt(&p, &chain, WZ, dt)
            .unwrap()
            .1
            .amplitude;
        let b = simulate_shuttle_with_dt(&p, &chain, WZ, dt / 2.0)
            .unwrap()
            .1
            .amplitude;
        assert!((a / b - 1.0).abs() < 0.01);
    }

    #[test]
    fn timing_scan_is_periodic_and_has_deep_minima() {
        let p = VoltageStepProgram::reference(156e-6);
        let chain = FilterSpec::reference_chain();
        let period = TWO_PI / WZ;
        let base = commensurate_interval(156e-6, WZ);
        let grid: Vec<f64> = (0..9).map(|k| base + k as f64 * period / 8.0).collect();
        let a = scan_step_timing(&p, &chain, WZ, &grid).unwrap();
        assert_relative_eq!(a[0], a[8], max_relative = 0.01);
        let max = a.iter().cloned().fold(0.0, f64::max);
        let min = a.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_relative_eq!(max, a[0], max_relative = 1e-6);
        assert!(min < 0.25 * max);
    }

    #[test]
    fn single_step_program_ignores_timing() {
        let p = VoltageStepProgram::reference_single_step(3);
        let a =
            scan_step_timing(&p, &FilterSpec::reference_chain(), WZ, &[100e-6, 101.3e-6]).unwrap();
        assert_relative_eq!(a[0], a[1], max_relative = 1e-3);
    }

    #[test]
    fn transparent_extra_stage_changes_nothing() {
        let single = VoltageStepProgram::reference_single_step(3);
        let multi = VoltageStepProgram::new(vec![1.0, 0.8, 0.6], commensurate_interval(20e-6, WZ));
        let extra = FilterSpec {
            order: FilterOrder::First,
            cutoff_hz: 5e6,
            q: 0.5,
        };
        let r = evaluate_extra_filter(
            &single,
            &multi,
            &FilterSpec::reference_chain(),
            extra,
            WZ,
            1e-4,
        )
        .unwrap();
        assert!((r.single_step_reduction - 1.0).abs() < 0.01);
        assert!((r.nine_step_reduction - 1.0).abs() < 0.01);
        assert!((r.settling_factor - 1.0).abs() < 0.01);
    }

    #[test]
    fn settling_of_single_first_order_stage() {
        let t = settling_time(&[FilterSpec::first_order(35e3)], 1e-3).unwrap();
        let tau = 1.0 / (TWO_PI * 35e3);
        assert_relative_eq!(t, tau * 1e3f64.ln(), max_relative = 1e-3);
    }
}
