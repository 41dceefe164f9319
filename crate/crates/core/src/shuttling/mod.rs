//! Endcap-voltage shuttling: waveform synthesis, the analogue filter chain,
//! the classical centre-of-mass response of the string and the calibration
//! fits used around it.

pub mod calibration;
pub mod dynamics;
pub mod filter;
pub mod waveform;

pub use calibration::{
    amplitude_from_darkstate_scan, fit_dark_state_profile, fit_sinusoid, voltage_position_fit,
    DarkStateScan, GaussianProfile, SinusoidFit,
};
pub use dynamics::{
    com_trajectory, evaluate_extra_filter, reference_residual, run_shuttle, scan_step_timing,
    settling_time, simulate_shuttle, ComTrajectory, ExtraFilterReport, ShuttleRun,
};
pub use filter::{
    apply_filter_chain, residual_settling, time_constant_from_rise, FilterOrder, FilterSpec,
    PositionCommand, REFERENCE_RISE_TIME,
};
pub use waveform::{
    synthesize_waveform, write_waveform_csv, StepSignal, VoltageStepProgram, REFERENCE_VOLTAGES,
};
