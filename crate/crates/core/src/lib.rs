//! Simulation and analysis toolkit for a shuttling-based, ten-ion
//! photon-interface network node.
//!
//! The crate is organised along the physical pipeline:
//!
//! * [`mechanics`]: ion-crystal equilibrium, normal modes, Lamb-Dicke
//!   factors, thermal occupations and the thermally reduced Raman Rabi
//!   frequency.
//! * [`photon`]: cavity parameters, the effective Raman photon-generation
//!   master equation, displacement/oscillation/ripple efficiency analyses and
//!   the detection-efficiency budget.
//! * [`shuttling`]: endcap waveform synthesis, the filter chain, classical
//!   centre-of-mass response and the calibration fits used around it.
//! * [`coherence`]: Zeeman sensitivities, phase accumulation during the
//!   shuttling schedule, the Gaussian dephasing channel and Ramsey fits.
//! * [`tomography`]: two-qubit reconstruction, concurrence, fidelity, the
//!   rotation optimisations and Monte Carlo error bars.
//! * [`pipeline`]: run configuration, synthetic click/outcome generation,
//!   windowing, histograms, count tables and report emission.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled (the default) and plain iterators otherwise.
//! Results never depend on the schedule: every stochastic stream is derived
//! from `(seed, index)`.

pub mod coherence;
pub mod constants;
pub mod error;
pub mod mechanics;
pub mod numerics;
pub mod par;
pub mod photon;
pub mod pipeline;
pub mod shuttling;
pub mod tomography;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};

/// 2π, used to convert between cyclic and angular frequencies.
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
