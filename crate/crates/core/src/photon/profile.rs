use serde::{Deserialize, Serialize};

use crate::{Error, Result, TWO_PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityGeometry {
    /// Vacuum-mode waist (m).
    pub waist: f64,
    /// Angle between the string axis and the normal to the cavity axis (rad).
    pub phi: f64,
    /// Photon wavelength (m).
    pub wavelength: f64,
    /// Cavity length (m).
    pub length: f64,
    /// Mirror radius of curvature (m).
    pub mirror_curvature: f64,
}

impl Default for CavityGeometry {
    fn default() -> Self {
        Self {
            waist: 12.31e-6,
            phi: 4.1f64.to_radians(),
            wavelength: 854e-9,
            length: super::cavity::CAVITY_LENGTH,
            mirror_curvature: 9.984e-3,
        }
    }
}

impl CavityGeometry {
    pub fn wavenumber(&self) -> f64 {
        TWO_PI / self.wavelength
    }

    /// Distance along the string from an antinode to the neighbouring node.
    pub fn first_node(&self) -> f64 {
        self.wavelength / (4.0 * self.phi.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamanBeam {
    pub wavelength: f64,
    /// Axial width σ of the intensity profile (m).
    pub sigma: f64,
    /// Peak Rabi frequency Ω (rad/s).
    pub rabi: f64,
    /// Raman detuning Δ from the excited manifold (rad/s).
    pub detuning: f64,
    /// Relative phase of the two bichromatic components (rad).
    pub phase: f64,
}

impl Default for RamanBeam {
    fn default() -> Self {
        let rabi = TWO_PI * 53.2e6;
        Self {
            wavelength: 393e-9,
            sigma: 1.3e-6,
            rabi,
            detuning: rabi * rabi / (4.0 * TWO_PI * 1.26e6),
            phase: 0.0,
        }
    }
}

impl RamanBeam {
    /// `exp(−z²/σ²)`.
    pub fn profile(&self, z: f64) -> f64 {
        (-(z * z) / (self.sigma * self.sigma)).exp()
    }
}

/// `Ω(z) = Ω exp(−z²/σ²)` and `g(z) = g cos(kz sin φ) exp(−(z cos φ/ω₀)²)`.
pub fn spatial_coupling(z: f64, beam: &RamanBeam, geom: &CavityGeometry, g: f64) -> (f64, f64) {
    let omega = beam.rabi * beam.profile(z);
    let k = geom.wavenumber();
    let envelope = (-(z * geom.phi.cos() / geom.waist).powi(2)).exp();
    (omega, g * (k * z * geom.phi.sin()).cos() * envelope)
}

/// Raman detuning from a measured AC Stark shift in the dispersive limit:
/// `Δ = Ω²/(4 δ_Stark)`.
pub fn stark_calibrate_detuning(rabi: f64, stark_shift: f64) -> Result<f64> {
    if !(stark_shift > 0.0) || !stark_shift.is_finite() {
        return Err(Error::InvalidCalibration(format!(
            "Stark shift must be positive and finite, got {stark_shift}"
        )));
    }
    if !(rabi >= 0.0) {
        return Err(Error::InvalidCalibration(format!(
            "Rabi frequency must be non-negative, got {rabi}"
        )));
    }
    Ok(rabi * rabi / (4.0 * stark_shift))
}

/// Predicted AC Stark shift `Ω²/(4Δ)`.
pub fn stark_shift(rabi: f64, detuning: f64) -> f64 {
    rabi * rabi / (4.0 * detuning)
}
