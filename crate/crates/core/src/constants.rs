use serde::{Deserialize, Serialize};

/// Physical constants used throughout the models (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub electron_charge: f64,
    pub vacuum_permittivity: f64,
    pub reduced_planck: f64,
    pub boltzmann: f64,
    /// Mass of a single ion.
    pub ion_mass: f64,
    pub bohr_magneton: f64,
    pub speed_of_light: f64,
}

pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
pub const ELECTRON_MASS: f64 = 9.109_383_7015e-31;

impl PhysicalConstants {
    /// CODATA 2018 constants with a singly ionised 40Ca ion.
    pub fn calcium40() -> Self {
        Self {
            electron_charge: 1.602_176_634e-19,
            vacuum_permittivity: 8.854_187_8128e-12,
            reduced_planck: 1.054_571_817e-34,
            boltzmann: 1.380_649e-23,
            ion_mass: 39.962_590_863 * ATOMIC_MASS_UNIT - ELECTRON_MASS,
            bohr_magneton: 9.274_010_0783e-24,
            speed_of_light: 299_792_458.0,
        }
    }

    pub fn planck(&self) -> f64 {
        self.reduced_planck * crate::TWO_PI
    }

    /// Bohr magneton over Planck's constant, in Hz per gauss.
    pub fn bohr_magneton_hz_per_gauss(&self) -> f64 {
        self.bohr_magneton / self.planck() * 1e-4
    }

    pub fn is_valid(&self) -> bool {
        [
            self.electron_charge,
            self.vacuum_permittivity,
            self.reduced_planck,
            self.boltzmann,
            self.ion_mass,
            self.bohr_magneton,
            self.speed_of_light,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0)
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::calcium40()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bohr_magneton_in_hz_per_gauss() {
        let c = PhysicalConstants::calcium40();
        assert!((c.bohr_magneton_hz_per_gauss() - 1.399_624_5e6).abs() < 10.0);
        assert!(c.is_valid());
    }
}
