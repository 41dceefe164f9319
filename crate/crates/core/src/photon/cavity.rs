use serde::{Deserialize, Serialize};

use crate::error::ensure;
use crate::{Error, Result};

/// Cavity length (m).
pub const CAVITY_LENGTH: f64 = 19.906e-3;
/// Speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub finesse: f64,
    /// Total round-trip loss `2π/F`.
    pub total_loss: f64,
    /// Field decay rate κ (rad/s).
    pub kappa: f64,
    /// Probability that an intracavity photon leaves through the output mirror.
    pub escape_probability: f64,
    pub output_transmission: f64,
}

/// `L = 2π/F`, `κ = cL/(4l)`, `P_esc = T₂/L`.
pub fn cavity_derived_params(
    finesse: f64,
    length: f64,
    output_transmission: f64,
) -> Result<CavityParams> {
    ensure(finesse > 0.0 && finesse.is_finite(), || {
        format!("finesse must be positive, got {finesse}")
    })?;
    ensure(length > 0.0 && length.is_finite(), || {
        format!("cavity length must be positive, got {length}")
    })?;
    ensure(output_transmission >= 0.0, || {
        "output transmission must be non-negative".into()
    })?;
    let total_loss = crate::TWO_PI / finesse;
    if output_transmission > total_loss {
        return Err(Error::UnphysicalEscape {
            transmission: output_transmission,
            loss: total_loss,
        });
    }
    Ok(CavityParams {
        finesse,
        total_loss,
        kappa: SPEED_OF_LIGHT * total_loss / (4.0 * length),
        escape_probability: output_transmission / total_loss,
        output_transmission,
    })
}

/// Output transmission implied by a known `(F, P_esc)` pair.
pub fn transmission_from_escape(finesse: f64, escape_probability: f64) -> f64 {
    escape_probability * crate::TWO_PI / finesse
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TWO_PI;

    #[test]
    fn high_finesse_row() {
        let t2 = transmission_from_escape(54e3, 0.78);
        let p = cavity_derived_params(54e3, CAVITY_LENGTH, t2).unwrap();
        assert!((p.kappa / TWO_PI - 70e3).abs() < 2e3);
        assert!((p.escape_probability - 0.78).abs() < 1e-12);
    }

    #[test]
    fn degraded_finesse_row_with_fixed_transmission() {
        let t2 = transmission_from_escape(54e3, 0.78);
        let p = cavity_derived_params(30e3, CAVITY_LENGTH, t2).unwrap();
        assert!((p.kappa / TWO_PI - 126e3).abs() < 2e3);
        assert!((p.escape_probability - 0.43).abs() < 0.01);
    }

    #[test]
    fn published_rows_imply_the_same_mirror() {
        let a = transmission_from_escape(54e3, 0.78);
        let b = transmission_from_escape(30e3, 0.43);
        assert!((a / b - 1.0).abs() < 0.05);
    }

    #[test]
    fn rejects_transmission_above_loss() {
        let err = cavity_derived_params(30e3, CAVITY_LENGTH, 1e-3).unwrap_err();
        assert!(matches!(err, Error::UnphysicalEscape { .. }));
        let p = cavity_derived_params(30e3, CAVITY_LENGTH, TWO_PI / 30e3).unwrap();
        assert!((p.escape_probability - 1.0).abs() < 1e-12);
    }
}
