//! Single-photon generation by a bichromatic cavity-mediated Raman
//! transition, reduced to an effective Λ system.

pub mod analysis;
pub mod cavity;
pub mod model;
pub mod profile;

pub use analysis::{
    detection_budget, efficiency_vs_displacement, efficiency_with_oscillation,
    fit_detection_efficiency, DetectionBudget, DisplacementCurve, XiFit,
};
pub use cavity::{cavity_derived_params, CavityParams};
pub use model::{
    simulate_photon_generation, write_wavepacket_csv, IonDriveContext, PhotonSourceModel,
    Wavepacket,
};
pub use profile::{spatial_coupling, stark_calibrate_detuning, CavityGeometry, RamanBeam};
