//! Ion-photon two-qubit tomography: reconstruction from Pauli-basis counts,
//! entanglement and fidelity measures, the rotation optimisations and Monte
//! Carlo error bars.

pub mod analysis;
pub mod counts;
pub mod measures;
pub mod optimize;
pub mod reconstruct;
pub mod state;

pub use analysis::{
    analyze, monte_carlo_errors, AnalysisOptions, ErrorEstimates, TomographyResult,
};
pub use counts::{CountTable, PauliBasis, Setting};
pub use measures::{concurrence, fidelity, sqrt_psd};
pub use optimize::{
    optimize_photon_unitary, optimize_z_rotations, z_rotation_objective, PhotonFit, ZRotationFit,
};
pub use reconstruct::{project_to_physical, reconstruct, ReconstructionOptions};
pub use state::TwoQubitState;
