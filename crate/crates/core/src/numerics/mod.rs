//! Small numerical building blocks shared by the physics modules.

pub mod lsq;
pub mod nelder_mead;
pub mod ode;

pub use lsq::{levenberg_marquardt, linear_fit, LineFit, LmOptions, LmResult};
pub use nelder_mead::{nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use ode::{dormand_prince, DopriOptions, DopriStats};
