use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("solver failed to converge: {0}")]
    SolverFailure(String),

    #[error(
        "linear configuration unstable: mode {mode} has squared frequency ratio {eigenvalue:.3e}"
    )]
    LinearConfigurationUnstable { mode: usize, eigenvalue: f64 },

    #[error("accuracy target not reached: {0}")]
    Accuracy(String),

    #[error("escape probability above one: T2 = {transmission:.3e} exceeds loss {loss:.3e}")]
    UnphysicalEscape { transmission: f64, loss: f64 },

    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),

    #[error("time-step convergence failure: {0}")]
    Convergence(String),

    #[error("time step does not resolve the filter chain: {0}")]
    Sampling(String),

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("argument outside function domain: {0}")]
    Domain(String),

    #[error("incomplete tomography data: {0}")]
    IncompleteData(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("optimizer stagnated: {0}")]
    Optimization(String),

    #[error("configuration invalid: {0}")]
    Validation(String),

    #[error("click log and ion outcomes do not join: {0}")]
    JoinFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag, used by the command-line front end.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::SolverFailure(_) => "solver_failure",
            Error::LinearConfigurationUnstable { .. } => "linear_configuration_unstable",
            Error::Accuracy(_) => "accuracy",
            Error::UnphysicalEscape { .. } => "unphysical_escape",
            Error::InvalidCalibration(_) => "invalid_calibration",
            Error::Convergence(_) => "convergence",
            Error::Sampling(_) => "sampling",
            Error::FitFailure(_) => "fit_failure",
            Error::Domain(_) => "domain",
            Error::IncompleteData(_) => "incomplete_data",
            Error::Degenerate(_) => "degenerate",
            Error::Optimization(_) => "optimization",
            Error::Validation(_) => "validation",
            Error::JoinFailure(_) => "join_failure",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}
