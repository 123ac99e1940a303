use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("energy {omega} outside the band [{lower}, {upper}]")]
    OutOfBand { omega: f64, lower: f64, upper: f64 },

    #[error("singular scattering at k = {k}, gamma = {gamma}; use the time-domain simulator")]
    SingularScattering { k: f64, gamma: f64 },

    #[error("formula pole: |sin k| = {sin_abs:e} at k = {k}")]
    FormulaPole { k: num_complex::Complex64, sin_abs: f64 },

    #[error("non-normalizable in-continuum state at E = {energy}")]
    NonNormalizable { energy: num_complex::Complex64 },

    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("boundary violation at t = {time}: edge probability fraction {fraction:e}")]
    BoundaryViolation { time: f64, fraction: f64 },

    #[error("step size underflow at t = {time}: h = {step:e}")]
    StepUnderflow { time: f64, step: f64 },

    #[error("config{}: `{key}`: {message}", line.map(|l| format!(" line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, key: String, message: String },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidArgument(_) => 2,
            Error::OutOfBand { .. }
            | Error::SingularScattering { .. }
            | Error::FormulaPole { .. }
            | Error::NonNormalizable { .. }
            | Error::Quadrature { .. }
            | Error::Numerical(_)
            | Error::StepUnderflow { .. } => 3,
            Error::BoundaryViolation { .. } => 4,
            Error::Verification(_) => 5,
            Error::Io(_) => 1,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
