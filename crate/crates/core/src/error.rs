use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A quantity that must be real for Hermitian-symmetric data carried an
    /// imaginary part above tolerance.
    #[error("Hermitian symmetry violated: imaginary residual {residual:.3e} (scale {scale:.3e})")]
    SymmetryViolation { residual: f64, scale: f64 },

    /// `sinc(h*omega/2)` (or `cos(h*omega/2)`) is numerically zero for some mode.
    #[error("resonant stepsize: h = {h}, omega = {omega}")]
    ResonantStepsize { h: f64, omega: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:.3e}){}", step_suffix(*.step))]
    NonConvergence {
        iterations: usize,
        residual: f64,
        step: Option<usize>,
    },

    #[error("enumeration too large: {0}")]
    TooLarge(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn step_suffix(step: Option<usize>) -> String {
    match step {
        Some(n) => format!(" at step {n}"),
        None => String::new(),
    }
}

impl Error {
    /// Attach the index of the failing time step to a solver error.
    pub fn at_step(self, index: usize) -> Self {
        match self {
            Error::NonConvergence {
                iterations,
                residual,
                ..
            } => Error::NonConvergence {
                iterations,
                residual,
                step: Some(index),
            },
            other => other,
        }
    }
}
