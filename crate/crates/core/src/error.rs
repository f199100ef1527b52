use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),

    #[error("singular least-squares stencil at point {point} ({reason})")]
    SingularStencil { point: usize, reason: String },

    #[error("empty upwind stencil at point {0}")]
    EmptyUpwindStencil(usize),

    #[error("every WENO sub-stencil is deactivated at point {0}")]
    AllStencilsDeactivated(usize),

    #[error("unknown scheme id `{0}`")]
    UnknownScheme(String),

    #[error("scheme `{scheme}` does not support {what}")]
    Unsupported { scheme: String, what: String },

    #[error("non-finite state after step {step} (t = {t})")]
    NonFiniteState { step: usize, t: f64 },

    #[error("eigenvalue iteration did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
