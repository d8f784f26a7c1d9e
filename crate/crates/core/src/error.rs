use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("malformed fan: {0}")]
    Malformed(String),

    #[error("fan `{name}` is not smooth and complete: {reason}")]
    NotSmoothComplete { name: String, reason: String },

    #[error("rays {rays:?} do not form a lattice basis")]
    InvalidBase { rays: Vec<usize> },

    #[error("{0:?} is not a cone of the fan")]
    NotACone(Vec<usize>),

    #[error("divisor has {got} coefficients, fan has {expected} rays")]
    LengthMismatch { expected: usize, got: usize },

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("summand sets did not stabilize below m = {m_max}")]
    NoStabilization { m_max: i64 },

    #[error("degree box not certified after {expansions} expansions")]
    BoxCertification { expansions: usize },

    #[error("vector {0:?} is not contained in any maximal cone")]
    NotInSupport(Vec<i64>),

    #[error("unknown atlas entry `{0}`")]
    UnknownVariety(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fan file: {0}")]
    Json(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
